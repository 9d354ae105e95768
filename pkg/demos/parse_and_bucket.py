"""Parse a small OBO snippet and bucket its concepts by corpus popularity."""

from ontoprobe import OccurrenceRecord, bucket_mean_counts, bucketize, parse_obo

OBO = """\
format-version: 1.2

[Term]
id: GO:0001822
name: kidney development

[Term]
id: GO:0060993
name: kidney morphogenesis

[Term]
id: GO:0060219
name: camera-type eye photoreceptor cell differentiation

[Term]
id: GO:0003179
name: heart valve morphogenesis

[Term]
id: GO:0051302
name: regulation of cell division

[Term]
id: GO:0098743
name: cell aggregation
"""

# made-up web hit counts, heavy-tailed like the real thing
COUNTS = {
    "GO:0001822": 95000,
    "GO:0060993": 4100,
    "GO:0060219": 12,
    "GO:0003179": 870,
    "GO:0051302": 23000,
    "GO:0098743": 3,
}


def main() -> None:
    ontology = parse_obo(OBO, "GO")
    print(f"parsed {len(ontology.concepts)} concepts, universe of {len(ontology.universe)} IDs")

    records = [OccurrenceRecord(cid, "web", n) for cid, n in COUNTS.items()]
    assignment = bucketize(records, n_buckets=3)
    print(f"bucket boundaries (upper counts): {assignment.boundaries}")
    print(f"occupancy: {assignment.occupancy}")
    for bucket, mean in enumerate(bucket_mean_counts(assignment, records), start=1):
        members = sorted(cid for cid, b in assignment.membership.items() if b == bucket)
        print(f"bucket {bucket}: mean count {mean:.1f}, members {members}")


if __name__ == "__main__":
    main()
