"""ID extraction patterns and normalizers."""

from __future__ import annotations

import random
import re
import string

import pytest

from ontoprobe import (
    DEFAULT_PATTERNS,
    OntologyKind,
    completion_cue,
    default_rules,
    extract_id,
    normalize_id,
)
from ontoprobe.ontology import ID_PATTERNS

SPEC_PATTERNS = {
    OntologyKind.GO: r"(?i)GO[\s:]*([0-9]{1,7})",
    OntologyKind.UBERON: r"(?i)UBERON[\s:_]*([0-9]{1,7})",
    OntologyKind.ICD10: r"(?i)\b([A-Z][0-9]{2}(?:\.?[0-9A-Z]{1,4})?)\b",
    OntologyKind.WIKIDATA: r"(?i)\bQ0*([0-9]+)\b",
}


def test_default_patterns_bit_exact():
    assert DEFAULT_PATTERNS == SPEC_PATTERNS


class TestNormalizeId:
    def test_go_zero_padding(self):
        assert normalize_id(OntologyKind.GO, "GO:1822") == "GO:0001822"
        assert normalize_id(OntologyKind.GO, "1822") == "GO:0001822"

    def test_icd_dotted_form(self):
        assert normalize_id(OntologyKind.ICD10, "C341") == "C34.1"
        assert normalize_id(OntologyKind.ICD10, "a00") == "A00"

    def test_wikidata_leading_zeros(self):
        assert normalize_id(OntologyKind.WIKIDATA, "q042") == "Q42"
        assert normalize_id(OntologyKind.WIKIDATA, "42") == "Q42"

    def test_overlong_numeric_part_absent(self):
        assert normalize_id(OntologyKind.GO, "12345678") is None
        assert normalize_id(OntologyKind.UBERON, "GO:0001822") is None

    def test_q_zero_absent(self):
        assert normalize_id(OntologyKind.WIKIDATA, "0") is None
        assert normalize_id(OntologyKind.WIKIDATA, "Q000") is None

    def test_idempotent(self):
        cases = [
            (OntologyKind.GO, "GO:1822"),
            (OntologyKind.UBERON, "UBERON_948"),
            (OntologyKind.ICD10, "e119"),
            (OntologyKind.WIKIDATA, "q042"),
        ]
        for kind, raw in cases:
            once = normalize_id(kind, raw)
            assert normalize_id(kind, once) == once


class TestExtractId:
    def test_spec_examples(self):
        rule = default_rules()[OntologyKind.GO]
        assert extract_id(rule, "The ID is GO:0001822.") == "GO:0001822"
        assert extract_id(rule, "go: 0001822") == "GO:0001822"
        assert extract_id(rule, "I don't know.") is None

    def test_newline_between_prefix_and_digits(self):
        rule = default_rules()[OntologyKind.GO]
        assert extract_id(rule, "GO:\n0001822") == "GO:0001822"

    def test_first_match_wins(self):
        rule = default_rules()[OntologyKind.GO]
        assert extract_id(rule, "GO:0000001 or maybe GO:0000002") == "GO:0000001"

    def test_idempotent_on_canonical_ids(self):
        rules = default_rules()
        canonical = {
            OntologyKind.GO: "GO:0001822",
            OntologyKind.UBERON: "UBERON:0000948",
            OntologyKind.ICD10: "C34.1",
            OntologyKind.WIKIDATA: "Q42",
        }
        for kind, concept_id in canonical.items():
            assert extract_id(rules[kind], concept_id) == concept_id

    def test_golden_file(self, golden_cases):
        rules = default_rules()
        for kind, raw_text, expected in golden_cases:
            assert extract_id(rules[kind], raw_text) == expected, (kind, raw_text)

    def test_soundness_and_totality_fuzz(self):
        # Arbitrary text never raises; anything extracted is canonical.
        rng = random.Random(20240817)
        rules = default_rules()
        alphabet = string.ascii_letters + string.digits + " .:_-\"'\n()[]{}!?"
        for _ in range(2000):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 60)))
            for kind, rule in rules.items():
                got = extract_id(rule, text)
                if got is not None:
                    assert ID_PATTERNS[kind].fullmatch(got), (kind, text, got)


class TestCompletionCue:
    def test_prefixed_templates(self):
        assert completion_cue('In the Gene Ontology, the GO ID of the label "x" is GO:') == "GO:"
        assert completion_cue('In the Uberon Ontology, the Uberon ID of the label "x" is UBERON:') == "UBERON:"

    def test_uncued_templates(self):
        assert completion_cue('In the ICD-10, the ICD-10 ID of the label "x" is') == ""
        assert completion_cue('Provide the GO ID for the label "x". In the answer write only the corresponding GO ID.') == ""

    def test_glues_bare_digit_continuations(self):
        rule = default_rules()[OntologyKind.GO]
        prompt = 'In the Gene Ontology, the GO ID of the label "kidney development" is GO:'
        assert extract_id(rule, completion_cue(prompt) + "0001822") == "GO:0001822"
        assert extract_id(rule, completion_cue(prompt) + " 1822") == "GO:0001822"


@pytest.fixture
def golden_cases():
    import csv
    from pathlib import Path

    path = Path(__file__).parent / "data" / "extraction_golden.csv"
    cases = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cases.append((OntologyKind(row["kind"]), row["raw_text"], row["expected"] or None))
    assert len(cases) == 20
    return cases


def test_rule_pattern_must_compile():
    from ontoprobe import ExtractionRule

    with pytest.raises(re.error):
        ExtractionRule(OntologyKind.GO, "(unbalanced", "bad")
