"""Run orchestration: the functions behind the CLI subcommands.

Every run writes its data outputs atomically (temp file + rename) plus a
manifest recording input digests, derived seeds, template keys,
extraction patterns, and counts. All randomness in a run flows from one
master seed, fanned out per purpose through derive_seed, so a single
integer reproduces an experiment byte for byte. Data outputs are
deterministic given (inputs, seed); the manifest additionally records a
wall-clock timestamp and cache-hit counts, which naturally differ
between a fresh run and a resumed one.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import invariance as inv
from .errors import ConfigurationError, DegenerateInputError, ParseError
from .extraction import DEFAULT_PATTERNS, completion_cue, default_rules, extract_id
from .gateway import (
    HallucinationStyle,
    ModelConfig,
    ModelGateway,
    Provider,
    ResponseCache,
    SyntheticProfile,
)
from .metrics import (
    ProbeRecord,
    accuracy,
    error_similarity,
    hallucination_stats,
    jaccard_label_similarity,
    levenshtein,
    read_scored_records,
    repeated_id_counts,
    score,
    write_scored_records,
)
from .ontology import (
    Concept,
    Ontology,
    OntologyKind,
    parse_icd10,
    parse_obo,
    parse_wikidata_sample,
    read_concept_table,
    write_concept_table,
)
from .popularity import (
    BucketAssignment,
    OccurrenceRecord,
    bias_ratio,
    bucket_mean_counts,
    bucketize,
    per_bucket_accuracy,
    read_occurrences,
    write_occurrences,
)
from .prompts import Language, PromptStyle, render, template_for
from .stats import granger_f, spearman

BUCKET_TABLE_HEADER = "bucket,mean_occurrence,accuracy,avpi_pi1,avpi_pi2,avpi_pi3,mean_levenshtein,mean_jaccard,r_bi"
SUMMARY_HEADER = "metric,value"


def derive_seed(master: int, label: str) -> int:
    """Stable per-purpose seed derived from the run's master seed."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    run_id: str
    command: str
    timestamp: str
    ontology: dict | None = None
    model_config_digest: str | None = None
    template_keys: list[str] = field(default_factory=list)
    extraction_rules: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    derived_seeds: dict[str, int] = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _run_id(command: str, parts: list[str]) -> str:
    material = json.dumps([command, *parts])
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _rule_digests() -> dict[str, str]:
    return {
        kind.value: hashlib.sha256(pattern.encode("utf-8")).hexdigest()
        for kind, pattern in DEFAULT_PATTERNS.items()
    }


def _ontology_descriptor(path: Path, ontology: Ontology) -> dict:
    return {
        "kind": ontology.kind.value,
        "file_digest": file_digest(path),
        "concept_count": len(ontology.concepts),
        "universe_count": len(ontology.universe),
    }


def load_ontology(path: str | Path, kind: str | None = None) -> Ontology:
    """Read a canonical concept table, optionally checking its kind."""
    ontology = read_concept_table(Path(path).read_text(encoding="utf-8"))
    if kind is not None and ontology.kind is not OntologyKind(kind.upper()):
        raise ConfigurationError(f"{path} holds a {ontology.kind.value} table, expected {kind.upper()}")
    return ontology


def run_ingest(
    source_path: str | Path,
    kind: str,
    out_dir: str | Path,
    universe_path: str | Path | None = None,
    max_code_chars: int = 4,
) -> RunManifest:
    """Convert a source resource into the canonical concept table."""
    source_path = Path(source_path)
    out_dir = Path(out_dir)
    kind_enum = OntologyKind(kind.upper())
    text = source_path.read_text(encoding="utf-8")
    if kind_enum in (OntologyKind.GO, OntologyKind.UBERON):
        ontology = parse_obo(text, kind_enum.value)
    elif kind_enum is OntologyKind.ICD10:
        ontology = parse_icd10(text, max_code_chars=max_code_chars)
    else:
        universe_text = Path(universe_path).read_text(encoding="utf-8") if universe_path else None
        ontology = parse_wikidata_sample(text, universe_text)

    concepts_path = out_dir / "concepts.csv"
    atomic_write_text(concepts_path, write_concept_table(ontology))
    manifest = RunManifest(
        run_id=_run_id("ingest", [file_digest(source_path), kind_enum.value, str(max_code_chars)]),
        command="ingest",
        timestamp=_now(),
        ontology=_ontology_descriptor(concepts_path, ontology),
        parameters={"source": str(source_path), "kind": kind_enum.value, "max_code_chars": max_code_chars},
        counts={"concepts": len(ontology.concepts), "universe": len(ontology.universe)},
        outputs={"concepts": str(concepts_path)},
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _style_for(config: ModelConfig, style: str | None) -> PromptStyle:
    if style is not None:
        return PromptStyle(style.upper())
    return PromptStyle.COMPLETION if config.provider is Provider.COMPLETION_HTTP else PromptStyle.CHAT


def run_probe(
    ontology_path: str | Path,
    config: ModelConfig | str | Path,
    out_dir: str | Path,
    sample: int | None = None,
    seed: int = 0,
    style: str | None = None,
    language: str = "EN",
    kind: str | None = None,
    cache_path: str | Path | None = None,
    transport=None,
    profile: SyntheticProfile | None = None,
) -> RunManifest:
    """Probe every concept (or a seeded sample) and write the scored run.

    Requests already present in the response cache are not re-issued, so
    an interrupted run picks up where it stopped. Requests that exhaust
    their retries are scored as wrong with an empty response and counted
    in the manifest; the CLI turns a nonzero failure count into exit
    code 4.
    """
    ontology_path = Path(ontology_path)
    out_dir = Path(out_dir)
    if not isinstance(config, ModelConfig):
        config = ModelConfig.from_file(config)
    ontology = load_ontology(ontology_path, kind)
    if not ontology.concepts:
        raise ConfigurationError(f"{ontology_path} has no probeable concepts")

    prompt_style = _style_for(config, style)
    template = template_for(ontology.kind, prompt_style, Language(language.upper()))

    concepts = list(ontology.concepts)
    derived: dict[str, int] = {}
    if sample is not None:
        if sample < 1:
            raise ConfigurationError("--sample must be positive")
        if sample < len(concepts):
            derived["probe-sample"] = derive_seed(seed, "probe-sample")
            rng = random.Random(derived["probe-sample"])
            keep = sorted(rng.sample(range(len(concepts)), sample))
            concepts = [concepts[i] for i in keep]

    cache = ResponseCache(cache_path if cache_path is not None else out_dir / "cache.ndjson")
    gateway = ModelGateway(config, profile=profile, cache=cache, transport=transport)
    prompts = [render(template, concept) for concept in concepts]
    responses = gateway.complete_batch([(p, 0, None) for p in prompts])

    rule = default_rules()[ontology.kind]
    cue = completion_cue(template.text)
    records: list[ProbeRecord] = []
    failed = 0
    cached = 0
    for concept, response in zip(concepts, responses):
        if response is None:
            failed += 1
            records.append(score(ontology, concept, None, ""))
            continue
        if response.from_cache:
            cached += 1
        records.append(score(ontology, concept, extract_id(rule, cue + response.raw_text), response.raw_text))

    scored_path = out_dir / "scored.ndjson"
    atomic_write_text(scored_path, write_scored_records(records))
    manifest = RunManifest(
        run_id=_run_id(
            "probe",
            [file_digest(ontology_path), config.digest(), str(seed), str(sample), prompt_style.value, language.upper()],
        ),
        command="probe",
        timestamp=_now(),
        ontology=_ontology_descriptor(ontology_path, ontology),
        model_config_digest=config.digest(),
        template_keys=[f"{ontology.kind.value}/{prompt_style.value}/{language.upper()}"],
        extraction_rules=_rule_digests(),
        seed=seed,
        derived_seeds=derived,
        parameters={"sample": sample, "style": prompt_style.value, "language": language.upper()},
        counts={
            "requested": len(concepts),
            "completed": len(concepts) - failed,
            "failed": failed,
            "from_cache": cached,
            "correct": sum(1 for r in records if r.correct),
        },
        outputs={"scored": str(scored_path), "cache": str(cache.path)},
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _series_for_correlation(
    assignment: BucketAssignment,
    occurrences: list[OccurrenceRecord],
    records: list[ProbeRecord],
) -> tuple[list[float], list[float], list[int]]:
    means = bucket_mean_counts(assignment, occurrences)
    accuracies = per_bucket_accuracy(assignment, records)
    xs, ys, buckets = [], [], []
    for (bucket, acc), mean in zip(accuracies, means):
        if acc is None or mean is None:
            continue
        xs.append(mean)
        ys.append(acc)
        buckets.append(bucket)
    return xs, ys, buckets


def _float_or_none(value):
    return None if value is None else float(value)


def run_analyze(
    scored_path: str | Path,
    ontology_path: str | Path,
    occurrence_paths: list[str | Path],
    out_dir: str | Path,
    buckets: int = 50,
    lag: int = 3,
    permutations: int = 10000,
    top_k: int = 500,
    seed: int = 0,
    allow_missing: bool = False,
) -> RunManifest:
    """Bucketed popularity analysis of one scored run.

    The first occurrence file defines the buckets and the popularity
    series; a second file, when given, is compared against the first
    over shared concepts (same bucketing, per-bucket mean vs mean).
    """
    scored_path = Path(scored_path)
    ontology_path = Path(ontology_path)
    out_dir = Path(out_dir)
    if not occurrence_paths:
        raise ConfigurationError("analyze requires at least one occurrence file")
    if len(occurrence_paths) > 2:
        raise ConfigurationError("analyze takes at most two occurrence files")

    ontology = load_ontology(ontology_path)
    records = read_scored_records(scored_path.read_text(encoding="utf-8"), ontology)
    if not records:
        raise ParseError(f"{scored_path} holds no scored records")
    occurrences = read_occurrences(Path(occurrence_paths[0]).read_text(encoding="utf-8"))
    if not occurrences:
        raise ParseError(f"{occurrence_paths[0]} holds no occurrence records")

    assignment = bucketize(occurrences, buckets)
    missing = sorted({r.concept.id for r in records if r.concept.id not in assignment.membership})
    excluded = 0
    if missing:
        if not allow_missing:
            shown = ", ".join(missing[:5])
            raise ConfigurationError(
                f"{len(missing)} scored concepts have no occurrence row (e.g. {shown}); "
                "rerun with --allow-missing to exclude them"
            )
        excluded = sum(1 for r in records if r.concept.id in set(missing))
        records = [r for r in records if r.concept.id not in set(missing)]
        if not records:
            raise ConfigurationError("all scored records were excluded for missing occurrence rows")

    xs, ys, series_buckets = _series_for_correlation(assignment, occurrences, records)
    spearman_seed = derive_seed(seed, "analyze-spearman")
    correlation = spearman(xs, ys, n_permutations=permutations, seed=spearman_seed)
    # Granger needs a longer series than Spearman (3*lag + 2 points); a
    # short bucket series shouldn't take the correlation result with it.
    granger_block: dict
    try:
        causality = granger_f(xs, ys, lag=lag)
        granger_block = {
            "f_statistic": causality.f_statistic,
            "p_value": causality.p_value,
            "lag": causality.lag,
            "n_effective": causality.n_effective,
            "df": list(causality.df),
        }
    except (ValueError, DegenerateInputError) as exc:
        granger_block = {"error": str(exc), "lag": lag}

    means = bucket_mean_counts(assignment, occurrences)
    acc_rows = per_bucket_accuracy(assignment, records)
    wrong_by_bucket: dict[int, list[ProbeRecord]] = {}
    for r in records:
        if not r.correct and r.predicted is not None:
            wrong_by_bucket.setdefault(assignment.membership[r.concept.id], []).append(r)
    per_bucket = []
    for (bucket, acc), mean in zip(acc_rows, means):
        wrong = wrong_by_bucket.get(bucket, [])
        lev = [levenshtein(r.predicted, r.concept.id) for r in wrong]
        jac = [
            jaccard_label_similarity(r.concept.label, ontology.id_index[r.predicted].label)
            for r in wrong
            if r.predicted in ontology.id_index
        ]
        per_bucket.append(
            {
                "bucket": bucket,
                "occupancy": assignment.occupancy[bucket - 1],
                "mean_occurrence": _float_or_none(mean),
                "n_scored": sum(1 for r in records if assignment.membership[r.concept.id] == bucket),
                "accuracy": _float_or_none(acc),
                "mean_levenshtein": sum(lev) / len(lev) if lev else None,
                "n_levenshtein": len(lev),
                "mean_jaccard": sum(jac) / len(jac) if jac else None,
                "n_jaccard": len(jac),
            }
        )

    overall_similarity = error_similarity(ontology, records)
    overall_hallucination = hallucination_stats(ontology, records)
    repeated = repeated_id_counts(records)
    bias = bias_ratio(assignment, repeated, top_k) if repeated else None

    report = {
        "n_buckets": buckets,
        "n_records": len(records),
        "excluded_missing_occurrence": excluded,
        "overall": {
            "accuracy": accuracy(records),
            "mean_levenshtein": overall_similarity.mean_levenshtein,
            "n_levenshtein": overall_similarity.n_levenshtein,
            "mean_jaccard": overall_similarity.mean_jaccard,
            "n_jaccard": overall_similarity.n_jaccard,
            "unique_predicted": overall_hallucination.unique_predicted,
            "pct_unique_invented": overall_hallucination.pct_unique_invented,
            "pct_errors_from_invented": overall_hallucination.pct_errors_from_invented,
        },
        "per_bucket": per_bucket,
        "spearman": {
            "rho": correlation.rho,
            "p_value": correlation.p_value,
            "n_permutations": correlation.n_permutations,
            "seed": correlation.seed,
            "series_buckets": series_buckets,
        },
        "granger": granger_block,
        "bias": None
        if bias is None
        else {
            "k": bias.k,
            "n_concepts": bias.n_concepts,
            "unassigned": bias.unassigned,
            "per_bucket": [
                {"bucket": b.bucket, "n_top": b.n_top, "bucket_size": b.bucket_size, "ratio": _float_or_none(b.ratio)}
                for b in bias.per_bucket
            ],
        },
    }

    digests = [file_digest(scored_path), file_digest(ontology_path)]
    parameters = {
        "buckets": buckets,
        "lag": lag,
        "permutations": permutations,
        "top_k": top_k,
        "allow_missing": allow_missing,
        "occurrences": [str(p) for p in occurrence_paths],
    }
    if len(occurrence_paths) == 2:
        report["occurrence_comparison"] = _compare_occurrences(
            occurrences, Path(occurrence_paths[1]), buckets, permutations, derive_seed(seed, "analyze-comparison"), lag
        )
    for p in occurrence_paths:
        digests.append(file_digest(p))

    analysis_path = out_dir / "analysis.json"
    atomic_write_text(analysis_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest = RunManifest(
        run_id=_run_id("analyze", digests + [str(seed), str(buckets), str(lag), str(permutations), str(top_k)]),
        command="analyze",
        timestamp=_now(),
        ontology=_ontology_descriptor(ontology_path, ontology),
        seed=seed,
        derived_seeds={"analyze-spearman": spearman_seed},
        parameters=parameters,
        counts={"records": len(records), "excluded": excluded},
        outputs={"analysis": str(analysis_path)},
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _compare_occurrences(
    primary: list[OccurrenceRecord],
    secondary_path: Path,
    buckets: int,
    permutations: int,
    seed: int,
    lag: int,
) -> dict:
    secondary = read_occurrences(secondary_path.read_text(encoding="utf-8"))
    secondary_by_id = {r.concept_id: r for r in secondary}
    shared = [r for r in primary if r.concept_id in secondary_by_id]
    if len(shared) < 3:
        raise DegenerateInputError("fewer than 3 concepts shared between the two occurrence files")
    assignment = bucketize(shared, buckets)
    xs_all = bucket_mean_counts(assignment, shared)
    ys_all = bucket_mean_counts(assignment, [secondary_by_id[r.concept_id] for r in shared])
    xs = [x for x, y in zip(xs_all, ys_all) if x is not None and y is not None]
    ys = [y for x, y in zip(xs_all, ys_all) if x is not None and y is not None]
    correlation = spearman(xs, ys, n_permutations=permutations, seed=seed)
    out = {
        "n_shared": len(shared),
        "spearman": {"rho": correlation.rho, "p_value": correlation.p_value},
        "granger": None,
    }
    try:
        causality = granger_f(xs, ys, lag=lag)
        out["granger"] = {"f_statistic": causality.f_statistic, "p_value": causality.p_value, "lag": causality.lag}
    except (ValueError, DegenerateInputError) as exc:
        out["granger"] = {"error": str(exc)}
    return out


def run_invariance(
    ontology_path: str | Path,
    config: ModelConfig | str | Path,
    occurrence_path: str | Path,
    out_dir: str | Path,
    strategies: tuple[str, ...] = ("PI1", "PI2", "PI3"),
    buckets: int = 50,
    k_sample: int = 20,
    m_repeats: int = 10,
    permutations: int = 10000,
    seed: int = 0,
    style: str | None = None,
    cache_path: str | Path | None = None,
    transport=None,
    profile: SyntheticProfile | None = None,
) -> RunManifest:
    """Run the selected invariance strategies over a per-bucket sample.

    Writes one record file per strategy plus a report correlating AvPI
    with answer-level accuracy across buckets. A constant AvPI series
    (PI1 against a deterministic model) has no rank correlation; the
    report records that reason instead of a coefficient.
    """
    ontology_path = Path(ontology_path)
    out_dir = Path(out_dir)
    if not isinstance(config, ModelConfig):
        config = ModelConfig.from_file(config)
    ontology = load_ontology(ontology_path)
    occurrences = read_occurrences(Path(occurrence_path).read_text(encoding="utf-8"))
    if not occurrences:
        raise ParseError(f"{occurrence_path} holds no occurrence records")
    chosen = [inv.Strategy(s.upper()) for s in strategies]
    if not chosen:
        raise ConfigurationError("no invariance strategies selected")
    prompt_style = _style_for(config, style)

    assignment = bucketize(occurrences, buckets)
    sample_seed = derive_seed(seed, "invariance-sample")
    sampled = inv.sample_concepts(ontology, assignment, k=k_sample, seed=sample_seed)
    concepts = [c for bucket in sorted(sampled) for c in sampled[bucket]]
    if not concepts:
        raise ConfigurationError("sampling produced no concepts; occurrence file matches no ontology concepts")

    cache = ResponseCache(cache_path if cache_path is not None else out_dir / "cache.ndjson")
    gateway = ModelGateway(config, profile=profile, cache=cache, transport=transport)

    outputs: dict[str, str] = {"cache": str(cache.path)}
    report: dict = {
        "n_buckets": buckets,
        "k_sample": k_sample,
        "n_sampled": len(concepts),
        "strategies": {},
    }
    counts: dict[str, int] = {"sampled": len(concepts)}
    for strategy in chosen:
        if strategy is inv.Strategy.PI1:
            records = inv.run_pi1(gateway, concepts, m=m_repeats, style=prompt_style)
        elif strategy is inv.Strategy.PI2:
            records = inv.run_pi2(gateway, concepts, style=prompt_style)
        else:
            records = inv.run_pi3(gateway, concepts, style=prompt_style)
        path = out_dir / f"invariance_{strategy.value.lower()}.ndjson"
        atomic_write_text(path, inv.write_invariance_records(records))
        outputs[strategy.value.lower()] = str(path)
        counts[f"answers_{strategy.value.lower()}"] = sum(r.m for r in records)

        rows = inv.aggregate_avpi(records, assignment, ontology)
        avpi_series = [row.avpi for row in rows]
        acc_series = [row.accuracy for row in rows]
        strategy_report = {
            "per_bucket": [
                {
                    "bucket": row.bucket,
                    "avpi": row.avpi,
                    "accuracy": row.accuracy,
                    "k_sampled": row.k_sampled,
                }
                for row in rows
            ],
        }
        if len(avpi_series) < 3:
            strategy_report["avpi_accuracy_spearman"] = {
                "error": f"only {len(avpi_series)} occupied buckets; correlation needs at least 3"
            }
        else:
            try:
                correlation = spearman(
                    avpi_series, acc_series, n_permutations=permutations, seed=derive_seed(seed, f"avpi-{strategy.value}")
                )
                strategy_report["avpi_accuracy_spearman"] = {
                    "rho": correlation.rho,
                    "p_value": correlation.p_value,
                }
            except DegenerateInputError as exc:
                strategy_report["avpi_accuracy_spearman"] = {"error": str(exc)}
        report["strategies"][strategy.value] = strategy_report

    report_path = out_dir / "invariance_report.json"
    atomic_write_text(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs["report"] = str(report_path)

    manifest = RunManifest(
        run_id=_run_id(
            "invariance",
            [
                file_digest(ontology_path),
                config.digest(),
                file_digest(occurrence_path),
                str(seed),
                str(buckets),
                str(k_sample),
                str(m_repeats),
                ",".join(s.value for s in chosen),
            ],
        ),
        command="invariance",
        timestamp=_now(),
        ontology=_ontology_descriptor(ontology_path, ontology),
        model_config_digest=config.digest(),
        template_keys=sorted(
            {f"{ontology.kind.value}/{prompt_style.value}/{lang.value}" for lang in inv.DEFAULT_LANGUAGES}
            if inv.Strategy.PI3 in chosen
            else {f"{ontology.kind.value}/{prompt_style.value}/EN"}
        ),
        extraction_rules=_rule_digests(),
        seed=seed,
        derived_seeds={"invariance-sample": sample_seed},
        parameters={
            "strategies": [s.value for s in chosen],
            "buckets": buckets,
            "k_sample": k_sample,
            "m_repeats": m_repeats,
            "permutations": permutations,
            "style": prompt_style.value,
        },
        counts=counts,
        outputs=outputs,
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def default_recall_curve(count: int, max_count: int) -> float:
    """Monotone recall curve: log-scaled occurrence share, capped at 1."""
    return min(1.0, math.log1p(count) / math.log1p(max_count))


def run_simulate(
    out_dir: str | Path,
    size: int = 1000,
    seed: int = 0,
    max_exponent: float = 5.0,
    hallucination_style: str = "INVENTED",
    temperature_sensitivity: float = 0.5,
) -> RunManifest:
    """Generate a synthetic GO-shaped ontology with a planted long tail.

    Occurrence counts are log-uniform (heavy-tailed like real web
    counts) and recall rises monotonically with popularity, so the
    planted correlation between popularity and accuracy is recoverable
    end to end. Also writes a ready-to-use SYNTHETIC model config.
    """
    out_dir = Path(out_dir)
    if size < 1:
        raise ConfigurationError("--size must be positive")
    if max_exponent <= 0:
        raise ConfigurationError("--max-exponent must be positive")
    style = HallucinationStyle(hallucination_style.upper())
    if temperature_sensitivity < 0:
        raise ConfigurationError("--temperature-sensitivity must be non-negative")

    rng = random.Random(derive_seed(seed, "simulate-counts"))
    concepts = []
    occurrence_records = []
    counts = []
    for i in range(1, size + 1):
        concept_id = f"GO:{i:07d}"
        concepts.append(Concept(concept_id, f"synthetic concept {i:07d}", OntologyKind.GO))
        counts.append(max(1, round(10 ** rng.uniform(0.0, max_exponent))))
    max_count = max(counts)
    curve = {}
    popularity = {}
    for concept, count in zip(concepts, counts):
        occurrence_records.append(OccurrenceRecord(concept.id, "synthetic", count))
        curve[concept.id] = default_recall_curve(count, max_count)
        popularity[concept.id] = count

    ontology = Ontology(OntologyKind.GO, tuple(concepts), frozenset(c.id for c in concepts))
    profile = SyntheticProfile(
        memorization_curve=curve,
        hallucination_style=style,
        popularity=popularity,
        temperature_sensitivity=temperature_sensitivity,
    )
    model_config = {
        "provider": "SYNTHETIC",
        "model_name": "synthetic-memorizer",
        "temperature": 0.0,
        "seed": derive_seed(seed, "synthetic-model"),
        "profile_path": "profile.json",
    }

    concepts_path = out_dir / "concepts.csv"
    occurrences_path = out_dir / "occurrences.csv"
    profile_path = out_dir / "profile.json"
    config_path = out_dir / "model_config.json"
    atomic_write_text(concepts_path, write_concept_table(ontology))
    atomic_write_text(occurrences_path, write_occurrences(occurrence_records))
    atomic_write_text(profile_path, json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n")
    atomic_write_text(config_path, json.dumps(model_config, indent=2, sort_keys=True) + "\n")

    manifest = RunManifest(
        run_id=_run_id("simulate", [str(size), str(seed), str(max_exponent), style.value, str(temperature_sensitivity)]),
        command="simulate",
        timestamp=_now(),
        seed=seed,
        derived_seeds={
            "simulate-counts": derive_seed(seed, "simulate-counts"),
            "synthetic-model": derive_seed(seed, "synthetic-model"),
        },
        parameters={
            "size": size,
            "max_exponent": max_exponent,
            "hallucination_style": style.value,
            "temperature_sensitivity": temperature_sensitivity,
        },
        counts={"concepts": size, "min_count": min(counts), "max_count": max_count},
        outputs={
            "concepts": str(concepts_path),
            "occurrences": str(occurrences_path),
            "profile": str(profile_path),
            "model_config": str(config_path),
        },
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_report(
    analysis_path: str | Path,
    out_dir: str | Path,
    invariance_path: str | Path | None = None,
) -> RunManifest:
    """Flatten analysis (and optional invariance) JSON into plot-ready CSVs.

    bucket_table.csv has exactly n_buckets rows with the documented
    header; summary.csv is a two-column metric,value table.
    """
    analysis_path = Path(analysis_path)
    out_dir = Path(out_dir)
    try:
        analysis = json.loads(analysis_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read analysis file {analysis_path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"analysis file {analysis_path} is not valid JSON: {exc}") from exc

    avpi: dict[str, dict[int, float]] = {"PI1": {}, "PI2": {}, "PI3": {}}
    if invariance_path is not None:
        try:
            invariance_report = json.loads(Path(invariance_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read invariance report {invariance_path}: {exc}") from exc
        except ValueError as exc:
            raise ParseError(f"invariance report {invariance_path} is not valid JSON: {exc}") from exc
        for name, strategy_report in invariance_report.get("strategies", {}).items():
            for row in strategy_report.get("per_bucket", []):
                avpi.setdefault(name, {})[int(row["bucket"])] = float(row["avpi"])

    ratios: dict[int, float | None] = {}
    if analysis.get("bias"):
        for row in analysis["bias"]["per_bucket"]:
            ratios[int(row["bucket"])] = row["ratio"]

    lines = [BUCKET_TABLE_HEADER]
    for row in analysis["per_bucket"]:
        bucket = int(row["bucket"])
        cells = [
            str(bucket),
            _format_cell(row.get("mean_occurrence")),
            _format_cell(row.get("accuracy")),
            _format_cell(avpi["PI1"].get(bucket)),
            _format_cell(avpi["PI2"].get(bucket)),
            _format_cell(avpi["PI3"].get(bucket)),
            _format_cell(row.get("mean_levenshtein")),
            _format_cell(row.get("mean_jaccard")),
            _format_cell(ratios.get(bucket)),
        ]
        lines.append(",".join(cells))
    bucket_table = "\n".join(lines) + "\n"

    overall = analysis["overall"]
    summary_rows = [
        ("n_records", analysis.get("n_records")),
        ("accuracy", overall.get("accuracy")),
        ("mean_levenshtein", overall.get("mean_levenshtein")),
        ("n_levenshtein", overall.get("n_levenshtein")),
        ("mean_jaccard", overall.get("mean_jaccard")),
        ("n_jaccard", overall.get("n_jaccard")),
        ("unique_predicted", overall.get("unique_predicted")),
        ("pct_unique_invented", overall.get("pct_unique_invented")),
        ("pct_errors_from_invented", overall.get("pct_errors_from_invented")),
        ("spearman_rho", analysis["spearman"].get("rho")),
        ("spearman_p_value", analysis["spearman"].get("p_value")),
        ("granger_f", analysis["granger"].get("f_statistic")),
        ("granger_p_value", analysis["granger"].get("p_value")),
        ("granger_lag", analysis["granger"].get("lag")),
        ("bias_k", analysis["bias"].get("k") if analysis.get("bias") else None),
        ("bias_unassigned", analysis["bias"].get("unassigned") if analysis.get("bias") else None),
    ]
    summary = SUMMARY_HEADER + "\n" + "\n".join(f"{name},{_format_cell(value)}" for name, value in summary_rows) + "\n"

    bucket_path = out_dir / "bucket_table.csv"
    summary_path = out_dir / "summary.csv"
    atomic_write_text(bucket_path, bucket_table)
    atomic_write_text(summary_path, summary)

    digests = [file_digest(analysis_path)]
    if invariance_path is not None:
        digests.append(file_digest(invariance_path))
    manifest = RunManifest(
        run_id=_run_id("report", digests),
        command="report",
        timestamp=_now(),
        parameters={"analysis": str(analysis_path), "invariance": str(invariance_path) if invariance_path else None},
        counts={"bucket_rows": len(analysis["per_bucket"])},
        outputs={"bucket_table": str(bucket_path), "summary": str(summary_path)},
    )
    manifest.save(out_dir / "manifest.json")
    return manifest
