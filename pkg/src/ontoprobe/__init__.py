"""Measure how much of an ontology's ID/label mapping a language model memorized.

The pipeline: parse an ontology into a canonical concept table, prompt a
model for the ID of each label, extract and normalize the predicted IDs,
then relate accuracy and hallucination structure to concept popularity
(quantile buckets over occurrence counts, rank correlation, lagged
regression) and to prediction invariance under repeats, temperatures,
and prompt languages. A seeded synthetic memorizer stands in for a real
model so the whole chain can be exercised offline.
"""

from __future__ import annotations

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    OntoprobeError,
    ParseError,
    TransportExhausted,
)
from .extraction import (
    DEFAULT_PATTERNS,
    ExtractionRule,
    completion_cue,
    default_rules,
    extract_id,
    normalize_id,
)
from .gateway import (
    HallucinationStyle,
    ModelConfig,
    ModelGateway,
    ModelResponse,
    Provider,
    ResponseCache,
    SyntheticProfile,
    cache_key,
    synthetic_respond,
)
from .invariance import (
    BucketInvariance,
    InvarianceRecord,
    Strategy,
    aggregate_avpi,
    pi_value,
    read_invariance_records,
    run_pi1,
    run_pi2,
    run_pi3,
    sample_concepts,
    unique_answers,
    write_invariance_records,
)
from .metrics import (
    ErrorSimilarity,
    HallucinationStats,
    ProbeRecord,
    accuracy,
    error_similarity,
    hallucination_stats,
    is_correct,
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
    canonical_icd10,
    normalize_label,
    parse_icd10,
    parse_obo,
    parse_wikidata_sample,
    read_concept_table,
    write_concept_table,
)
from .popularity import (
    BiasRatioReport,
    BucketAssignment,
    BucketBias,
    OccurrenceRecord,
    bias_ratio,
    bucket_mean_counts,
    bucketize,
    per_bucket_accuracy,
    read_occurrences,
    write_occurrences,
)
from .prompts import (
    Language,
    PromptStyle,
    PromptTemplate,
    RenderedPrompt,
    builtin_templates,
    render,
    template_for,
)
from .runs import (
    RunManifest,
    atomic_write_text,
    default_recall_curve,
    derive_seed,
    file_digest,
    load_ontology,
    run_analyze,
    run_ingest,
    run_invariance,
    run_probe,
    run_report,
    run_simulate,
)
from .stats import CorrelationResult, GrangerResult, granger_f, spearman

__version__ = "0.1.0"

__all__ = [
    "BiasRatioReport",
    "BucketAssignment",
    "BucketBias",
    "BucketInvariance",
    "Concept",
    "ConfigurationError",
    "CorrelationResult",
    "DEFAULT_PATTERNS",
    "DegenerateInputError",
    "ErrorSimilarity",
    "ExtractionRule",
    "GrangerResult",
    "HallucinationStats",
    "HallucinationStyle",
    "InvarianceRecord",
    "Language",
    "ModelConfig",
    "ModelGateway",
    "ModelResponse",
    "OccurrenceRecord",
    "Ontology",
    "OntologyKind",
    "OntoprobeError",
    "ParseError",
    "ProbeRecord",
    "PromptStyle",
    "PromptTemplate",
    "Provider",
    "RenderedPrompt",
    "ResponseCache",
    "RunManifest",
    "Strategy",
    "SyntheticProfile",
    "TransportExhausted",
    "accuracy",
    "atomic_write_text",
    "aggregate_avpi",
    "bias_ratio",
    "bucket_mean_counts",
    "bucketize",
    "builtin_templates",
    "cache_key",
    "completion_cue",
    "canonical_icd10",
    "default_recall_curve",
    "default_rules",
    "derive_seed",
    "error_similarity",
    "extract_id",
    "file_digest",
    "granger_f",
    "hallucination_stats",
    "is_correct",
    "jaccard_label_similarity",
    "levenshtein",
    "load_ontology",
    "normalize_id",
    "normalize_label",
    "parse_icd10",
    "parse_obo",
    "parse_wikidata_sample",
    "per_bucket_accuracy",
    "pi_value",
    "read_concept_table",
    "read_invariance_records",
    "read_occurrences",
    "read_scored_records",
    "render",
    "repeated_id_counts",
    "run_analyze",
    "run_ingest",
    "run_invariance",
    "run_pi1",
    "run_pi2",
    "run_pi3",
    "run_probe",
    "run_report",
    "run_simulate",
    "sample_concepts",
    "score",
    "spearman",
    "synthetic_respond",
    "template_for",
    "unique_answers",
    "write_concept_table",
    "write_invariance_records",
    "write_occurrences",
    "write_scored_records",
]
