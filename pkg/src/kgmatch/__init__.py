"""Two-stage knowledge-graph matching.

A bi-encoder blocking stage turns entity descriptions into a high-recall
candidate alignment by top-k embedding retrieval; a cross-encoder
re-ranking stage rescores the candidates and post-processing filters
(confidence cut, one-to-one assignment) reduce them to a high-precision
alignment.  Training data for the re-ranker comes from sampled reference
correspondences or a high-precision lexical matcher, with negatives
derived from the one-to-one assumption.
"""

from .alignment import (
    Alignment,
    Correspondence,
    read_alignment,
    read_alignment_tsv,
    read_alignment_xml,
    write_alignment_tsv,
    write_alignment_xml,
)
from .candidates import topk_candidates
from .embeddings import (
    EmbeddingMatrix,
    EmbeddingProvider,
    HashEmbedder,
    PrecomputedProvider,
    ProviderError,
    RemoteEmbeddingProvider,
    build_matrix,
    load_embedding_file,
    save_embedding_file,
)
from .evaluation import (
    CaseResult,
    EvalReport,
    McNemarResult,
    evaluate,
    evaluate_case,
    format_report,
    macro_micro,
    mcnemar_from_counts,
    mcnemar_test,
)
from .filters import apply_chain, confidence_cut, default_chain, mwb_filter
from .graph import (
    EntityKind,
    GraphParseError,
    KnowledgeGraph,
    Literal,
    Triple,
    parse_ntriples,
    serialize_ntriples,
)
from .lexical import baseline_match, high_precision_match
from .rerank import MockScorer, PairScorer, RemoteScorer, score_alignment, truncate_pair
from .text import (
    EmptyBundleError,
    PairingStrategy,
    TextBundle,
    TextItem,
    build_text_pairs,
    extract_bundle,
    extract_bundles,
    normalize_label,
)
from .training import (
    TrainConfig,
    TrainingPair,
    TrainMode,
    build_training_set,
    generate_negatives,
    read_training_tsv,
    sample_reference,
    write_training_tsv,
)

# Imported last: the orchestration layer depends on everything above.
from .cli import ConfigError, RunConfig, main, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "CaseResult",
    "ConfigError",
    "Correspondence",
    "EmbeddingMatrix",
    "EmbeddingProvider",
    "EmptyBundleError",
    "EntityKind",
    "EvalReport",
    "GraphParseError",
    "HashEmbedder",
    "KnowledgeGraph",
    "Literal",
    "McNemarResult",
    "MockScorer",
    "PairScorer",
    "PairingStrategy",
    "PrecomputedProvider",
    "ProviderError",
    "RemoteEmbeddingProvider",
    "RemoteScorer",
    "RunConfig",
    "TextBundle",
    "TextItem",
    "TrainConfig",
    "TrainMode",
    "TrainingPair",
    "Triple",
    "apply_chain",
    "baseline_match",
    "build_matrix",
    "build_text_pairs",
    "build_training_set",
    "confidence_cut",
    "default_chain",
    "evaluate",
    "evaluate_case",
    "extract_bundle",
    "extract_bundles",
    "format_report",
    "generate_negatives",
    "high_precision_match",
    "load_embedding_file",
    "macro_micro",
    "main",
    "mcnemar_from_counts",
    "mcnemar_test",
    "mwb_filter",
    "normalize_label",
    "parse_ntriples",
    "read_alignment",
    "read_alignment_tsv",
    "read_alignment_xml",
    "read_training_tsv",
    "run_pipeline",
    "sample_reference",
    "save_embedding_file",
    "score_alignment",
    "serialize_ntriples",
    "topk_candidates",
    "truncate_pair",
    "write_alignment_tsv",
    "write_alignment_xml",
    "write_training_tsv",
]
