"""Watermarking, extraction, and copyright verification for embedding services."""

from .corpus import (
    FrequencyTable,
    LabeledCorpus,
    TriggerSet,
    build_frequency_table,
    generate_synthetic_corpus,
    select_triggers,
    tokenize,
)
from .embedder import HashedEmbedder, make_target_embedding
from .exceptions import EmbmarkError
from .harness import (
    CorpusParams,
    ExperimentConfig,
    ExperimentReport,
    StealerParams,
    WatermarkParams,
    build_victim_side,
    derive_seed,
    pca2,
    pca_csv,
    pca_points,
    run_experiment,
    sweep,
    sweep_csv,
    train_downstream_classifier,
    trigger_count_curve,
)
from .service import http_service, query, serve
from .extraction import (
    LinearStealer,
    MLPStealer,
    StealerFeaturizer,
    load_stealer,
    save_stealer,
    stealer_embed,
)
from .transforms import (
    DimensionShiftTransform,
    IdentityTransform,
    OrthogonalTransform,
    check_invariance,
    parse_transform,
    wrap_service,
)
from .verification import (
    ProbeSets,
    SimilaritySets,
    VerificationReport,
    build_probe_sets,
    delta_metrics,
    ks_two_sample,
    similarity_sets,
    verify,
    verify_modified,
)
from .watermark import (
    RedAlarmEmbedder,
    WatermarkConfig,
    WatermarkedEmbedder,
    inject,
    provide,
    redalarm_provide,
    trigger_weight,
)

__version__ = "0.1.0"

__all__ = [
    "EmbmarkError",
    "FrequencyTable",
    "LabeledCorpus",
    "TriggerSet",
    "tokenize",
    "build_frequency_table",
    "select_triggers",
    "generate_synthetic_corpus",
    "HashedEmbedder",
    "make_target_embedding",
    "WatermarkConfig",
    "WatermarkedEmbedder",
    "RedAlarmEmbedder",
    "trigger_weight",
    "inject",
    "provide",
    "redalarm_provide",
    "StealerFeaturizer",
    "LinearStealer",
    "MLPStealer",
    "stealer_embed",
    "save_stealer",
    "load_stealer",
    "ProbeSets",
    "SimilaritySets",
    "VerificationReport",
    "build_probe_sets",
    "similarity_sets",
    "delta_metrics",
    "ks_two_sample",
    "verify",
    "verify_modified",
    "IdentityTransform",
    "DimensionShiftTransform",
    "OrthogonalTransform",
    "parse_transform",
    "check_invariance",
    "wrap_service",
    "serve",
    "query",
    "http_service",
    "CorpusParams",
    "WatermarkParams",
    "StealerParams",
    "ExperimentConfig",
    "ExperimentReport",
    "derive_seed",
    "build_victim_side",
    "run_experiment",
    "sweep",
    "sweep_csv",
    "trigger_count_curve",
    "train_downstream_classifier",
    "pca2",
    "pca_points",
    "pca_csv",
]
