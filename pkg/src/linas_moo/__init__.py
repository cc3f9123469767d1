"""Predictor-accelerated multi-objective architecture search.

Core pieces: integer-genotype search spaces with dependency masking,
synthetic and tabular objective evaluators backed by a deduplicating
evaluation store, lightweight objective predictors (ridge, RBF-kernel SVR,
and a stacked combination), an NSGA-II engine with a random-search baseline,
an iterative predictor-guided search loop, and exact bi-objective Pareto or
hypervolume analytics.
"""

from .linas import LinasConfig, LinasOutcome, run_linas, select_best_unique
from .metrics import (
    HypervolumeTrace,
    default_reference,
    hv_trace,
    hypervolume_2d,
    nondominated_mask,
    normalized_hypervolume,
    pareto_front,
    store_objective_matrix,
    union_bounds,
)
from .moea import (
    EaConfig,
    Individual,
    SearchOutcome,
    SpaceExhaustedError,
    crowding_distance,
    dominates,
    environmental_selection,
    fast_nondominated_sort,
    ranks_of,
    run_nsga2,
    run_random,
    sample_fresh_into_store,
    search_rng,
)
from .objective import (
    MAXIMIZE,
    MINIMIZE,
    ConfigurationRejectedError,
    DegenerateScaleError,
    EvaluationStore,
    Measurement,
    ObjectiveSpec,
    SyntheticLandscape,
    TabularEvaluator,
    UnknownConfigurationError,
    normalize_latency,
    oriented_values,
    read_measurements_jsonl,
)
from .predictor import (
    PREDICTOR_KINDS,
    PredictorReport,
    RidgeModel,
    StackedModel,
    SvrRbfModel,
    analyze_predictors,
    featurize,
    featurize_batch,
    kendall_tau,
    make_predictor,
    mape,
)
from .space import (
    BUILTIN_SPACES,
    DependencyRule,
    DesignVariable,
    SearchSpace,
    SpaceValidationError,
    builtin_space,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_SPACES",
    "ConfigurationRejectedError",
    "DegenerateScaleError",
    "DependencyRule",
    "DesignVariable",
    "EaConfig",
    "EvaluationStore",
    "HypervolumeTrace",
    "Individual",
    "LinasConfig",
    "LinasOutcome",
    "MAXIMIZE",
    "MINIMIZE",
    "Measurement",
    "ObjectiveSpec",
    "PREDICTOR_KINDS",
    "PredictorReport",
    "RidgeModel",
    "SearchOutcome",
    "SearchSpace",
    "SpaceExhaustedError",
    "SpaceValidationError",
    "StackedModel",
    "SvrRbfModel",
    "SyntheticLandscape",
    "TabularEvaluator",
    "UnknownConfigurationError",
    "__version__",
    "analyze_predictors",
    "builtin_space",
    "crowding_distance",
    "default_reference",
    "dominates",
    "environmental_selection",
    "fast_nondominated_sort",
    "featurize",
    "featurize_batch",
    "hv_trace",
    "hypervolume_2d",
    "kendall_tau",
    "make_predictor",
    "mape",
    "nondominated_mask",
    "normalize_latency",
    "normalized_hypervolume",
    "oriented_values",
    "pareto_front",
    "ranks_of",
    "read_measurements_jsonl",
    "run_linas",
    "run_nsga2",
    "run_random",
    "sample_fresh_into_store",
    "search_rng",
    "select_best_unique",
    "store_objective_matrix",
    "union_bounds",
]
