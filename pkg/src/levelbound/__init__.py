"""Hitting-time bounds for elitist evolutionary algorithms from fitness levels."""
from .bounds import (
    BoundVector,
    CoefficientSet,
    Direction,
    DriftReport,
    NumericError,
    Scheme,
    SchemeComparison,
    ShortcutReport,
    aggregate_start,
    bound_for,
    compare_schemes,
    detect_shortcuts,
    exact_hitting_time,
    legal_directions,
    linear_bound,
    metric_bound,
    scheme_coefficients,
    verify_drift,
)
from .kernel import transition_matrix, transition_row, weight_transition
from .levelmodel import (
    Kind,
    LevelModel,
    ModelError,
    StartDistribution,
    derive_ratios,
    load_model,
    model_from_dict,
    onemax_model,
    save_model,
    twomax1_model,
)
from .oracle import (
    ChainOracleResult,
    Problem,
    SimulationResult,
    enumerate_chain,
    monte_carlo,
    path_sum_coefficient,
)

__version__ = "0.1.0"
