"""Simulator and equilibrium toolkit for threshold strategies in scrip economies."""

from .best_response import (
    BestResponseResult,
    MeanFieldModel,
    ValueFunction,
    best_response,
    extract_threshold,
    mean_field_model,
    solve_mdp,
)
from .chain import (
    concentration_fraction,
    enumerate_states,
    stationary_distribution,
    transition_matrix,
    verify_symmetry,
)
from .core import (
    Altruist,
    GameParams,
    Standard,
    SystemState,
    ThresholdStrategy,
    decide_volunteer,
    effective_discount,
    empirical_distribution,
    run_simulation,
    simulate_round,
)
from .distributions import (
    MoneyDistribution,
    entropy,
    euclidean_distance,
    max_entropy_distribution,
    squared_distance,
)
from .equilibrium import (
    BrCurve,
    EquilibriumReport,
    altruist_threshold,
    best_response_curve,
    efficiency,
    equilibrium_report,
    find_fixed_points,
    optimal_ratio,
    ratio_invariance_check,
)

__version__ = "0.1.0"
