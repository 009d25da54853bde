"""Online control of unknown linear time-varying quadratic-cost systems.

Restarting and sliding-window ridge estimation, confidence-ellipsoid
optimistic model selection, finite-horizon Riccati synthesis, dynamic
regret accounting and a reproducible experiment harness.
"""

from .dynamics import Dynamics, Environment, Transition, build_environment
from .estimation import ConfidenceEllipsoid, RidgeEstimator, shaped_norm
from .ofu import (ALGORITHMS, OfuConfig, RunRecord, generate_candidates,
                  run_algorithm, run_baseline, run_r_ofu, run_sw_ofu,
                  select_optimistic)
from .regret import (RegretLedger, accumulate, build_ledger, episode_optimal_cost,
                     growth_exponent, optimal_epoch_length, total_variation_budget)
from .riccati import (CandidateIllConditioned, RiccatiSolution, backward_recursion,
                      constant_cost_and_gain, gain_control, optimal_cost)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "CandidateIllConditioned",
    "ConfidenceEllipsoid",
    "Dynamics",
    "Environment",
    "OfuConfig",
    "RegretLedger",
    "RiccatiSolution",
    "RidgeEstimator",
    "RunRecord",
    "Transition",
    "accumulate",
    "backward_recursion",
    "build_environment",
    "build_ledger",
    "constant_cost_and_gain",
    "episode_optimal_cost",
    "gain_control",
    "generate_candidates",
    "growth_exponent",
    "optimal_cost",
    "optimal_epoch_length",
    "run_algorithm",
    "run_baseline",
    "run_r_ofu",
    "run_sw_ofu",
    "select_optimistic",
    "shaped_norm",
    "total_variation_budget",
]
