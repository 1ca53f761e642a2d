"""Sparse shallow ReLU networks via concave penalties and adaptive node insertion."""

from .analysis import (
    StationarityReport,
    check_stationarity,
    equiv_exponent,
    fidelity_gap,
    optimal_tau,
    representer_check,
    wnorm_radial_2d,
)
from .data import Dataset, SyntheticSpec, eval_target, generate, load_csv, save_csv
from .insertion import InsertionConfig, ascend_dual, sample_trials, select_and_insert
from .loss_dual import DualField, dual_grad_chart, dual_value, loss_value, outer_gradient, residual
from .network import (
    ShallowNet,
    load_network_csv,
    merge_duplicates,
    normalize_homogeneous,
    prune_zeros,
    save_network_csv,
)
from .penalty import (
    PenaltySpec,
    phi_derivative,
    phi_prox,
    phi_value,
    soft_threshold,
    total_penalty,
    validate_penalty,
)
from .train_full import AlgorithmConfig, TrainReport, run_algorithm1, train_joint
from .train_outer import OuterSolveConfig, prox_grad_outer, smooth_part_grad, ssn_outer

__version__ = "0.1.0"

__all__ = [
    "AlgorithmConfig",
    "Dataset",
    "DualField",
    "InsertionConfig",
    "OuterSolveConfig",
    "PenaltySpec",
    "ShallowNet",
    "StationarityReport",
    "SyntheticSpec",
    "TrainReport",
    "ascend_dual",
    "check_stationarity",
    "dual_grad_chart",
    "dual_value",
    "equiv_exponent",
    "eval_target",
    "fidelity_gap",
    "generate",
    "load_csv",
    "load_network_csv",
    "loss_value",
    "merge_duplicates",
    "normalize_homogeneous",
    "optimal_tau",
    "outer_gradient",
    "phi_derivative",
    "phi_prox",
    "phi_value",
    "prox_grad_outer",
    "prune_zeros",
    "representer_check",
    "residual",
    "run_algorithm1",
    "sample_trials",
    "save_csv",
    "save_network_csv",
    "select_and_insert",
    "smooth_part_grad",
    "soft_threshold",
    "ssn_outer",
    "total_penalty",
    "train_joint",
    "validate_penalty",
    "wnorm_radial_2d",
]
