"""Photon blockade and tunneling of a driven cavity coupled to a squeezed reservoir."""
from .blockade_classifier import Table2Case, classify, classify_table2, refined_kpb, simplified_mpb
from .correlations import correlation_k, correlation_set, factorial_moments, photon_distribution
from .dynamics import g2_tau, propagate, solve, steady_state
from .errors import (ConfigError, ConstraintViolationError, ConvergenceError,
                     DegenerateSteadyStateError, EmptyCavityError, InvalidDimensionError,
                     NotHermitianError, OrderExceedsTruncationError, SqBlockadeError,
                     TruncationError, TruncationWarning)
from .fock import DensityMatrix, GaussianParams, auto_dim, state_dsts, state_scs
from .gaussian_analytics import critical_alphas, critical_r0, dsts_g2, dsts_g3, dsts_gk
from .master_equation import SystemParams, build_liouvillian
from .nonclassicality import entanglement_potential, ep_dsts_closed_form, ep_dsts_numeric
from .scan import load_config, parse_config, run_point, run_scan

__version__ = "0.1.0"

__all__ = [
    "Table2Case",
    "classify",
    "classify_table2",
    "refined_kpb",
    "simplified_mpb",
    "correlation_k",
    "correlation_set",
    "factorial_moments",
    "photon_distribution",
    "g2_tau",
    "propagate",
    "solve",
    "steady_state",
    "ConfigError",
    "ConstraintViolationError",
    "ConvergenceError",
    "DegenerateSteadyStateError",
    "EmptyCavityError",
    "InvalidDimensionError",
    "NotHermitianError",
    "OrderExceedsTruncationError",
    "SqBlockadeError",
    "TruncationError",
    "TruncationWarning",
    "DensityMatrix",
    "GaussianParams",
    "auto_dim",
    "state_dsts",
    "state_scs",
    "critical_alphas",
    "critical_r0",
    "dsts_g2",
    "dsts_g3",
    "dsts_gk",
    "SystemParams",
    "build_liouvillian",
    "entanglement_potential",
    "ep_dsts_closed_form",
    "ep_dsts_numeric",
    "load_config",
    "parse_config",
    "run_point",
    "run_scan",
]
