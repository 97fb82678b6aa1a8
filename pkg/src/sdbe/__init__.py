"""Clean-feature estimation by subspace decomposition over a class dictionary
and an occlusion-error dictionary."""
from .core import LabeledFeatureSet, normalize_l2, occlusion_error_stats, oev
from .dictionary import build_cd, build_oed, concat
from .errors import SdbeError
from .estimator import compile_linear, estimate, estimate_batch, fit
from .solver_l1 import L1Settings, solve_l1
from .solver_l2 import fit_ridge, solve_l2

__all__ = [
    "LabeledFeatureSet", "normalize_l2", "occlusion_error_stats", "oev",
    "build_cd", "build_oed", "concat", "SdbeError",
    "compile_linear", "estimate", "estimate_batch", "fit",
    "L1Settings", "solve_l1", "fit_ridge", "solve_l2",
]
