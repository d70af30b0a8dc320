"""umdlab: numerical laboratory for sharp constants in L^p inequalities
between partial derivatives, built on discrete Fourier multipliers,
Paley-Walsh martingale transforms, and explicit witness constructions."""

__version__ = "0.1.0"

from .symbols import (DerivativeFamily, HomogeneousSymbol,
                      convex_combination_check, eigenvalue_on_sign_vector,
                      find_parity_set, make_symbol, normalize_family)
from .torus import (TorusField, TorusGrid, a_norm, apply_multiplier,
                    forward_transform, inverse_transform, lp_norm, mode,
                    project_mean_zero, spectral_derivative)

__all__ = [
    "DerivativeFamily", "HomogeneousSymbol", "TorusField", "TorusGrid",
    "a_norm", "apply_multiplier", "convex_combination_check",
    "eigenvalue_on_sign_vector", "find_parity_set", "forward_transform",
    "inverse_transform", "lp_norm", "make_symbol", "mode",
    "normalize_family", "project_mean_zero", "spectral_derivative",
]
