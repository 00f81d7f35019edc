from .basis import PolyBasis, build_basis, gaussian_moments, multi_indices, random_polynomial
from .operator import *  # noqa: F401,F403
from .operator import __all__ as _op_all

__all__ = ["PolyBasis", "build_basis", "gaussian_moments", "multi_indices", "random_polynomial", *_op_all]
from . import multipliers
from .multipliers import multiplier_apply, multiplier_eig

__all__ += ["multipliers", "multiplier_apply", "multiplier_eig"]
from .heatflow import BilinearResult, HeatFlowReport, bilinear_estimate, bilinear_form, heat_constants, heat_flow

__all__ += ["BilinearResult", "HeatFlowReport", "bilinear_estimate", "bilinear_form", "heat_constants", "heat_flow"]
