"""Weitzenboeck curvature operators, pinching checks and their eigenvalue bounds."""

from .curvature import (
    CurvatureTensor,
    constant_curvature,
    fubini_study,
    product_space,
    random_curvature,
    ricci,
    scalar,
    sectional,
    validate,
)
from .errors import DegeneratePlaneError, DimensionError, MeshQualityError, SymmetryError
from .pinching import PinchingReport, classify, ricci_extrema, sec_extrema
from .tensor_core import (
    MultiIndexBasis,
    TensorCoeffs,
    build_basis,
    kernel_basis,
    sym_eigen,
    trace_map,
    traceless_basis,
)
from .weitzenboeck import (
    BoundCheck,
    WeitzenboeckMatrix,
    bound_form,
    bound_negative_sym,
    bound_positive_sym,
    diag_identity_residual,
    eigen_bound_constants,
    q_form_value,
    rigidity_check,
    second_kind_matrix,
    weitz_matrix,
)

__version__ = "0.1.0"
