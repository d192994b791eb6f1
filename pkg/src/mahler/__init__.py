"""Mahler volume toolkit: support functions, polygon formulas, descent and small polytopes."""

from .errors import MahlerError
from .support import (
    CurvatureMeasure,
    GridSupport,
    Perturbation,
    convexify,
    curvature_measure,
    is_convex,
    norms,
    symmetrize_body,
    symmetrize_perturbation,
)
from .functional import (
    area,
    check_concavity_bound,
    concavity_constants,
    d2J,
    d2J_symmetric,
    dJ,
    localized_perturbation,
    mahler,
    polar_area,
)
from .polygon import (
    Certificate,
    PolygonSupport,
    certify_nonminimal,
    foc_residual,
    mahler_exact,
    santalo_point,
    simple_deformation_hessian,
)
from .polytope import PolytopeV, hull, kuperberg_gap, product_body
from .descent import DescentOptions, DescentTrace, concentration_report, descend

__version__ = "0.1.0"

__all__ = [
    "MahlerError",
    "CurvatureMeasure", "GridSupport", "Perturbation", "convexify", "curvature_measure",
    "is_convex", "norms", "symmetrize_body", "symmetrize_perturbation",
    "area", "check_concavity_bound", "concavity_constants", "d2J", "d2J_symmetric", "dJ",
    "localized_perturbation", "mahler", "polar_area",
    "Certificate", "PolygonSupport", "certify_nonminimal", "foc_residual", "mahler_exact",
    "santalo_point", "simple_deformation_hessian",
    "PolytopeV", "hull", "kuperberg_gap", "product_body",
    "DescentOptions", "DescentTrace", "concentration_report", "descend",
]
