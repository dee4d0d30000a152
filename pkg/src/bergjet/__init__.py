"""Bergman kernel expansion coefficients from truncated Kähler potentials."""

__version__ = "0.1.0"

from ._backend import BACKEND
from ._fields import QQi
from .errors import (
    BergjetError,
    CompositionError,
    ConfigError,
    ConsistencyError,
    DegreeBudgetError,
    ParseError,
    QuadratureResolutionError,
    RealityError,
    SingularDivisionError,
    StrictPositivityError,
)
from .geometry import (
    PotentialJet,
    flat_potential,
    fubini_study_potential,
    hermitian_metric,
    model_potential,
    polarize,
    radial_quartic_potential,
    random_quartic_potential,
    scalar_curvature,
)
from .jets import (
    Jet,
    JetMatrix,
    compose,
    invert_map,
    invert_unit,
    jet_exp,
    jet_log,
    variables,
)
from .kuranishi import delta0, good_contour_check, invert_theta, kuranishi, theta_map
from .recursion import (
    CoefficientSequence,
    KExpansion,
    apply_S,
    assemble_kernel,
    expand,
    solve_recursion,
    verify_negligible,
)
from .twisted import (
    BundleMetricJet,
    bundle_curvature,
    delta_G,
    expand_twisted,
    predicted_b1,
    solve_recursion_twisted,
    volume_twist,
)

__all__ = [
    "BACKEND",
    "BergjetError",
    "BundleMetricJet",
    "CoefficientSequence",
    "CompositionError",
    "ConfigError",
    "ConsistencyError",
    "DegreeBudgetError",
    "Jet",
    "JetMatrix",
    "KExpansion",
    "ParseError",
    "PotentialJet",
    "QQi",
    "QuadratureResolutionError",
    "RealityError",
    "SingularDivisionError",
    "StrictPositivityError",
    "apply_S",
    "assemble_kernel",
    "bundle_curvature",
    "compose",
    "delta0",
    "delta_G",
    "expand",
    "expand_twisted",
    "flat_potential",
    "fubini_study_potential",
    "good_contour_check",
    "hermitian_metric",
    "invert_map",
    "invert_theta",
    "invert_unit",
    "jet_exp",
    "jet_log",
    "kuranishi",
    "model_potential",
    "polarize",
    "predicted_b1",
    "radial_quartic_potential",
    "random_quartic_potential",
    "scalar_curvature",
    "solve_recursion",
    "solve_recursion_twisted",
    "theta_map",
    "variables",
    "verify_negligible",
    "volume_twist",
]
