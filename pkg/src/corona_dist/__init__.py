"""Exact convolution algebra, Fourier-Laplace transforms and corona-bound
checks for compactly supported distributions on convex cones."""

from .balls import ComplexPoint, PrecisionError
from .cones import (
    Cone,
    FullSpace,
    LightCone,
    Orthant,
    Polyhedral,
    check_support_fn_axioms,
    check_weight_locality,
    cone_from_json,
    hessian_quad_form,
    weight_p,
)
from .corona import (
    CoronaParams,
    CoronaVerdict,
    SearchBox,
    check_corona,
    corona_lower_bound,
    necessity_bound,
    search_violation,
    verify_bezout,
)
from .distribution import (
    Distribution,
    DistributionError,
    add,
    convolve,
    delta,
    distribution_from_json,
    distribution_to_json,
    distributional_derivative,
    in_cone,
    indicator,
    piecewise,
    scale,
    support_hull,
)
from .liouville import convergents, gap_bound, refute_params, report, transform_magnitude_at
from .transform import fl_transform, pws_bound_for, verify_pws_on_samples

__version__ = "0.1.0"
