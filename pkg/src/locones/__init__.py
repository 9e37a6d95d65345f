"""Numerical laboratory for Lawson-Osserman cones of LOMSE type ``(n, p, k)``."""

from .errors import (
    ConsistencyError,
    DegenerateError,
    LomseDomainError,
    NoConeError,
    NumericalError,
    StabilityError,
)
from .lomse import (
    LomseParams,
    lambda_from_npk,
    link_volume_argmax,
    link_volume_profile,
    solve_theta,
    sphere_volume,
    validate_lomse,
)
from .orbit import (
    CrossingEvent,
    GraphCurve,
    Orbit,
    OrbitTerminal,
    detect_crossings,
    launch_unstable_orbit,
    orbit_to_graph,
    rescaled_graphs,
)
from .phase import (
    ConeType,
    FixedPointKind,
    FixedPointReport,
    PhaseState,
    classify_fixed_points,
    jacobian,
    type_of,
    vector_field,
)
from .quotient import (
    QuotientMetric,
    StabilityReport,
    Verdict,
    cone_deficit,
    cone_segment,
    cone_volume,
    curve_length,
    gauss_curvature,
    jacobi_stability,
    volume_monotonicity,
)

__version__ = "0.1.0"
