"""The reduced planar system for equivariant minimal graphs.

Writing the profile as ``rho = phi(t) r`` with ``t = log r`` and
``psi = phi_t`` turns the minimal-graph ODE into the autonomous system

    phi_t = psi
    psi_t = -psi - [B(phi) psi + C(phi) phi] [1 + (phi + psi)^2]

    B(phi) = n - p + p / (1 + lambda^2 phi^2)
    C(phi) = n - p + (1 - lambda^2) p / (1 + lambda^2 phi^2)

Its fixed points on the axis are the origin (the flat disk) and
``+-P = (+-phi0, 0)`` (the cone).  The origin is a saddle; P is a stable node
(Type I) or a stable spiral (Type II).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError
from .lomse import LomseParams

__all__ = [
    "PhaseState",
    "FixedPointKind",
    "ConeType",
    "FixedPointReport",
    "vector_field",
    "centered_field",
    "jacobian",
    "unstable_direction",
    "linearization_kind",
    "classify_fixed_points",
    "type_of",
    "axis_fixed_points",
    "DEGENERATE_DISCRIMINANT",
]

DEGENERATE_DISCRIMINANT = 1e-10


class PhaseState(NamedTuple):
    phi: float
    psi: float


class FixedPointKind(enum.Enum):
    SADDLE = "Saddle"
    STABLE_NODE = "StableNode"
    STABLE_SPIRAL = "StableSpiral"
    DEGENERATE = "Degenerate"


class ConeType(enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"


def _coefficients(phi, params: LomseParams):
    n, p, lam = params.n, params.p, params.lambda_sq
    q = 1.0 + lam * phi * phi
    b = (n - p) + p / q
    c = (n - p) + (1.0 - lam) * p / q
    return b, c, q


def vector_field(s, params: LomseParams):
    """Right-hand side ``(phi_t, psi_t)`` at ``s = (phi, psi)``.

    Works elementwise on arrays as well as on scalars.
    """
    phi, psi = s
    b, c, _ = _coefficients(phi, params)
    return psi, -psi - (b * psi + c * phi) * (1.0 + (phi + psi) ** 2)


def centered_field(x, psi, params: LomseParams):
    """The same field written in the deviation ``x = phi - phi0``.

    ``C(phi)`` is evaluated as an explicit multiple of ``x`` (using
    ``C(phi0) = 0``), so the field keeps full relative precision however
    close the state is to P.  Returns ``(x_t, psi_t)``.
    """
    n, p, lam, phi0 = params.n, params.p, params.lambda_sq, params.phi0
    phi = phi0 + x
    q = 1.0 + lam * phi * phi
    q0 = params.cone_factor
    b = (n - p) + p / q
    c = (lam - 1.0) * p * lam * x * (2.0 * phi0 + x) / (q * q0)
    return psi, -psi - (b * psi + c * phi) * (1.0 + (phi + psi) ** 2)


def jacobian(s, params: LomseParams) -> np.ndarray:
    """Analytic 2x2 Jacobian of :func:`vector_field` at ``s``."""
    phi, psi = float(s[0]), float(s[1])
    p, lam = params.p, params.lambda_sq
    b, c, q = _coefficients(phi, params)
    db = -2.0 * p * lam * phi / (q * q)
    dc = (1.0 - lam) * db
    g = b * psi + c * phi
    h = 1.0 + (phi + psi) ** 2
    dh = 2.0 * (phi + psi)
    return np.array(
        [
            [0.0, 1.0],
            [-(db * psi + dc * phi + c) * h - g * dh, -1.0 - b * h - g * dh],
        ]
    )


def unstable_direction(params: LomseParams) -> tuple[float, np.ndarray]:
    """Positive eigenvalue at the origin and its unit eigenvector.

    The eigenvector is ``(1, mu) / |(1, mu)|``, pointing into ``phi > 0``.
    """
    n, p, lam = params.n, params.p, params.lambda_sq
    a = n + 1.0
    mu = 0.5 * (-a + np.sqrt(a * a + 4.0 * (p * lam - n)))
    v = np.array([1.0, mu])
    return float(mu), v / np.hypot(1.0, mu)


def linearization_kind(jac: np.ndarray, tol: float = DEGENERATE_DISCRIMINANT) -> FixedPointKind:
    """Kind of a planar fixed point from trace, determinant and discriminant."""
    tr = float(jac[0, 0] + jac[1, 1])
    det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    disc = tr * tr - 4.0 * det
    if det < 0.0:
        return FixedPointKind.SADDLE
    if abs(disc) < tol or det == 0.0:
        return FixedPointKind.DEGENERATE
    if tr >= 0.0:
        raise ValueError(f"unexpected unstable fixed point: trace={tr}, det={det}")
    return FixedPointKind.STABLE_NODE if disc > 0.0 else FixedPointKind.STABLE_SPIRAL


@dataclass(frozen=True)
class FixedPointReport:
    location: PhaseState
    jacobian: np.ndarray
    eigenvalues: tuple[complex, complex]
    kind: FixedPointKind

    @property
    def trace(self) -> float:
        return float(np.trace(self.jacobian))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.jacobian))

    @property
    def discriminant(self) -> float:
        tr = self.trace
        return tr * tr - 4.0 * self.det


def _report(state: PhaseState, params: LomseParams) -> FixedPointReport:
    jac = jacobian(state, params)
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    root = np.sqrt(complex(tr * tr - 4.0 * det))
    eig = (complex(0.5 * (tr - root)), complex(0.5 * (tr + root)))
    return FixedPointReport(state, jac, eig, linearization_kind(jac))


def classify_fixed_points(params: LomseParams) -> tuple[FixedPointReport, FixedPointReport]:
    """Linearisation reports at the origin and at ``P = (phi0, 0)``."""
    origin = _report(PhaseState(0.0, 0.0), params)
    cone = _report(PhaseState(params.phi0, 0.0), params)
    return origin, cone


def type_of(n: int, p: int, k: int) -> ConeType:
    """Type I (node at P) or Type II (spiral at P) for the triple ``(n, p, k)``."""
    _, cone = classify_fixed_points(LomseParams.from_npk(n, p, k))
    if cone.kind is FixedPointKind.DEGENERATE:
        raise DegenerateError(
            f"P is degenerate for ({n},{p},{k}): discriminant {cone.discriminant:.3e}"
        )
    return ConeType.TYPE_I if cone.kind is FixedPointKind.STABLE_NODE else ConeType.TYPE_II


def axis_fixed_points(params: LomseParams, span: float = 10.0, samples: int = 20001) -> np.ndarray:
    """Zeros of ``psi_t(phi, 0)`` on ``|phi| <= span * phi0`` by sign scan.

    Each bracketed sign change (or exact zero on the grid) is refined with
    Brent's method.
    """
    from scipy.optimize import brentq

    def g(phi):
        return vector_field((phi, 0.0), params)[1]

    grid = np.linspace(-span * params.phi0, span * params.phi0, samples)
    vals = g(grid)
    roots = list(grid[vals == 0.0])
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-15))
    return np.sort(np.array(roots))
