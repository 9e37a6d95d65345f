"""Geometry of the conformal quotient metric.

On the ``r``-``rho`` half plane the metric

    ds^2 = E(r, rho) (dr^2 + drho^2),
    E = sigma0^2 (r^2 + lambda^2 rho^2)^p r^(2(n-p))

makes the length of a profile curve equal to the volume of the (n+1)-
dimensional equivariant submanifold it sweeps out.  Solution curves of the
reduced ODE are geodesics, and the cone ray ``rho = phi0 r`` is one of them.

All integrals along a profile are taken in ``u = log r``, which removes the
degenerate endpoint at ``r = 0``:

    L = sigma0 * int e^((n+1)u) (1 + lambda^2 phi^2)^(p/2) sqrt(1 + (phi+psi)^2) du.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad, quad_vec, solve_ivp

from .errors import ConsistencyError, LomseDomainError, StabilityError
from .lomse import LomseParams
from .orbit import GraphCurve

__all__ = [
    "QuotientMetric",
    "Verdict",
    "StabilityReport",
    "Deficit",
    "curve_length",
    "cone_volume",
    "cone_segment",
    "cone_deficit",
    "volume_monotonicity",
    "laplacian_log_factor",
    "gauss_curvature",
    "geodesic_residual",
    "jacobi_stability",
]


@dataclass(frozen=True)
class QuotientMetric:
    params: LomseParams

    def conformal_factor(self, r, rho):
        """``E(r, rho)``; vanishes on the axis ``r = 0``."""
        P = self.params
        r = np.asarray(r, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return P.sigma0**2 * (r * r + P.lambda_sq * rho * rho) ** P.p * r ** (2 * (P.n - P.p))

    def log_factor(self, r, rho):
        """``log E``, computed without forming ``E`` (no overflow for large n)."""
        P = self.params
        r = np.asarray(r, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return (
            2.0 * math.log(P.sigma0)
            + P.p * np.log(r * r + P.lambda_sq * rho * rho)
            + 2.0 * (P.n - P.p) * np.log(r)
        )


def _check_curve(curve: GraphCurve) -> None:
    if np.any(np.diff(curve.r) <= 0.0):
        raise ValueError("curve_length needs strictly increasing r")


def _density(params: LomseParams, phi, slope):
    return (1.0 + params.lambda_sq * phi * phi) ** (0.5 * params.p) * np.sqrt(1.0 + slope * slope)


def _panels(a: float, b: float, width: float = 0.5) -> np.ndarray:
    m = max(1, int(math.ceil((b - a) / width)))
    return np.linspace(a, b, m + 1)


def curve_length(curve: GraphCurve, metric: QuotientMetric, rtol: float = 1e-8) -> float:
    """Quotient length of ``curve`` (volume of the swept submanifold).

    Adaptive Gauss-Kronrod quadrature in ``u = log r`` over the sampled span;
    for ``from_origin`` curves the piece between the origin and the first
    sample is added along the ray through that sample (exact for cones).
    """
    _check_curve(curve)
    P = metric.params
    u0, u1 = math.log(curve.r[0]), math.log(curve.r[-1])
    scale = (P.n + 1) * u1

    def integrand(u):
        dev, psi = curve.profile(u)
        phi = curve.phi_ref + dev
        return math.exp((P.n + 1) * u - scale) * float(_density(P, phi, phi + psi))

    total = 0.0
    edges = _panels(u0, u1)
    for a, b in zip(edges[:-1], edges[1:]):
        total += quad(integrand, a, b, epsabs=0.0, epsrel=rtol, limit=200)[0]
    if curve.from_origin:
        phi_a = curve.rho[0] / curve.r[0]
        total += math.exp((P.n + 1) * u0 - scale) * float(_density(P, phi_a, phi_a)) / (P.n + 1)
    return P.sigma0 * math.exp(scale) * total


def cone_volume(params: LomseParams, radius: float = 1.0) -> float:
    """Closed-form volume of the cone truncated at ``r = radius``.

    ``sigma0 (1 + lambda^2 tan^2 theta)^(p/2) sec(theta) radius^(n+1) / (n+1)``.
    """
    return (
        params.sigma0 * params.cone_factor ** (0.5 * params.p) * params.sec_theta
        * radius ** (params.n + 1) / (params.n + 1)
    )


def cone_segment(params: LomseParams, radius: float = 1.0, samples: int = 65, r_min: float | None = None) -> GraphCurve:
    """The cone ray ``rho = phi0 r`` for ``0 < r <= radius`` as a curve."""
    r_min = radius * 1e-6 if r_min is None else r_min
    r = np.geomspace(r_min, radius, samples)
    phi0 = params.phi0

    def profile(u):
        z = np.zeros_like(np.asarray(u, dtype=float))
        return np.array([z, z])

    return GraphCurve(r, phi0 * r, np.full_like(r, phi0), True, phi0, None, profile)


class Deficit(NamedTuple):
    """Volume deficit against the cone with the same boundary.

    ``noise`` bounds the error inherited from the accuracy of the curve.
    """

    value: float
    noise: float

    @property
    def resolved(self) -> bool:
        return self.value > self.noise


# Global error of an adaptive integration exceeds its local tolerance; this
# factor converts the curve's rtol into a deficit error bound.
_ACCUMULATION = 100.0


def cone_deficit(curve: GraphCurve, metric: QuotientMetric, rtol: float = 1e-13) -> Deficit:
    """``L(cone up to r_end) - L(curve)`` for a curve ending on the cone ray.

    The two lengths agree to many digits for rescaled crossing graphs, so the
    difference is integrated directly.  The integrand ``F0 - F`` is written
    through ``expm1``/``log1p`` of the deviation from P, which keeps its
    relative precision when the curve hugs the ray.
    """
    _check_curve(curve)
    if not curve.from_origin:
        raise ValueError("cone_deficit needs a curve that starts at the origin")
    P = metric.params
    phi0, lam = P.phi0, P.lambda_sq
    q0 = P.cone_factor
    sec2 = 1.0 + phi0 * phi0
    f0 = q0 ** (0.5 * P.p) * math.sqrt(sec2)
    u0, u1 = math.log(curve.r[0]), math.log(curve.r[-1])
    end_phi = curve.rho[-1] / curve.r[-1]
    if abs(end_phi - phi0) > 1e-8 * max(1.0, phi0):
        raise ValueError(f"curve does not end on the cone ray (phi={end_phi}, phi0={phi0})")
    shift = curve.phi_ref - phi0

    def gap(x, psi):
        a = 0.5 * P.p * np.log1p(lam * x * (2.0 * phi0 + x) / q0)
        a = a + 0.5 * np.log1p((x + psi) * (2.0 * phi0 + x + psi) / sec2)
        return -f0 * np.expm1(a)

    def integrand(u):
        dev, psi = curve.profile(u)
        g = math.exp((P.n + 1) * (u - u1)) * float(gap(shift + dev, psi))
        return np.array([g, abs(g)])

    edges = _panels(u0, u1)
    val = np.zeros(2)
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res, e = quad_vec(integrand, a, b, epsabs=1e-300, epsrel=rtol, norm="max", limit=400)
        val += res
        err += e
    x_a = curve.rho[0] / curve.r[0] - phi0
    tail = math.exp((P.n + 1) * (u0 - u1)) * float(gap(x_a, 0.0)) / (P.n + 1)
    val += np.array([tail, abs(tail)])
    weight = P.sigma0 * math.exp((P.n + 1) * u1)
    rel = curve.rtol if curve.rtol is not None else np.finfo(float).eps
    noise = weight * (_ACCUMULATION * rel * val[1] + err)
    return Deficit(weight * float(val[0]), float(noise))


def volume_monotonicity(curves: Sequence[GraphCurve], metric: QuotientMetric) -> list[float]:
    """Volumes of the rescaled graphs followed by the truncated cone volume.

    Raises :class:`ConsistencyError` unless every deficit is resolved above
    its noise bound and the deficits strictly decrease, i.e. the volumes
    strictly increase towards the cone volume.
    """
    P = metric.params
    for c in curves:
        if abs(c.r[-1] - 1.0) > 1e-8 or abs(c.rho[-1] - P.phi0) > 1e-8:
            raise ValueError("rescaled graphs must end at Q = (1, tan theta)")
    deficits = [cone_deficit(c, metric) for c in curves]
    for i, d in enumerate(deficits, start=1):
        if not d.resolved:
            raise ConsistencyError(
                f"volume deficit {i} ({d.value:.3e}) is not resolved above noise {d.noise:.3e}"
            )
    for i in range(1, len(deficits)):
        if not deficits[i].value < deficits[i - 1].value:
            raise ConsistencyError(f"volumes not strictly increasing at graph {i + 1}")
    top = cone_volume(P)
    return [top - d.value for d in deficits] + [top]


def laplacian_log_factor(r, rho, params: LomseParams):
    """Flat Laplacian of ``u = (1/2) log E``."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    n, p, lam = params.n, params.p, params.lambda_sq
    d = r * r + lam * rho * rho
    return -(n - p) / (r * r) + 0.5 * p * ((2.0 + 2.0 * lam) / d - 4.0 * (r * r + lam * lam * rho * rho) / (d * d))


def gauss_curvature(r, rho, metric: QuotientMetric):
    """Gauss curvature ``K = -Laplacian(u) / E`` of the quotient metric."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise LomseDomainError("the quotient metric is singular on r <= 0")
    out = -laplacian_log_factor(r, rho, metric.params) * np.exp(-metric.log_factor(r, rho))
    return out if out.ndim else float(out)


def geodesic_residual(metric: QuotientMetric, samples: int = 33, h: float = 1e-6) -> float:
    """Largest scale-free geodesic curvature along the cone ray.

    For a straight segment in a conformally flat metric the geodesic
    equation reduces to ``d(log E)/dN = 0`` across the segment.  The normal
    derivative is taken by central differences and multiplied by ``r`` to
    make it scale invariant.
    """
    P = metric.params
    nrm = np.array([-P.phi0, 1.0]) / P.sec_theta
    worst = 0.0
    for r in np.geomspace(1e-3, 1.0, samples):
        x = np.array([r, P.phi0 * r])
        step = h * r
        up = metric.log_factor(*(x + step * nrm))
        dn = metric.log_factor(*(x - step * nrm))
        worst = max(worst, abs(0.5 * (up - dn) / (2.0 * step)) * r)
    return float(worst)


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Jacobi-field analysis of the cone segment from the origin to Q."""

    params: LomseParams
    length: float
    s_star: float | None
    r_star: float | None
    verdict: Verdict
    epsilon: float
    s_epsilon: float
    profile_s: np.ndarray = field(repr=False)
    profile_k: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "L": self.length,
            "s_star": self.s_star,
            "verdict": self.verdict.value,
            "epsilon": self.epsilon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _jacobi_run(metric: QuotientMetric, eps: float, rtol: float):
    P = metric.params
    n, phi0 = P.n, P.phi0
    log_sec = math.log(P.sec_theta)
    s_eps = curve_length(cone_segment(P, radius=eps), metric, rtol=1e-12)

    # State (J, dJ/dtau, sigma) with tau = sigma = log s, advanced in t = log r.
    def rhs(t, y):
        j, jt, sigma = y
        r = math.exp(t)
        rho = phi0 * r
        log_e = float(metric.log_factor(r, rho))
        dsigma = math.exp(t + 0.5 * log_e + log_sec - sigma)
        s2k = -float(laplacian_log_factor(r, rho, P)) * math.exp(2.0 * sigma - log_e)
        return [dsigma * jt, dsigma * (jt - s2k * j), dsigma]

    def zero(_, y):
        return y[0]

    zero.terminal = True
    zero.direction = -1
    # J(s_eps) = 0, J'(s_eps) = 1; in tau the slope is s_eps, rescaled to 1
    # since the zeros of a linear equation do not depend on that scale.
    sol = solve_ivp(
        rhs, (math.log(eps), 0.0), [0.0, 1.0, math.log(s_eps)],
        method="DOP853", rtol=rtol, atol=1e-14, events=zero,
    )
    if sol.status < 0:
        raise StabilityError(f"Jacobi integration failed: {sol.message}")
    r_all = np.exp(sol.t)
    s_all = np.exp(sol.y[2])
    k_all = gauss_curvature(r_all, phi0 * r_all, metric)
    if sol.t_events[0].size:
        t_star = float(sol.t_events[0][0])
        return s_eps, math.exp(float(sol.y_events[0][0][2])), math.exp(t_star), s_all, k_all
    return s_eps, None, None, s_all, k_all


def jacobi_stability(metric: QuotientMetric, eps: float = 1e-6, rtol: float = 1e-10) -> StabilityReport:
    """Stability of the cone segment ``0Q`` via its first conjugate point.

    The segment is parametrised by quotient arclength from ``r = eps`` to Q;
    ``J'' + K J = 0`` is integrated from ``J = 0, J' = 1``.  A zero of ``J``
    before Q makes the segment unstable.  The run is repeated at ``eps / 2``
    and the verdict is Inconclusive if the two runs disagree.
    """
    if not 1e-8 <= eps <= 1e-3:
        raise LomseDomainError(f"truncation eps must lie in [1e-8, 1e-3], got {eps}")
    P = metric.params
    length = curve_length(cone_segment(P), metric, rtol=1e-12)
    s_eps, s_star, r_star, s_all, k_all = _jacobi_run(metric, eps, rtol)
    check = _jacobi_run(metric, 0.5 * eps, rtol)[1]
    if (s_star is None) != (check is None):
        verdict = Verdict.INCONCLUSIVE
    elif s_star is None:
        verdict = Verdict.STABLE
    else:
        verdict = Verdict.UNSTABLE
    return StabilityReport(
        params=P, length=length, s_star=s_star, r_star=r_star, verdict=verdict,
        epsilon=eps, s_epsilon=s_eps, profile_s=s_all, profile_k=k_all,
    )
