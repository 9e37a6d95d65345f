"""Shooting the distinguished orbit and turning it into minimal-graph profiles.

The orbit leaves the origin along its one-dimensional unstable manifold and
tends to ``P = (phi0, 0)``.  Integration runs in two legs:

* from the launch point until ``phi = phi0 / 2`` in the original
  coordinates, where relative error control on the small ``phi`` matters;
* from there on in the deviation ``x = phi - phi0`` (see
  :func:`locones.phase.centered_field`), which keeps relative precision on
  spiral amplitudes far below ``1e-16``.

Both legs use scipy's DOP853 pair with dense output.  Time is re-based so
that the launch point sits at ``t = log(r_min)``; with ``r = e^t`` the
profile then covers radii from ``r_min`` outward.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import bisect

from .errors import LomseDomainError, NumericalError
from .lomse import LomseParams
from .phase import PhaseState, centered_field, unstable_direction, vector_field

__all__ = [
    "OrbitTerminal",
    "Orbit",
    "CrossingEvent",
    "GraphCurve",
    "launch_unstable_orbit",
    "detect_crossings",
    "orbit_to_graph",
    "rescaled_graphs",
    "write_orbit_csv",
    "write_curve_csv",
    "write_crossings_csv",
    "DIVERGENCE_RADIUS",
]

DIVERGENCE_RADIUS = 1e6
_MIN_ATOL = 1e-300


class OrbitTerminal(enum.Enum):
    CONVERGED_TO_P = "ConvergedToP"
    MAX_TIME_REACHED = "MaxTimeReached"
    DIVERGED = "Diverged"


class _PiecewiseSolution:
    """Dense output of the two legs, evaluated as the deviation from P."""

    def __init__(self, phi0, first, first_end, second=None):
        self.phi0 = phi0
        self.first = first
        self.first_end = first_end
        self.second = second

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        scalar = tau.ndim == 0
        tau = np.atleast_1d(tau)
        out = np.empty((2, tau.size))
        left = tau <= self.first_end if self.second is not None else np.ones(tau.size, bool)
        if left.any():
            y = self.first(tau[left])
            out[0, left] = y[0] - self.phi0
            out[1, left] = y[1]
        if (~left).any():
            out[:, ~left] = self.second(tau[~left])
        return out[:, 0] if scalar else out


@dataclass(frozen=True, eq=False)
class Orbit:
    """A sampled trajectory of the reduced system with dense output.

    ``t``, ``phi`` and ``psi`` are the accepted integrator steps.  Use
    :meth:`state` or :meth:`deviation` for values between steps.
    """

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    params: LomseParams
    launch_epsilon: float
    terminal: OrbitTerminal
    tol: float
    converge_tol: float
    _dense: _PiecewiseSolution = field(repr=False)
    _t_offset: float = field(repr=False)

    def deviation(self, t):
        """``(phi - phi0, psi)`` at time(s) ``t`` from the dense output."""
        return self._dense(np.asarray(t, dtype=float) - self._t_offset)

    def state(self, t):
        x, psi = self.deviation(t)
        return x + self.params.phi0, psi

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def samples(self) -> list[tuple[float, PhaseState]]:
        return [(float(t), PhaseState(float(a), float(b))) for t, a, b in zip(self.t, self.phi, self.psi)]

    def distance_to_p(self) -> float:
        x, psi = self.deviation(self.t_end)
        return float(math.hypot(x, psi))


def launch_unstable_orbit(
    params: LomseParams,
    eps: float = 1e-6,
    tol: float = 1e-10,
    t_max: float = 200.0,
    converge_tol: float = 1e-8,
    r_min: float = 1e-6,
) -> Orbit:
    """Shoot the orbit leaving the origin along the unstable eigendirection.

    Starts at ``eps * v+`` and integrates for at most ``t_max`` units of
    ``t`` until the state is within ``converge_tol`` of P.  Relative
    tolerance is ``tol``; the absolute tolerance is ``tol * converge_tol``,
    so accuracy relative to the deviation from P is kept all the way down to
    the convergence threshold.
    """
    if not 0.0 < eps <= 1e-4:
        raise LomseDomainError(f"launch offset eps must lie in (0, 1e-4], got {eps}")
    if not 0.0 < tol < 1e-3:
        raise LomseDomainError(f"tolerance must lie in (0, 1e-3), got {tol}")
    if not t_max > 0.0:
        raise LomseDomainError(f"t_max must be positive, got {t_max}")
    if not 0.0 < converge_tol < 1.0:
        raise LomseDomainError(f"converge_tol must lie in (0, 1), got {converge_tol}")
    phi0 = params.phi0
    atol = max(tol * converge_tol, _MIN_ATOL)
    _, v = unstable_direction(params)
    y0 = eps * v

    def rhs(_, y):
        return vector_field(y, params)

    def reach_half(_, y):
        return y[0] - 0.5 * phi0

    reach_half.terminal = True
    reach_half.direction = 1

    def blow_up(_, y):
        return math.hypot(y[0], y[1]) - DIVERGENCE_RADIUS

    blow_up.terminal = True

    leg1 = solve_ivp(
        rhs, (0.0, t_max), y0, method="DOP853", rtol=tol, atol=atol,
        dense_output=True, events=[reach_half, blow_up],
    )
    if leg1.status < 0:
        raise NumericalError(f"integration failed: {leg1.message}")
    taus = [leg1.t]
    phis = [leg1.y[0]]
    psis = [leg1.y[1]]
    terminal = OrbitTerminal.MAX_TIME_REACHED
    second = None
    if leg1.t_events[1].size:
        terminal = OrbitTerminal.DIVERGED
    elif leg1.t_events[0].size:
        tau1 = float(leg1.t[-1])

        def rhs_c(_, y):
            return centered_field(y[0], y[1], params)

        log_ctol = math.log(converge_tol)

        def converged(_, y):
            d = math.hypot(y[0], y[1])
            return (math.log(d) if d > 0.0 else -math.inf) - log_ctol

        converged.terminal = True
        converged.direction = -1

        def blow_up_c(_, y):
            return math.hypot(y[0] + phi0, y[1]) - DIVERGENCE_RADIUS

        blow_up_c.terminal = True

        start = np.array([leg1.y[0, -1] - phi0, leg1.y[1, -1]])
        leg2 = solve_ivp(
            rhs_c, (tau1, t_max), start, method="DOP853", rtol=tol, atol=atol,
            dense_output=True, events=[converged, blow_up_c],
        )
        if leg2.status < 0:
            raise NumericalError(f"integration failed: {leg2.message}")
        taus.append(leg2.t[1:])
        phis.append(leg2.y[0, 1:] + phi0)
        psis.append(leg2.y[1, 1:])
        second = leg2.sol
        if leg2.t_events[1].size:
            terminal = OrbitTerminal.DIVERGED
        elif leg2.t_events[0].size:
            terminal = OrbitTerminal.CONVERGED_TO_P

    tau = np.concatenate(taus)
    phi = np.concatenate(phis)
    psi = np.concatenate(psis)
    if terminal is not OrbitTerminal.DIVERGED and _leaves_box(phi, psi, phi0):
        terminal = OrbitTerminal.DIVERGED
    offset = math.log(r_min)
    dense = _PiecewiseSolution(phi0, leg1.sol, float(leg1.t[-1]), second)
    return Orbit(
        t=tau + offset, phi=phi, psi=psi, params=params, launch_epsilon=eps,
        terminal=terminal, tol=tol, converge_tol=converge_tol,
        _dense=dense, _t_offset=offset,
    )


def _leaves_box(phi, psi, phi0) -> bool:
    inside = (np.abs(phi) <= 2.0 * phi0 + 1.0) & (np.abs(psi) <= 10.0)
    if not inside.any():
        return False
    first = int(np.argmax(inside))
    return not inside[first:].all()


@dataclass(frozen=True)
class CrossingEvent:
    """The orbit meets the cone ray ``phi = phi0`` at ``t``, radius ``r = e^t``."""

    index: int
    t: float
    r: float
    phi: float
    psi: float

    @property
    def state(self) -> PhaseState:
        return PhaseState(self.phi, self.psi)


def detect_crossings(orbit: Orbit, max_events: int = 50) -> list[CrossingEvent]:
    """Times at which ``phi(t) - phi0`` changes sign, in order.

    Sign changes are bracketed on the integrator steps (each step is also
    probed at three interior points of the dense output) and refined by
    bisection down to floating-point resolution in ``t``.  At most
    ``max_events`` events are returned.
    """
    if orbit.terminal is not OrbitTerminal.CONVERGED_TO_P:
        raise ValueError(f"crossings need a converged orbit, got {orbit.terminal.value}")
    if max_events < 0:
        raise ValueError("max_events must be non-negative")
    if max_events == 0:
        return []
    t = orbit.t
    fine = np.concatenate([t[:-1, None] + np.diff(t)[:, None] * np.array([0.0, 0.25, 0.5, 0.75]), t[-1:, None]], axis=None)
    fine = np.unique(fine)
    x = orbit.deviation(fine)[0]
    keep = x != 0.0
    tk, sk = fine[keep], np.sign(x[keep])
    brackets = np.nonzero(sk[:-1] * sk[1:] < 0.0)[0]

    def g(tt):
        return float(orbit.deviation(tt)[0])

    events = []
    for i in brackets[:max_events]:
        a, b = float(tk[i]), float(tk[i + 1])
        tc = bisect(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
        xc, psic = orbit.deviation(tc)
        events.append(
            CrossingEvent(
                index=len(events) + 1, t=tc, r=math.exp(tc),
                phi=float(orbit.params.phi0 + xc), psi=float(psic),
            )
        )
    return events


@dataclass(frozen=True, eq=False)
class GraphCurve:
    """A profile ``rho(r)`` in the ``r``-``rho`` half plane.

    ``profile`` (optional) evaluates ``(phi - phi_ref, psi)`` as a function
    of ``u = log r``, where ``phi = rho / r`` and ``psi = d phi / du``; it is
    used for quadrature.  Without it a cubic Hermite interpolant in ``u`` is
    built from the samples.  ``from_origin`` marks curves that continue to
    the origin below the first sample.  ``rtol`` records the relative
    accuracy of the underlying data (None for exact curves).
    """

    r: np.ndarray
    rho: np.ndarray
    slope: np.ndarray
    from_origin: bool = False
    phi_ref: float = 0.0
    rtol: float | None = None
    profile_fn: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        slope = np.asarray(self.slope, dtype=float)
        if r.ndim != 1 or r.size < 2 or rho.shape != r.shape or slope.shape != r.shape:
            raise ValueError("a curve needs matching 1-D r, rho, slope arrays of length >= 2")
        if np.any(r <= 0.0):
            raise ValueError("curve samples must have r > 0")
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("curve samples must have strictly increasing r")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "slope", slope)

    @cached_property
    def _spline(self):
        u = np.log(self.r)
        phi = self.rho / self.r
        return CubicHermiteSpline(u, phi - self.phi_ref, self.slope - phi)

    def profile(self, u):
        """``(phi - phi_ref, psi)`` at log radius ``u``."""
        if self.profile_fn is not None:
            return self.profile_fn(u)
        s = self._spline
        return np.array([s(u), s(u, 1)])

    @property
    def r_end(self) -> float:
        return float(self.r[-1])

    def scaled(self, s: float) -> "GraphCurve":
        """Homothety ``(r, rho) -> (s r, s rho)``; slopes are unchanged."""
        if not s > 0.0:
            raise ValueError("scale factor must be positive")
        shift = math.log(s)
        base = self.profile

        def fn(u):
            return base(np.asarray(u) - shift)

        return GraphCurve(
            self.r * s, self.rho * s, self.slope, self.from_origin,
            self.phi_ref, self.rtol, fn,
        )


def orbit_to_graph(orbit: Orbit) -> GraphCurve:
    """``(r, rho) = (e^t, phi e^t)`` with slope channel ``phi + psi``."""
    if orbit.t.size < 2:
        raise ValueError("orbit has fewer than two samples")
    r = np.exp(orbit.t)
    return GraphCurve(
        r=r, rho=orbit.phi * r, slope=orbit.phi + orbit.psi, from_origin=True,
        phi_ref=orbit.params.phi0, rtol=orbit.tol, profile_fn=orbit.deviation,
    )


def rescaled_graphs(curve: GraphCurve, events: Iterable[CrossingEvent]) -> list[GraphCurve]:
    """Truncate the curve at each crossing radius and rescale it to radius 1.

    Every returned curve ends at ``(1, phi0)`` up to the crossing refinement
    error, so all of them share the cone's boundary data.
    """
    events = list(events)
    if not events:
        raise ValueError("rescaled_graphs needs at least one crossing event")
    out = []
    for ev in events:
        keep = curve.r < ev.r * (1.0 - 1e-12)
        dev, psi = curve.profile(math.log(ev.r))
        phi_end = curve.phi_ref + float(dev)
        r = np.append(curve.r[keep], ev.r)
        rho = np.append(curve.rho[keep], phi_end * ev.r)
        slope = np.append(curve.slope[keep], phi_end + float(psi))
        piece = GraphCurve(r, rho, slope, curve.from_origin, curve.phi_ref, curve.rtol, curve.profile_fn)
        out.append(piece.scaled(1.0 / ev.r))
    return out


def _write_rows(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_orbit_csv(orbit: Orbit, fh) -> None:
    _write_rows(fh, ["t", "phi", "psi"], zip(orbit.t, orbit.phi, orbit.psi))


def write_curve_csv(curve: GraphCurve, fh) -> None:
    _write_rows(fh, ["r", "rho", "slope"], zip(curve.r, curve.rho, curve.slope))


def write_crossings_csv(events: Iterable[CrossingEvent], fh) -> None:
    _write_rows(fh, ["i", "t_i", "r_i"], ((e.index, e.t, e.r) for e in events))
