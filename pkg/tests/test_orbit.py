import io
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import TYPE_I, TYPE_II, cached_orbit
from locones import (
    GraphCurve,
    LomseParams,
    OrbitTerminal,
    classify_fixed_points,
    detect_crossings,
    launch_unstable_orbit,
    orbit_to_graph,
    rescaled_graphs,
)
from locones.errors import LomseDomainError
from locones.orbit import write_crossings_csv, write_curve_csv, write_orbit_csv


def _half_way(orbit):
    """State where the orbit first reaches phi = phi0 / 2."""
    phi0 = orbit.params.phi0
    i = int(np.argmax(orbit.phi >= 0.5 * phi0))
    t = brentq(lambda tt: orbit.state(tt)[0] - 0.5 * phi0, orbit.t[i - 1], orbit.t[i], xtol=1e-14)
    return t, orbit.state(t)


@pytest.mark.parametrize("npk", TYPE_I)
def test_type_one_converges(npk):
    orbit = cached_orbit(*npk)
    assert orbit.terminal is OrbitTerminal.CONVERGED_TO_P
    assert orbit.distance_to_p() <= 1e-8 * (1 + 1e-6)
    assert orbit.t_end - orbit.t_start < 200


@pytest.mark.parametrize("npk", TYPE_I)
def test_type_one_has_no_crossings(npk):
    orbit = cached_orbit(*npk)
    assert detect_crossings(orbit) == []
    assert np.all(orbit.phi < orbit.params.phi0)


def test_orbit_starts_on_unstable_direction(params_322):
    orbit = launch_unstable_orbit(params_322, eps=1e-6)
    assert orbit.t_start == pytest.approx(math.log(1e-6))
    assert math.hypot(orbit.phi[0], orbit.psi[0]) == pytest.approx(1e-6, rel=1e-12)
    # mu+ = k - 1 = 1, so the start lies on psi = phi
    assert orbit.psi[0] == pytest.approx(orbit.phi[0], rel=1e-12)


@pytest.mark.parametrize("npk", [(3, 2, 2), (3, 2, 4), (5, 4, 4)])
def test_launch_offset_only_shifts_time(npk):
    P = LomseParams.from_npk(*npk)
    a = launch_unstable_orbit(P, eps=1e-6)
    b = launch_unstable_orbit(P, eps=1e-5)
    _, sa = _half_way(a)
    _, sb = _half_way(b)
    assert sa[1] == pytest.approx(sb[1], abs=1e-6)


def test_launch_time_shift_matches_growth_rate():
    P = LomseParams.from_npk(3, 2, 2)
    ta, _ = _half_way(launch_unstable_orbit(P, eps=1e-6))
    tb, _ = _half_way(launch_unstable_orbit(P, eps=1e-5))
    assert ta - tb == pytest.approx(math.log(10.0), rel=1e-4)


@pytest.mark.parametrize("npk", TYPE_II)
def test_type_two_crossings_alternate(npk):
    orbit = cached_orbit(*npk, converge_tol=1e-60)
    assert orbit.terminal is OrbitTerminal.CONVERGED_TO_P
    events = detect_crossings(orbit)
    assert len(events) >= 3
    assert [e.index for e in events] == list(range(1, len(events) + 1))
    assert all(a.r < b.r for a, b in zip(events, events[1:]))
    for e in events:
        assert e.phi == pytest.approx(orbit.params.phi0, abs=1e-12)
        assert e.r == pytest.approx(math.exp(e.t), rel=1e-15)
    # first crossing goes outwards, then the sign of psi alternates
    assert events[0].psi > 0
    signs = [np.sign(e.psi) for e in events]
    assert all(s1 == -s2 for s1, s2 in zip(signs, signs[1:]))


@pytest.mark.parametrize("npk", [(3, 2, 4), (3, 2, 8)])
def test_half_turn_crossing_ratio(npk):
    orbit = cached_orbit(*npk, converge_tol=1e-60)
    events = detect_crossings(orbit)
    im = abs(classify_fixed_points(orbit.params)[1].eigenvalues[0].imag)
    for a, b in zip(events[2:], events[3:]):
        assert b.r / a.r == pytest.approx(math.exp(math.pi / im), rel=0.02)


def test_max_events_caps_crossings():
    orbit = cached_orbit(3, 2, 4, converge_tol=1e-60)
    assert len(detect_crossings(orbit, max_events=2)) == 2
    assert detect_crossings(orbit, max_events=0) == []
    with pytest.raises(ValueError):
        detect_crossings(orbit, max_events=-1)


def test_crossings_need_converged_orbit(params_324):
    orbit = launch_unstable_orbit(params_324, t_max=1.0)
    assert orbit.terminal is OrbitTerminal.MAX_TIME_REACHED
    with pytest.raises(ValueError):
        detect_crossings(orbit)


def test_launch_domain_checks(params_322):
    for kwargs in [dict(eps=0.0), dict(eps=1e-3), dict(tol=0.0), dict(t_max=-1.0), dict(converge_tol=2.0)]:
        with pytest.raises(LomseDomainError):
            launch_unstable_orbit(params_322, **kwargs)


@pytest.mark.parametrize("npk", [(3, 2, 2), (3, 2, 4), (7, 4, 4)])
def test_profile_slope_matches_derivative(npk):
    orbit = cached_orbit(*npk)
    t = np.linspace(orbit.t_start + 1.0, orbit.t_end - 1.0, 60)

    def rho(r):
        return orbit.state(math.log(r))[0] * r

    for tt in t:
        r = math.exp(tt)
        h = 1e-5 * r
        fd = (rho(r + h) - rho(r - h)) / (2 * h)
        phi, psi = orbit.state(tt)
        assert fd == pytest.approx(phi + psi, rel=1e-4, abs=1e-10)


def test_graph_curve_from_orbit():
    orbit = cached_orbit(3, 2, 4)
    g = orbit_to_graph(orbit)
    np.testing.assert_allclose(g.r, np.exp(orbit.t))
    np.testing.assert_allclose(g.rho / g.r, orbit.phi, rtol=1e-14)
    assert g.from_origin and g.phi_ref == orbit.params.phi0


def test_rescaled_graphs_end_at_q():
    orbit = cached_orbit(3, 2, 4, converge_tol=1e-60)
    events = detect_crossings(orbit, max_events=4)
    curves = rescaled_graphs(orbit_to_graph(orbit), events)
    assert len(curves) == 4
    for c in curves:
        assert c.r[-1] == pytest.approx(1.0, rel=1e-14)
        assert c.rho[-1] == pytest.approx(orbit.params.phi0, abs=1e-12)
    with pytest.raises(ValueError):
        rescaled_graphs(orbit_to_graph(orbit), [])


def test_graph_curve_validation():
    with pytest.raises(ValueError):
        GraphCurve(np.array([1.0, 0.5]), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        GraphCurve(np.array([0.0, 1.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        GraphCurve(np.array([1.0]), np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        GraphCurve(np.array([1.0, 2.0]), np.zeros(3), np.zeros(2))


def test_spline_profile_of_straight_line():
    r = np.geomspace(0.1, 1.0, 20)
    g = GraphCurve(r, 0.3 * r, np.full_like(r, 0.3))
    dev, psi = g.profile(np.log(0.37))
    assert dev == pytest.approx(0.3)
    assert psi == pytest.approx(0.0, abs=1e-14)
    h = g.scaled(2.0)
    assert h.r_end == 2.0
    assert h.profile(np.log(0.74))[0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        g.scaled(0.0)


def test_csv_writers():
    orbit = cached_orbit(3, 2, 4, converge_tol=1e-60)
    events = detect_crossings(orbit, max_events=3)
    buf = io.StringIO()
    write_crossings_csv(events, buf)
    lines = buf.getvalue().split("\r\n")
    assert lines[0] == "i,t_i,r_i"
    assert len(lines) == 5 and lines[-1] == ""
    assert float(lines[1].split(",")[2]) == events[0].r
    buf = io.StringIO()
    write_orbit_csv(orbit, buf)
    assert buf.getvalue().startswith("t,phi,psi\r\n")
    buf = io.StringIO()
    write_curve_csv(orbit_to_graph(orbit), buf)
    assert buf.getvalue().count("\r\n") == orbit.t.size + 1
