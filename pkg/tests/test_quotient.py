import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TYPE_I, TYPE_II, cached_orbit
from locones import (
    ConsistencyError,
    GraphCurve,
    LomseParams,
    QuotientMetric,
    Verdict,
    classify_fixed_points,
    cone_deficit,
    cone_segment,
    cone_volume,
    curve_length,
    detect_crossings,
    gauss_curvature,
    jacobi_stability,
    orbit_to_graph,
    rescaled_graphs,
    volume_monotonicity,
)
from locones.errors import LomseDomainError
from locones.quotient import geodesic_residual
from oracles import fd_laplacian, ray_length_closed_form, trapezoid_length

ALL = TYPE_I + TYPE_II


def _metric(npk):
    return QuotientMetric(LomseParams.from_npk(*npk))


def test_cone_volume_hopf():
    m = _metric((3, 2, 2))
    assert cone_volume(m.params) == pytest.approx(9 * math.pi**2 / 2, rel=1e-14)
    assert curve_length(cone_segment(m.params), m, rtol=1e-12) == pytest.approx(9 * math.pi**2 / 2, rel=1e-8)


@pytest.mark.parametrize("npk", ALL)
def test_cone_quadrature_matches_closed_form(npk):
    m = _metric(npk)
    P = m.params
    ref = ray_length_closed_form(P.n, P.p, P.lambda_sq, P.phi0, 1.0, P.sigma0)
    assert cone_volume(P) == pytest.approx(ref, rel=1e-13)
    assert curve_length(cone_segment(P, radius=1.0), m) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("slope", [0.0, 0.4, 3.0])
def test_ray_lengths(slope):
    m = _metric((5, 4, 4))
    P = m.params
    r = np.geomspace(1e-4, 2.0, 30)
    ray = GraphCurve(r, slope * r, np.full_like(r, slope), from_origin=True, phi_ref=slope)
    ref = ray_length_closed_form(P.n, P.p, P.lambda_sq, slope, 2.0, P.sigma0)
    assert curve_length(ray, m) == pytest.approx(ref, rel=1e-8)


def test_flat_disk_length():
    m = _metric((3, 2, 2))
    r = np.geomspace(1e-3, 1.0, 10)
    disk = GraphCurve(r, np.zeros_like(r), np.zeros_like(r), from_origin=True)
    assert curve_length(disk, m) == pytest.approx(m.params.sigma0 / 4, rel=1e-10)


@pytest.mark.parametrize("npk", [(3, 2, 2), (3, 2, 4), (7, 4, 4)])
def test_orbit_length_against_polyline(npk):
    orbit = cached_orbit(*npk)
    graph = orbit_to_graph(orbit)
    m = _metric(npk)
    P = m.params
    # refine the samples so the polyline rule is accurate
    pieces = [np.linspace(a, b, 200, endpoint=False) for a, b in zip(orbit.t[:-1], orbit.t[1:])]
    t = np.concatenate(pieces + [orbit.t[-1:]])
    phi, _ = orbit.state(t)
    r = np.exp(t)
    # the piece below r = 1e-6 contributes ~1e-24 relative and is left out
    poly = trapezoid_length(r, phi * r, P.n, P.p, P.lambda_sq, P.sigma0)
    assert curve_length(graph, m) == pytest.approx(poly, rel=1e-5)


@pytest.mark.parametrize("s", [0.5, 2.0, 10.0])
@pytest.mark.parametrize("npk", [(3, 2, 2), (3, 2, 4), (5, 4, 6)])
def test_length_scaling_law(npk, s):
    m = _metric(npk)
    graph = orbit_to_graph(cached_orbit(*npk))
    base = curve_length(graph, m)
    assert curve_length(graph.scaled(s), m) == pytest.approx(s ** (m.params.n + 1) * base, rel=1e-10)


def test_curvature_closed_values():
    # K is homogeneous of degree -2n-2
    m = _metric((3, 2, 2))
    k1 = gauss_curvature(0.7, 0.3, m)
    for s in (0.5, 2.0, 10.0):
        assert gauss_curvature(0.7 * s, 0.3 * s, m) == pytest.approx(k1 * s ** -8, rel=1e-12)
    with pytest.raises(LomseDomainError):
        gauss_curvature(0.0, 0.3, m)


def _half_log_factor_offset(m, r0, rho0):
    """``(1/2) log E(x, y) - (1/2) log E(r0, rho0)`` via log1p."""
    P = m.params
    d0 = r0 * r0 + P.lambda_sq * rho0 * rho0

    def fn(x, y):
        dd = (x - r0) * (x + r0) + P.lambda_sq * (y - rho0) * (y + rho0)
        return 0.5 * (P.p * math.log1p(dd / d0) + 2 * (P.n - P.p) * math.log1p((x - r0) / r0))

    return fn


@pytest.mark.parametrize("npk", ALL)
def test_curvature_against_fd_laplacian(npk):
    m = _metric(npk)
    rng = np.random.default_rng(sum(npk))
    for _ in range(100):
        r = rng.uniform(0.2, 2.0)
        rho = rng.uniform(-2.0, 2.0)
        lap = fd_laplacian(_half_log_factor_offset(m, r, rho), r, rho, h=1e-5 * r)
        ref = -lap * math.exp(-float(m.log_factor(r, rho)))
        assert gauss_curvature(r, rho, m) == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("npk", ALL)
def test_ray_is_geodesic(npk):
    assert geodesic_residual(_metric(npk)) < 1e-6


@pytest.mark.parametrize("npk", ALL)
def test_scaled_curvature_is_constant_on_ray(npk):
    m = _metric(npk)
    P = m.params
    n = P.n
    beta = classify_fixed_points(P)[1].det
    for r in (1e-3, 0.1, 1.0, 5.0):
        s = cone_volume(P, r)
        assert s * s * gauss_curvature(r, P.phi0 * r, m) == pytest.approx(beta / (n + 1) ** 2, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(npk=st.sampled_from(ALL), r=st.floats(0.05, 20.0), rho=st.floats(-20.0, 20.0))
def test_conformal_factor_log_consistent(npk, r, rho):
    m = _metric(npk)
    e = float(m.conformal_factor(r, rho))
    assert math.log(e) == pytest.approx(float(m.log_factor(r, rho)), rel=1e-12, abs=1e-12)


def _rescaled(npk, count):
    orbit = cached_orbit(*npk, converge_tol=1e-60, tol=1e-13)
    events = detect_crossings(orbit, max_events=count)
    return rescaled_graphs(orbit_to_graph(orbit), events), events


def test_volumes_increase_to_cone():
    m = _metric((3, 2, 4))
    curves, events = _rescaled((3, 2, 4), 4)
    vols = volume_monotonicity(curves[:3], m)
    assert len(vols) == 4
    assert vols[0] < vols[1] < vols[2] <= vols[3]
    assert vols[-1] == cone_volume(m.params)
    d = [cone_deficit(c, m) for c in curves]
    assert all(x.resolved for x in d)
    n1 = m.params.n + 1
    for i in range(2):
        assert d[i + 1].value / d[i].value == pytest.approx((events[i].r / events[i + 1].r) ** n1, rel=0.05)


def test_deficit_requires_closed_curve():
    m = _metric((3, 2, 4))
    orbit = cached_orbit(3, 2, 4)
    half = int(np.argmax(orbit.phi >= 0.5 * orbit.params.phi0))
    graph = orbit_to_graph(orbit)
    open_curve = GraphCurve(graph.r[:half], graph.rho[:half], graph.slope[:half], True,
                            graph.phi_ref, graph.rtol, graph.profile_fn)
    with pytest.raises(ValueError):
        cone_deficit(open_curve, m)
    with pytest.raises(ValueError):
        volume_monotonicity([graph.scaled(2.0)], m)
    with pytest.raises(ValueError):
        cone_deficit(GraphCurve(graph.r, graph.rho, graph.slope), m)


def test_unresolvable_deficits_are_reported():
    m = _metric((5, 4, 6))
    curves, _ = _rescaled((5, 4, 6), 3)
    assert not cone_deficit(curves[2], m).resolved
    with pytest.raises(ConsistencyError):
        volume_monotonicity(curves, m)


@pytest.mark.parametrize("npk, verdict", [((3, 2, 2), Verdict.STABLE), ((3, 2, 4), Verdict.UNSTABLE),
                                          ((7, 4, 4), Verdict.STABLE), ((3, 2, 8), Verdict.UNSTABLE)])
def test_jacobi_verdicts(npk, verdict):
    rep = jacobi_stability(_metric(npk))
    assert rep.verdict is verdict
    assert rep.length == pytest.approx(cone_volume(rep.params), rel=1e-10)
    if verdict is Verdict.UNSTABLE:
        assert 0.0 < rep.s_star < rep.length
        assert 0.0 < rep.r_star < 1.0
    else:
        assert rep.s_star is None and rep.r_star is None


def test_conjugate_point_against_euler_solution():
    # s^2 K = c is constant, so J = s^(1/2) sin(w log(s / s_eps)) with w = sqrt(c - 1/4)
    m = _metric((3, 2, 4))
    rep = jacobi_stability(m, eps=1e-6, rtol=1e-12)
    c = classify_fixed_points(m.params)[1].det / 16
    w = math.sqrt(c - 0.25)
    assert rep.s_star == pytest.approx(rep.s_epsilon * math.exp(math.pi / w), rel=1e-6)


def test_jacobi_eps_domain():
    m = _metric((3, 2, 2))
    for eps in (1e-9, 1e-2):
        with pytest.raises(LomseDomainError):
            jacobi_stability(m, eps=eps)


def _schema(name):
    return json.loads(resources.files("locones").joinpath("schemas", name).read_text())


@pytest.mark.parametrize("npk", [(3, 2, 2), (3, 2, 4)])
def test_stability_json_round_trip(npk):
    rep = jacobi_stability(_metric(npk))
    text = rep.to_json()
    data = json.loads(text)
    jsonschema.validate(data, _schema("stability.schema.json"))
    assert data == rep.to_json_dict()
    assert json.dumps(data, indent=2, sort_keys=True) == text
