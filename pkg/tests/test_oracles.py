import math

import numpy as np
import pytest
from scipy.integrate import quad

from qgraph import families
from qgraph.graph import Delta, GraphError
from qgraph.oracles import (
    DumbbellParams,
    OracleError,
    RingParams,
    StarDeltaParams,
    TadpoleParams,
    _tadpole_condition,
    dumbbell_reference,
    ring_ground_state,
    ring_modulus,
    ring_modulus_for_period,
    ring_profile,
    soliton,
    soliton_exact,
    star_delta_ground_state,
    tadpole_constants,
    tadpole_ground_state,
    tadpole_mass,
    tadpole_profiles,
)
from qgraph.operator import vertex_values
from qgraph.special import dn, ellip_E
from qgraph.wavefunction import WaveFunction, mass

from oracles import E_quad


def interior(g, margin=0.25):
    """Nodes at least ``margin`` away from both ends of their edge."""
    m = np.zeros(g.size, dtype=bool)
    for i, e in enumerate(g.edges):
        x = g.edge_x(i)
        m[g.mesh.edge_slice(i)] = (x >= margin) & (x <= e.length - margin)
    return m


def stationary_residual(u: WaveFunction, lam: float, omega: float) -> float:
    """``max |Hu - lam |u|^2 u + omega u|`` over nodes away from the vertices."""
    v = u.values
    r = u.graph.operator.H @ v - lam * np.abs(v) ** 2 * v + omega * v
    return float(np.abs(r[interior(u.graph)]).max())


# ring ------------------------------------------------------------------------
def test_ring_below_threshold_is_constant():
    P = RingParams(mass=0.9 * 2 * math.pi**2 / (2.0 * 2 * math.pi), lam=2.0)
    g = families.ring(total_nodes=200)
    u = ring_ground_state(P, g)
    np.testing.assert_allclose(u.values, math.sqrt(P.mass / (2 * math.pi)), rtol=1e-15)


def test_ring_threshold_assigned_to_constant_branch():
    P = RingParams(mass=math.pi / 2, lam=2.0)
    assert P.threshold == pytest.approx(math.pi / 2)
    assert ring_modulus(RingParams(mass=P.threshold, lam=2.0)) == 0.0
    assert ring_modulus(RingParams(mass=P.threshold * (1 + 1e-6), lam=2.0)) > 0.0


def test_ring_calibration_is_dn():
    k = ring_modulus_for_period(2 * math.pi)
    P = RingParams(mass=2 * ellip_E(k), lam=2.0)
    f, k2 = ring_profile(P)
    assert k2 == pytest.approx(k, rel=1e-12)
    s = np.linspace(0, 2 * math.pi, 9)
    np.testing.assert_allclose(f(s), dn(s, k), rtol=1e-11)
    assert 2 * E_quad(math.pi / 2, k) == pytest.approx(P.mass, rel=1e-12)


def test_ring_supercritical_mass():
    # the dnoidal branch reproduces its mass for a generic lam and perimeter
    P = RingParams(mass=3.0, perimeter=5.0, lam=1.5)
    f, k = ring_profile(P)
    assert 0 < k < 1
    m, _ = quad(lambda s: float(f(s)) ** 2, 0, P.perimeter, limit=200)
    assert m == pytest.approx(P.mass, rel=1e-10)
    assert float(f(0.0)) == pytest.approx(float(f(P.perimeter)), rel=1e-10)


def test_ring_errors():
    with pytest.raises(OracleError):
        ring_profile(RingParams(mass=0.0))
    with pytest.raises(GraphError):
        ring_ground_state(RingParams(mass=1.0), families.segment(1.0, total_nodes=10))


@pytest.mark.parametrize("n", [500, 1000])
def test_ring_stationary_residual(n):
    k = ring_modulus_for_period(2 * math.pi)
    P = RingParams(mass=2 * ellip_E(k), lam=2.0)
    rs = []
    for m in (n, 2 * n):
        g = families.ring(nodes_per_edge=[m, m])
        u = ring_ground_state(P, g)
        # dn'' = (2 - k^2) dn - 2 dn^3, so omega = 2 - k^2 with lam = 2
        rs.append(stationary_residual(u, 2.0, 2 - k * k))
        assert rs[-1] <= 5 * g.mesh.dx.max() ** 2
    assert rs[0] / rs[1] == pytest.approx(4.0, abs=0.5)


# star ---------------------------------------------------------------------------
def test_star_constants():
    P = StarDeltaParams(6, -4.0, 1.0)
    assert P.xbar == pytest.approx(math.atanh(4 / 6), rel=1e-15)
    assert P.xbar == pytest.approx(0.8047189562, abs=1e-10)
    assert P.mass == pytest.approx(4.0)
    assert P.vertex_strength() == 4.0


def test_star_two_edges_zero_alpha_limit():
    P = StarDeltaParams(2, -1e-12, 1.0)
    assert P.xbar == pytest.approx(0.0, abs=1e-11)
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(P.profile(x), math.sqrt(2) / np.cosh(x), rtol=1e-10)
    assert P.mass == pytest.approx(4.0, rel=1e-10)


@pytest.mark.parametrize("N, alpha, omega", [(6, -6.0, 1.0), (3, 1.0, 1.0), (2, -4.0, 1.0)])
def test_star_domain_errors(N, alpha, omega):
    with pytest.raises(OracleError):
        StarDeltaParams(N, alpha, omega).xbar


def test_star_profile_on_graph():
    P = StarDeltaParams()
    g = families.star(6, 40.0, {"O": Delta(P.vertex_strength())}, total_nodes=6000)
    u = star_delta_ground_state(P, g)
    x = g.edge_x(0)
    np.testing.assert_allclose(u.edge_values(g.edges[0].key), math.sqrt(2) / np.cosh(x + P.xbar), rtol=1e-14)
    with pytest.raises(GraphError):
        star_delta_ground_state(P, families.star(3, 10.0, total_nodes=300))


def test_star_stationary_residual():
    P = StarDeltaParams()
    rs = []
    for n in (400, 800):
        g = families.star(6, 40.0, {"O": Delta(P.vertex_strength())}, nodes_per_edge=[n] * 6)
        rs.append(stationary_residual(star_delta_ground_state(P, g), 1.0, 1.0))
    assert rs[0] / rs[1] == pytest.approx(4.0, abs=0.5)


@pytest.mark.xfail(strict=True, reason="trapezoid mass error at N_e=1000 on 40-long edges is 1.2e-3, not 1e-8")
def test_star_mass_at_1000_nodes():
    P = StarDeltaParams()
    g = families.star(6, 40.0, {"O": Delta(P.vertex_strength())}, nodes_per_edge=[1000] * 6)
    assert mass(star_delta_ground_state(P, g)) == pytest.approx(P.mass, abs=1e-8)


def test_star_mass_second_order():
    P = StarDeltaParams()
    errs = []
    for n in (1000, 2000, 4000):
        g = families.star(6, 40.0, {"O": Delta(P.vertex_strength())}, nodes_per_edge=[n] * 6)
        errs.append(abs(mass(star_delta_ground_state(P, g)) - P.mass))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, abs=0.2)


# tadpole --------------------------------------------------------------------------
def test_tadpole_constants():
    P = TadpoleParams(1.0, 1.0)
    k, b = tadpole_constants(P)
    assert k == pytest.approx(0.81664827149276692790, abs=1e-12)
    # the quoted b is the magnitude of the negative root
    assert b == pytest.approx(-0.89507479534736339894, abs=1e-12)
    assert abs(_tadpole_condition(k, P)) <= 1e-12


def test_tadpole_mass():
    P = TadpoleParams()
    assert tadpole_mass(P) == pytest.approx(3.1727382562292, abs=1e-8)
    g = families.tadpole(1.0, 30.0, nodes_per_edge=[1000, 1000, 30000])
    assert mass(tadpole_ground_state(P, g)) == pytest.approx(tadpole_mass(P, 30.0), abs=1e-8)


def test_tadpole_state_is_continuous_and_stationary():
    P = TadpoleParams()
    rs = []
    for n in (500, 1000):
        g = families.tadpole(1.0, 30.0, nodes_per_edge=[n, n, 30 * n])
        u = tadpole_ground_state(P, g)
        ring, tail, _, _ = tadpole_profiles(P)
        assert float(ring(1.0)) == pytest.approx(float(tail(0.0)), rel=1e-12)
        J = vertex_values(g, u)["J"]
        assert np.ptp(J) <= 1e-3 * g.mesh.dx.max()
        rs.append(stationary_residual(u, 1.0, P.omega))
    assert rs[0] / rs[1] == pytest.approx(4.0, abs=0.5)
    with pytest.raises(GraphError):
        tadpole_ground_state(P, families.ring(total_nodes=20))


# dumbbell -------------------------------------------------------------------------
def test_dumbbell_reference():
    ref = dumbbell_reference(DumbbellParams(0.10))
    assert ref["constant_energy"] == pytest.approx(-2.6930411461e-4, rel=1e-10)
    assert ref["constant_value"] == pytest.approx(math.sqrt(0.1 / (6 + 4 * math.pi)), rel=1e-15)
    assert ref["m_star"] == 0.18646428284896863
    assert ref["m_2star"] == 1.2334076715778846
    zero = dumbbell_reference(DumbbellParams(0.0))
    assert zero["constant_value"] == 0.0 and zero["constant_energy"] == 0.0
    other = dumbbell_reference(DumbbellParams(0.1, L=2.0))
    assert other["m_star"] is None and other["m_2star"] is None
    with pytest.raises(OracleError):
        DumbbellParams(-1.0)
    with pytest.raises(OracleError):
        DumbbellParams(1.0, L=0.0)


# soliton ----------------------------------------------------------------------------
def test_soliton():
    x = np.linspace(-2, 8, 101)
    s = soliton(x, 20, 3, 3)
    np.testing.assert_allclose(np.abs(s), 20 / (2 * math.sqrt(2)) / np.cosh(5 * (x - 3)), rtol=1e-14)
    still = soliton(x, 4, 0, 3)
    assert np.all(still.imag == 0) and np.all(still.real > 0)
    np.testing.assert_allclose(soliton(3 + x, 4, 0, 3).real, soliton(3 - x, 4, 0, 3).real, rtol=1e-14)
    np.testing.assert_array_equal(soliton_exact(x, 0.0, 20, 3, 3), s)


@pytest.mark.parametrize("m", [2.0, 8.0, 20.0])
def test_soliton_mass_frozen(m):
    # frozen from quadrature: the line mass equals m
    val, _ = quad(lambda t: abs(complex(soliton(t, m, 1.0, 0.0))) ** 2, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert val == pytest.approx(m, rel=1e-11)
