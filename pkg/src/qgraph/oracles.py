"""Closed-form stationary states used to validate the solvers.

Each oracle returns the exact profile sampled on a graph built by
:mod:`qgraph.families` (or any graph with the same vertex names), together
with the constants that define it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphError
from .special import cn, dn, ellip_E, ellip_K
from .wavefunction import WaveFunction, from_edge_functions


class OracleError(ValueError):
    pass


def _sech(z):
    # cosh overflows past |z| ~ 710, where sech is already below the smallest double
    return 1.0 / np.cosh(np.clip(z, -700.0, 700.0))


def bisect(f, a: float, b: float, tol: float = 1e-15, maxiter: int = 200) -> float:
    """Root of ``f`` in ``[a, b]`` by bisection; ``f(a)`` and ``f(b)`` must differ in sign."""
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if (fa > 0) == (fb > 0):
        raise OracleError(f"no sign change on [{a}, {b}]")
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or (b - a) < tol * max(1.0, abs(m)):
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


# ring ------------------------------------------------------------------------
@dataclass(frozen=True)
class RingParams:
    """Ring of perimeter ``T`` with nonlinearity ``lam |u|^2 u`` at mass ``mass``."""

    mass: float
    perimeter: float = 2 * math.pi
    lam: float = 1.0
    center: float = 0.0  # arc-length position of the maximum

    @property
    def threshold(self) -> float:
        """Mass below which the constant state is the ground state."""
        return 2 * math.pi**2 / (self.lam * self.perimeter)


def ring_modulus(params: RingParams) -> float:
    """Modulus ``k`` of the dnoidal ground state: ``8 K(k) E(k) / (lam T) = mass``."""
    T, lam, m = params.perimeter, params.lam, params.mass
    if m <= params.threshold:
        return 0.0
    return bisect(lambda k: 8 * ellip_K(k) * ellip_E(k) / (lam * T) - m, 1e-16, 1 - 1e-15)


def ring_profile(params: RingParams):
    """Return ``f(s)`` on arc length ``s`` and the modulus."""
    T, lam, m = params.perimeter, params.lam, params.mass
    if m <= 0:
        raise OracleError("mass must be positive")
    k = ring_modulus(params)
    if k == 0.0:
        c = math.sqrt(m / T)
        return (lambda s: np.full_like(np.asarray(s, dtype=float), c)), 0.0
    B = 2 * ellip_K(k) / T
    A = math.sqrt(2.0 / lam) * B
    return (lambda s: A * dn(B * (np.asarray(s) - params.center), k)), k


def ring_ground_state(params: RingParams, g) -> WaveFunction:
    """Sample the ring ground state on a ring made of half-loops ``A->B`` and ``B->A``."""
    f, _ = ring_profile(params)
    half = params.perimeter / 2
    try:
        return from_edge_functions(g, {("A", "B", "0"): f, ("B", "A", "0"): lambda x: f(half + x)})
    except KeyError as exc:
        raise GraphError(f"graph is not a two-edge ring: {exc}") from None


def ring_modulus_for_period(perimeter: float = 2 * math.pi) -> float:
    """Modulus with ``2 K(k) = perimeter``."""
    return bisect(lambda k: 2 * ellip_K(k) - perimeter, 1e-16, 1 - 1e-15)


# star with a delta vertex ---------------------------------------------------------
@dataclass(frozen=True)
class StarDeltaParams:
    """Star with ``N`` half-lines and a delta vertex of strength ``alpha``.

    ``alpha`` follows the half-line convention: derivatives are taken along each
    edge away from the centre, so ``alpha < 0`` is attractive.  On a graph the
    same vertex is ``Delta(-alpha)`` (see :meth:`vertex_strength`).
    """

    N: int = 6
    alpha: float = -4.0
    omega: float = 1.0

    def vertex_strength(self) -> float:
        return -self.alpha

    @property
    def xbar(self) -> float:
        r = abs(self.alpha) / (self.N * math.sqrt(self.omega))
        if self.alpha >= 0 or r >= 1:
            raise OracleError("need alpha < 0 and N sqrt(omega) > |alpha|")
        return math.atanh(r) / math.sqrt(self.omega)

    @property
    def mass(self) -> float:
        # the profile below integrates to 2 N sqrt(omega) - 2 |alpha|
        self.xbar
        return 2 * self.N * math.sqrt(self.omega) + 2 * self.alpha

    @property
    def energy(self) -> float:
        self.xbar
        return -self.N / 3 * self.omega**1.5 - self.alpha**3 / (3 * self.N**2)

    def profile(self, x):
        w = math.sqrt(self.omega)
        return math.sqrt(2 * self.omega) * _sech(w * (np.asarray(x) + self.xbar))


def star_delta_ground_state(params: StarDeltaParams, g, center: str = "O") -> WaveFunction:
    """Sample the profile on every edge of a star, measured from ``center``."""
    def f(edge, x):
        if edge.source == center:
            return params.profile(x)
        if edge.target == center:
            return params.profile(edge.length - x)
        raise GraphError(f"edge {edge.key} does not touch the centre {center!r}")

    if g.degree(center) != params.N:
        raise GraphError(f"centre has degree {g.degree(center)}, expected {params.N}")
    return from_edge_functions(g, f)


# tadpole ---------------------------------------------------------------------
@dataclass(frozen=True)
class TadpoleParams:
    """Loop of perimeter ``2 L`` with a half-line attached, cubic focusing, frequency ``omega``."""

    L: float = 1.0
    omega: float = 1.0


def _tadpole_condition(k: float, p: TadpoleParams) -> float:
    arg = p.L * math.sqrt(p.omega) / math.sqrt(2 - k * k)
    c2 = float(cn(arg, k)) ** 2
    return 3 * k**4 / (1 - k * k) * c2 * (1 - c2) - 1


def tadpole_constants(p: TadpoleParams) -> tuple[float, float]:
    """``(k, b)`` for the tadpole state; ``b < 0`` puts the tail's sech peak behind the junction.

    ``k`` is the root of the junction condition bracketed between the first
    sign change on a scan of ``(0, 1)`` and ``b`` solves
    ``sech^2(sqrt(omega) b) = psi_ring(L)^2 / (2 omega)``.
    """
    ks = np.linspace(1e-3, 1 - 1e-9, 4000)
    vals = np.array([_tadpole_condition(k, p) for k in ks])
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if idx.size == 0:
        raise OracleError("junction condition has no root in (0, 1)")
    i = int(idx[0])
    k = bisect(lambda k: _tadpole_condition(k, p), float(ks[i]), float(ks[i + 1]), tol=1e-16)
    ring_L = _ring_part(p, k)(p.L)
    s2 = ring_L**2 / (2 * p.omega)
    if not 0 < s2 <= 1:
        raise OracleError("tail matching has no solution")
    b = -math.acosh(1 / math.sqrt(s2)) / math.sqrt(p.omega)
    return k, b


def _ring_part(p: TadpoleParams, k: float):
    amp = math.sqrt(2 * p.omega / (2 - k * k))
    rate = math.sqrt(p.omega / (2 - k * k))
    return lambda y: amp * dn(rate * np.asarray(y, dtype=float), k)


def tadpole_profiles(p: TadpoleParams):
    """Return ``(ring(y), tail(x), k, b)``; ``y`` is measured from the antipode, the junction is at ``|y| = L``."""
    k, b = tadpole_constants(p)
    ring = _ring_part(p, k)
    w = math.sqrt(p.omega)
    tail = lambda x: math.sqrt(2 * p.omega) * _sech(w * (np.asarray(x, dtype=float) - b))  # noqa: E731
    return ring, tail, k, b


def tadpole_mass(p: TadpoleParams, tail_length: float = math.inf) -> float:
    """Mass of the tadpole state from the closed-form integrals of dn^2 and sech^2."""
    from .special import ellip_E_incomplete, ellip_F_inverse

    ring, _, k, b = tadpole_profiles(p)
    rate = math.sqrt(p.omega / (2 - k * k))
    amp2 = 2 * p.omega / (2 - k * k)
    # int_0^u dn^2 = E(am(u), k)
    u = rate * p.L
    ring_mass = 2 * amp2 / rate * ellip_E_incomplete(float(ellip_F_inverse(u, k)), k)
    w = math.sqrt(p.omega)
    end = math.tanh(w * (tail_length - b)) if math.isfinite(tail_length) else 1.0
    tail_mass = 2 * w * (end - math.tanh(-w * b))
    return ring_mass + tail_mass


def tadpole_ground_state(p: TadpoleParams, g) -> WaveFunction:
    """Sample on the graph of :func:`qgraph.families.tadpole` (junction ``J``, antipode ``P``, end ``E``)."""
    ring, tail, _, _ = tadpole_profiles(p)
    L = p.L
    try:
        return from_edge_functions(
            g,
            {
                ("J", "P", "0"): lambda x: ring(L - x),
                ("P", "J", "0"): lambda x: ring(x),
                ("J", "E", "0"): tail,
            },
        )
    except KeyError as exc:
        raise GraphError(f"graph is not a tadpole: {exc}") from None


# dumbbell ---------------------------------------------------------------------
@dataclass(frozen=True)
class DumbbellParams:
    """Central segment of length ``2 L`` between two loops; ``lam`` as in the energy."""

    mass: float
    L: float = 3.0
    lam: float = 2.0
    loop_perimeter: float = 2 * math.pi

    def __post_init__(self):
        if not (self.L > 0 and self.loop_perimeter > 0):
            raise OracleError("dumbbell lengths must be positive")
        if self.mass < 0:
            raise OracleError("mass must be non-negative")

    @property
    def total_length(self) -> float:
        return 2 * self.L + 2 * self.loop_perimeter


# bifurcation masses of the constant state, known only for L = 3 and loops of perimeter 2 pi
DUMBBELL_BIFURCATIONS = {(3.0, 2 * math.pi): (0.18646428284896863, 1.2334076715778846)}


def dumbbell_reference(p: DumbbellParams) -> dict:
    """Constant state of the dumbbell and, when tabulated, its bifurcation masses.

    Returns ``constant_value``, ``constant_energy`` (``-lam m^2 / (4 |G|)``),
    ``m_star`` and ``m_2star``; the last two are ``None`` outside the tabulated
    geometry.
    """
    c = math.sqrt(p.mass / p.total_length)
    # E = -lam/4 int c^4 = -lam m^2 / (4 |G|)
    energy = -p.lam * p.mass**2 / (4 * p.total_length)
    m1, m2 = None, None
    for (L, per), vals in DUMBBELL_BIFURCATIONS.items():
        if math.isclose(p.L, L, rel_tol=1e-12) and math.isclose(p.loop_perimeter, per, rel_tol=1e-12):
            m1, m2 = vals
    return {"constant_value": c, "constant_energy": energy, "m_star": m1, "m_2star": m2}


# soliton -----------------------------------------------------------------------
def soliton(x, m: float, c: float, x0: float):
    """Moving bright soliton of mass ``m`` and speed ``2c`` for cubic focusing NLS, at t = 0."""
    x = np.asarray(x, dtype=float)
    return m / (2 * math.sqrt(2)) * _sech(m * (x - x0) / 4) * np.exp(1j * c * x)


def soliton_exact(x, t, m: float, c: float, x0: float):
    """Exact line solution of ``i u_t = -u_xx - |u|^2 u`` from :func:`soliton`."""
    x = np.asarray(x, dtype=float)
    omega = m * m / 16
    return m / (2 * math.sqrt(2)) * _sech(m * (x - x0 - 2 * c * t) / 4) * np.exp(1j * (c * x + (omega - c * c) * t))
