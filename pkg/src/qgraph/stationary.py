"""Ground states of ``E(u) = 1/2 <Hu, u> - lam/(p+1) int |u|^(p+1)`` at fixed mass.

Two minimisers are provided: a normalised gradient flow (semi-implicit in the
linear part, explicit in the nonlinear potential, followed by a projection
onto the mass sphere) and a preconditioned nonlinear conjugate gradient on the
sphere with an angular line search.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, fminbound

from .linalg import Factorization, solve_factored
from .wavefunction import WaveFunction, dot, mass, norm

log = logging.getLogger(__name__)

LINE_SEARCH_SAMPLES = 64
LINE_SEARCH_REFINE = 30


class SolverError(RuntimeError):
    pass


@dataclass
class EnergyModel:
    """Energy functional with nonlinearity ``lam |u|^(p-1) u``.

    ``kinetic="dirichlet"`` evaluates ``<Hu, u>`` through the symmetric
    difference form of the operator; ``kinetic="operator"`` uses
    ``Re dot(Hu, u)`` literally.  The two agree on smooth functions, but the
    literal form is not bounded below on the discrete space (vertex-localised
    directions make it arbitrarily negative under refinement), so only the
    symmetric form is safe inside a line search.
    """

    lam: float = 1.0
    p: float = 3.0
    kinetic: str = "dirichlet"

    def __post_init__(self):
        if self.kinetic not in ("dirichlet", "operator"):
            raise ValueError(f"unknown kinetic form {self.kinetic!r}")
        if self.p < 1:
            raise ValueError("p must be at least 1")

    def kinetic_energy(self, u: WaveFunction) -> float:
        op = u.graph.operator
        v = u.values
        if self.kinetic == "operator":
            return 0.5 * float(np.real(op.weights @ (np.conj(op.H @ v) * v)))
        return 0.5 * float(np.real(np.conj(v) @ (op.dirichlet_form @ v)))

    def potential_energy(self, u: WaveFunction) -> float:
        w = u.graph.operator.weights
        return self.lam / (self.p + 1) * float(w @ np.abs(u.values) ** (self.p + 1))

    def energy(self, u: WaveFunction) -> float:
        return self.kinetic_energy(u) - self.potential_energy(u)

    def gradient(self, u: WaveFunction) -> WaveFunction:
        """``Hu - lam |u|^(p-1) u``."""
        v = u.values
        return WaveFunction(u.graph, u.graph.operator.H @ v - self.lam * np.abs(v) ** (self.p - 1) * v)

    def mass(self, u: WaveFunction) -> float:
        return mass(u)


def energy(u: WaveFunction, lam: float = 1.0, p: float = 3.0) -> float:
    return EnergyModel(lam, p).energy(u)


@dataclass
class LineSearch:
    xtol: float = 1e-14
    maxfun: int = 1000
    interval: tuple = (-math.pi, math.pi)


@dataclass
class GroundStateConfig:
    """Solver settings; ``rho`` is the prescribed L2 norm (mass ``rho**2``).

    ``iter_max=None`` means 1000 for the gradient flow and 500 for the
    conjugate gradient.
    """

    rho: float = 1.0
    dt: float = 0.1
    epsilon: float = 1e-8
    iter_max: int | None = None
    precond_shift: float = 0.5
    line_search: LineSearch = field(default_factory=LineSearch)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.iter_max is not None and self.iter_max < 1:
            raise ValueError("iter_max must be at least 1")
        lo, hi = self.line_search.interval
        if not (lo < 0 < hi):
            raise ValueError("line-search interval must contain 0")


@dataclass
class SolverReport:
    iterations: int = 0
    stop_reason: str = ""
    energies: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    @property
    def converged(self) -> bool:
        return self.stop_reason == "Stagnation"

    def record(self, model: EnergyModel, u: WaveFunction, residual: float):
        e = model.energy(u)
        if not math.isfinite(e):
            raise SolverError(f"non-finite energy after {len(self.energies)} iterations")
        self.energies.append(e)
        self.masses.append(model.mass(u))
        self.residuals.append(residual)


def project_tangent(v: WaveFunction, u: WaveFunction) -> WaveFunction:
    """``P_T v = v - <v, u>/||u||^2 u``."""
    return v - (np.real(dot(u, v)) / mass(u)) * u


def project_sphere(v: WaveFunction, rho: float) -> WaveFunction:
    """``P_S v = rho v / ||v||``."""
    nv = norm(v)
    if nv == 0 or not math.isfinite(nv):
        raise SolverError("cannot normalise a zero or non-finite function")
    return v * (rho / nv)


def _start(u0: WaveFunction, cfg: GroundStateConfig) -> WaveFunction:
    if not np.all(np.isfinite(u0.values)):
        raise SolverError("initial datum is not finite")
    if norm(u0) == 0:
        raise SolverError("initial datum has zero norm")
    return project_sphere(u0, cfg.rho)


def cngf(model: EnergyModel, u0: WaveFunction, cfg: GroundStateConfig, callback=None):
    """Normalised gradient flow.

    Each step solves ``(I + dt H - dt lam diag|u|^(p-1)) u* = u`` and sets
    ``u <- rho |u*| / ||u*||``, until the relative change is below
    ``cfg.epsilon``.
    """
    g = u0.graph
    op = g.operator
    iter_max = cfg.iter_max or 1000
    t0 = time.perf_counter()
    u = _start(u0, cfg)
    rep = SolverReport()
    rep.record(model, u, float("nan"))
    lin = (op.identity + cfg.dt * op.H).tocsc()
    for it in range(1, iter_max + 1):
        pot = cfg.dt * model.lam * np.abs(u.values) ** (model.p - 1)
        ustar = solve_factored(Factorization(lin - sp.diags(pot, 0, format="csc")), u)
        if not np.all(np.isfinite(ustar.values)):
            raise SolverError(f"gradient flow produced non-finite values at iteration {it}")
        new = project_sphere(abs(ustar), cfg.rho)
        res = norm(new - u) / norm(u)
        u = new
        rep.iterations = it
        rep.record(model, u, res)
        if callback is not None:
            callback(it, u)
        if res < cfg.epsilon:
            rep.stop_reason = "Stagnation"
            break
    else:
        rep.stop_reason = "MaxIter"
    rep.wall_time = time.perf_counter() - t0
    log.info("cngf: %s after %d iterations, E=%.12g", rep.stop_reason, rep.iterations, rep.energies[-1])
    return u, rep


def angular_energy(model: EnergyModel, u: WaveFunction, l: WaveFunction):
    """``theta -> E(cos(theta) u + sin(theta) l)`` and its derivative, quadratic part precomputed."""
    op = u.graph.operator
    uv, lv = u.values, l.values
    if model.kinetic == "operator":
        Hu, Hl = op.H @ uv, op.H @ lv
        w = op.weights
        a_uu = np.real(w @ (np.conj(Hu) * uv))
        a_ll = np.real(w @ (np.conj(Hl) * lv))
        a_ul = np.real(w @ (np.conj(Hu) * lv)) + np.real(w @ (np.conj(Hl) * uv))
    else:
        K = op.dirichlet_form
        Ku, Kl = K @ uv, K @ lv
        a_uu = np.real(np.conj(uv) @ Ku)
        a_ll = np.real(np.conj(lv) @ Kl)
        a_ul = 2.0 * np.real(np.conj(lv) @ Ku)
    w = op.weights
    coef = model.lam / (model.p + 1)

    def f(theta):
        c, s = math.cos(theta), math.sin(theta)
        return 0.5 * (c * c * a_uu + c * s * a_ul + s * s * a_ll) - coef * (w @ np.abs(c * uv + s * lv) ** (model.p + 1))

    def df(theta):
        c, s = math.cos(theta), math.sin(theta)
        ut, dt = c * uv + s * lv, -s * uv + c * lv
        quad = 0.5 * (2 * c * s * (a_ll - a_uu) + (c * c - s * s) * a_ul)
        return quad - model.lam * float(w @ np.real(np.abs(ut) ** (model.p - 1) * np.conj(ut) * dt))

    f.derivative = df
    return f


def minimise_angle(f, ls: LineSearch) -> float:
    """Minimise ``f`` over ``ls.interval``.

    ``f`` has several local minima on the interval (it is pi-periodic for real
    data), so a scan picks the bracket and bounded Brent refines it.  The
    scan is a uniform grid plus angles ``+-h/2, +-h/4, ...`` around 0, where
    ``h`` is the grid spacing.
    Near convergence the minimum is too flat for comparisons of ``f`` to
    resolve ``theta`` below about 1e-8, so when ``f`` carries an analytic
    ``derivative`` the Brent result is polished by a root of it.  The result
    never has a larger value than ``f(0)``.
    """
    lo, hi = ls.interval
    coarse = np.linspace(lo, hi, LINE_SEARCH_SAMPLES + 1)
    # near convergence the minimum is close to 0 and narrower than the coarse spacing
    fine = (hi - lo) / LINE_SEARCH_SAMPLES * 0.5 ** np.arange(1, LINE_SEARCH_REFINE + 1)
    grid = np.unique(np.concatenate([coarse, [0.0], fine[fine < hi], -fine[-fine > lo]]))
    vals = np.array([f(t) for t in grid])
    i = int(np.argmin(vals))
    a, b = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, grid.size - 1)])
    theta = fminbound(f, a, b, xtol=ls.xtol, maxfun=ls.maxfun)
    if f(theta) > vals[i]:
        theta = grid[i]
    df = getattr(f, "derivative", None)
    if df is not None:
        # bracket the stationary point around the Brent estimate
        step = max(abs(theta) * 1e-3, 1e-12)
        for _ in range(40):
            lo_t, hi_t = max(a, theta - step), min(b, theta + step)
            if df(lo_t) <= 0 <= df(hi_t):
                root = brentq(df, lo_t, hi_t, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
                if f(root) <= f(theta) + 1e-15 * max(1.0, abs(f(theta))):
                    theta = root
                break
            if lo_t == a and hi_t == b:
                break
            step *= 4
    # E(-u) = E(u): prefer the equivalent angle closest to 0
    alt = theta - math.copysign(math.pi, theta)
    if abs(alt) < abs(theta) and lo <= alt <= hi and f(alt) <= f(theta) + 1e-14 * max(1.0, abs(f(theta))):
        theta = alt
    if f(theta) > f(0.0):
        theta = 0.0
    return float(theta)


def ncg(model: EnergyModel, u0: WaveFunction, cfg: GroundStateConfig, callback=None):
    """Preconditioned nonlinear conjugate gradient on the sphere ``||u|| = rho``.

    Tangent residual ``r = P_T(Hu - lam |u|^(p-1) u)``, preconditioned
    direction ``(shift I + H) v = r``, coefficient
    ``beta = max(0, <r - r_prev, v> / <r_prev, v_prev>)``, search direction
    ``P_T(-v + beta p_prev)`` mapped to the sphere and followed along a great
    circle.
    """
    g = u0.graph
    op = g.operator
    iter_max = cfg.iter_max or 500
    t0 = time.perf_counter()
    P = Factorization((cfg.precond_shift * op.identity + op.H).tocsc())
    u = _start(u0, cfg)
    rep = SolverReport()
    rep.record(model, u, float("nan"))

    r_prev = project_tangent(model.gradient(u), u)
    v_prev = solve_factored(P, r_prev)
    p_prev = project_tangent(v_prev, u)
    for it in range(1, iter_max + 1):
        r = project_tangent(model.gradient(u), u)
        v = solve_factored(P, r)
        denom = np.real(dot(r_prev, v_prev))
        beta = max(0.0, np.real(dot(r - r_prev, v)) / denom) if denom > 1e-300 else 0.0
        if not math.isfinite(beta):
            beta = 0.0
        pdir = project_tangent(-v + beta * p_prev, u)
        if norm(pdir) == 0:
            rep.stop_reason = "Stagnation"
            break
        l = project_sphere(pdir, cfg.rho)
        theta = minimise_angle(angular_energy(model, u, l), cfg.line_search)
        new = math.cos(theta) * u + math.sin(theta) * l
        if not np.all(np.isfinite(new.values)):
            raise SolverError(f"conjugate gradient produced non-finite values at iteration {it}")
        res = norm(new - u) / norm(u)
        u = new
        r_prev, v_prev, p_prev = r, v, pdir
        rep.iterations = it
        rep.record(model, u, res)
        if callback is not None:
            callback(it, u)
        if res < cfg.epsilon:
            rep.stop_reason = "Stagnation"
            break
    else:
        rep.stop_reason = "MaxIter"
    rep.wall_time = time.perf_counter() - t0
    log.info("ncg: %s after %d iterations, E=%.12g", rep.stop_reason, rep.iterations, rep.energies[-1])
    return u, rep


def ground_state(model: EnergyModel, u0: WaveFunction, cfg: GroundStateConfig, method: str = "cngf", callback=None):
    if method == "cngf":
        return cngf(model, u0, cfg, callback)
    if method == "ncg":
        return ncg(model, u0, cfg, callback)
    raise ValueError(f"unknown method {method!r}")
