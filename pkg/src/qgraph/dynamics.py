"""Time integration of ``i psi_t = H psi - lam |psi|^(p-1) psi`` on a graph.

Both schemes are second order in time.  The relaxation scheme lags the
nonlinear potential by half a step so that each step is a single linear
solve; the splitting scheme alternates exact nonlinear phase kicks with a
Crank-Nicolson step for the linear part, whose matrix is factorized once.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import Factorization, SingularMatrixError
from .stationary import EnergyModel
from .wavefunction import WaveFunction, mass

log = logging.getLogger(__name__)


class EvolutionError(RuntimeError):
    pass


@dataclass
class EvolutionConfig:
    """Time-stepping settings.

    The run takes ``ceil(t_end / dt)`` steps of size ``dt``, so the final time
    is ``n_steps * dt`` (equal to ``t_end`` when ``dt`` divides it).
    """

    dt: float = 1e-3
    t_end: float = 1.0
    p: float = 3.0
    lam: float = 1.0
    snapshot_every: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dt < self.t_end:
            raise ValueError("dt must be smaller than t_end")
        if not self.p > 1:
            raise ValueError("p must be larger than 1")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be at least 1")

    @property
    def n_steps(self) -> int:
        # guard against 1/1e-3 = 1000.0000000000001
        return math.ceil(self.t_end / self.dt - 1e-9)


@dataclass
class Frame:
    step: int
    t: float
    psi: WaveFunction
    mass: float
    energy: float

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.psi.values)


@dataclass
class Trajectory:
    """Recorded frames plus timing; frame 0 is the initial datum."""

    frames: list = field(default_factory=list)
    steps: int = 0
    wall_time: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    @property
    def masses(self) -> np.ndarray:
        return np.array([f.mass for f in self.frames])

    @property
    def energies(self) -> np.ndarray:
        return np.array([f.energy for f in self.frames])

    def mass_drift(self) -> float:
        """``max_n |M(psi_n) - M(psi_0)| / M(psi_0)`` over the recorded frames."""
        m = self.masses
        if m[0] == 0:
            return float(np.abs(m).max())
        return float(np.abs(m - m[0]).max() / m[0])

    def energy_drift(self) -> float:
        e = self.energies
        return float(np.abs(e - e[0]).max())


def _check_initial(psi0: WaveFunction):
    if not np.all(np.isfinite(psi0.values)):
        raise EvolutionError("initial datum is not finite")
    return WaveFunction(psi0.graph, psi0.values.astype(complex))


def _recorder(cfg: EvolutionConfig, dt: float):
    model = EnergyModel(cfg.lam, cfg.p)
    traj = Trajectory()

    def record(step, psi, force=False):
        if force or step % cfg.snapshot_every == 0:
            traj.frames.append(Frame(step, step * dt, psi.copy(), mass(psi), model.energy(psi)))

    return traj, record


def _finite(v: np.ndarray, step: int):
    if not np.all(np.isfinite(v)):
        raise EvolutionError(f"non-finite values at step {step}")


def relaxation_evolve(op, psi0: WaveFunction, cfg: EvolutionConfig, backward: bool = False, callback=None):
    """Crank-Nicolson relaxation scheme.

    The auxiliary potential ``phi`` lives at half steps:
    ``phi_{-1/2} = -lam |psi_0|^(p-1)``, ``phi_{n+1/2} = -2 lam |psi_n|^(p-1) - phi_{n-1/2}``,
    then ``(I + i dt/2 (H + diag phi_{n+1/2})) psi_{n+1/2} = psi_n`` and
    ``psi_{n+1} = 2 psi_{n+1/2} - psi_n``.

    ``backward=True`` integrates with step ``-dt`` (used to check
    reversibility).  Returns ``(psi, trajectory)``.
    """
    dt = -cfg.dt if backward else cfg.dt
    psi = _check_initial(psi0)
    g = psi.graph
    n = cfg.n_steps
    traj, record = _recorder(cfg, dt)
    t0 = time.perf_counter()
    record(0, psi, force=True)
    v = psi.values
    phi = -cfg.lam * np.abs(v) ** (cfg.p - 1)
    base = (op.identity + (0.5j * dt) * op.H).tocsc()
    for step in range(1, n + 1):
        phi = -2.0 * cfg.lam * np.abs(v) ** (cfg.p - 1) - phi
        M = base + sp.diags((0.5j * dt) * phi, 0, format="csc")
        try:
            half = Factorization(M).solve(v)
        except SingularMatrixError as exc:
            raise EvolutionError(f"relaxation solve failed at step {step}: {exc}") from None
        v = 2.0 * half - v
        _finite(v, step)
        psi = WaveFunction(g, v)
        record(step, psi, force=step == n)
        if callback is not None:
            callback(step, psi)
    traj.steps = n
    traj.wall_time = time.perf_counter() - t0
    log.info("relaxation: %d steps, mass drift %.3e", n, traj.mass_drift())
    return psi, traj


def strang_evolve(op, psi0: WaveFunction, cfg: EvolutionConfig, backward: bool = False, callback=None):
    """Strang splitting: half kick, Crank-Nicolson linear step, half kick.

    The kick is the exact flow of ``i psi_t = -lam |psi|^(p-1) psi``,
    ``psi <- exp(i dt/2 lam |psi|^(p-1)) psi``.  Returns ``(psi, trajectory)``.
    """
    dt = -cfg.dt if backward else cfg.dt
    psi = _check_initial(psi0)
    g = psi.graph
    n = cfg.n_steps
    traj, record = _recorder(cfg, dt)
    t0 = time.perf_counter()
    record(0, psi, force=True)
    try:
        F = Factorization((op.identity + (0.5j * dt) * op.H).tocsc())
    except SingularMatrixError as exc:
        raise EvolutionError(f"linear step matrix is singular: {exc}") from None
    v = psi.values
    c = 0.5j * dt * cfg.lam
    q = cfg.p - 1
    for step in range(1, n + 1):
        v = np.exp(c * np.abs(v) ** q) * v
        v = 2.0 * F.solve(v) - v
        v = np.exp(c * np.abs(v) ** q) * v
        _finite(v, step)
        psi = WaveFunction(g, v)
        record(step, psi, force=step == n)
        if callback is not None:
            callback(step, psi)
    traj.steps = n
    traj.wall_time = time.perf_counter() - t0
    log.info("strang: %d steps, mass drift %.3e", n, traj.mass_drift())
    return psi, traj


def evolve(op, psi0, cfg: EvolutionConfig, scheme: str = "relaxation", **kw):
    if scheme == "relaxation":
        return relaxation_evolve(op, psi0, cfg, **kw)
    if scheme == "strang":
        return strang_evolve(op, psi0, cfg, **kw)
    raise ValueError(f"unknown scheme {scheme!r}")


def self_convergence_order(coarse: WaveFunction, mid: WaveFunction, fine: WaveFunction) -> float:
    """``log2(|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|)`` in the graph L2 norm."""
    from .wavefunction import norm

    return math.log2(norm(coarse - mid) / norm(mid - fine))
