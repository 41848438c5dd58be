"""Nine ground-state runs on the dumbbell: three masses times three initial data.

Prints the final energy of each run and writes the states as CSV.
"""
import argparse
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qgraph import families
from qgraph.io import write_wavefunction
from qgraph.stationary import EnergyModel, GroundStateConfig, cngf
from qgraph.wavefunction import from_edge_functions


@dataclass
class DumbbellRun:
    L: float = 3.0
    perimeter: float = 2 * math.pi
    total_nodes: int = 1000
    masses: list = field(default_factory=lambda: [0.10, 0.75, 1.50])
    dt: float = 1e-2
    epsilon: float = 1e-8
    iter_max: int = 50000


def initial_data(g):
    return {
        "constant": from_edge_functions(g, lambda e, x: np.ones_like(x)),
        "loop": from_edge_functions(g, {("C", "A", "0"): lambda x: np.exp(-10 * x**2)}),
        "edge": from_edge_functions(g, {("A", "B", "0"): lambda x: np.exp(-10 * (x - 2) ** 2)}),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/dumbbell"))
    ap.add_argument("--nodes", type=int, default=DumbbellRun.total_nodes)
    args = ap.parse_args()
    run = DumbbellRun(total_nodes=args.nodes)
    g = families.dumbbell(run.L, run.perimeter, total_nodes=run.total_nodes)
    args.out.mkdir(parents=True, exist_ok=True)
    for m in run.masses:
        for name, u0 in initial_data(g).items():
            cfg = GroundStateConfig(rho=math.sqrt(m), dt=run.dt, epsilon=run.epsilon, iter_max=run.iter_max)
            u, rep = cngf(EnergyModel(lam=2.0), u0, cfg)
            print(f"m={m:.2f}  start={name:8s}  iterations={rep.iterations:6d}  {rep.stop_reason:10s}  "
                  f"E={rep.energies[-1]:.10e}")
            write_wavefunction(u, args.out / f"m{m:.2f}_{name}.csv")


if __name__ == "__main__":
    main()
