"""Mass sweeps on the periodic necklace and the honeycomb patch.

For each rho, the ground state is computed from a loop-centred (necklace) or
edge- and vertex-centred (honeycomb) initial datum, and the energies plus a
localization measure are printed as CSV.  The full sweeps take a while; use
``--rho`` to run a few values.
"""
import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from qgraph import families
from qgraph.stationary import EnergyModel, GroundStateConfig, SolverError, ground_state
from qgraph.wavefunction import from_edge_functions


@dataclass
class SweepConfig:
    cells: int = 9
    rings: int = 3
    necklace_nodes: int = 4000
    honeycomb_nodes: int = 9000
    method: str = "ncg"


def edge_fraction(g, u, edges):
    w = g.operator.weights * np.abs(u.values) ** 2
    return sum(w[g.mesh.edge_slice(i)].sum() for i in edges) / w.sum()


def necklace_runs(cfg, rhos, writer):
    g = families.necklace(cfg.cells, total_nodes=cfg.necklace_nodes)
    mid = cfg.cells // 2 + 1
    h = g.edge((f"V{mid}_a", f"V{mid}_b", "0")).length
    bump = lambda x: np.exp(-4 * (x - h / 2) ** 2)  # noqa: E731
    u0 = from_edge_functions(g, {(f"V{mid}_a", f"V{mid}_b", "0"): bump, (f"V{mid}_b", f"V{mid}_a", "0"): bump})
    cell = [g.edge_index(k) for k in families.necklace_cell(g, mid)]
    for rho in rhos:
        u, rep = ground_state(EnergyModel(), u0, GroundStateConfig(rho=rho, dt=0.01, iter_max=5000), cfg.method)
        writer.writerow(["necklace", "loop", rho, rep.iterations, rep.stop_reason, rep.energies[-1],
                         edge_fraction(g, u, cell)])


def honeycomb_runs(cfg, rhos, writer):
    g = families.honeycomb(cfg.rings, total_nodes=cfg.honeycomb_nodes)
    pos = {v: np.array(p) for v, p in g.positions.items()}
    mid = lambda e: np.hypot(*((pos[e.source] + pos[e.target]) / 2))  # noqa: E731
    centre = min(range(len(g.edges)), key=lambda i: (round(mid(g.edges[i]), 9), i))
    vc = g.edges[centre].target
    starts = {
        "edge": from_edge_functions(g, {g.edges[centre].key: lambda x: np.exp(-8 * (x - 0.5) ** 2)}),
        "vertex": from_edge_functions(
            g, lambda e, x: np.exp(-8 * x**2) if e.source == vc else (
                np.exp(-8 * (e.length - x) ** 2) if e.target == vc else 0 * x)),
    }
    for rho in rhos:
        for name, u0 in starts.items():
            u, rep = ground_state(EnergyModel(p=2.0), u0, GroundStateConfig(rho=rho, iter_max=5000), cfg.method)
            writer.writerow(["honeycomb", name, rho, rep.iterations, rep.stop_reason, rep.energies[-1],
                             edge_fraction(g, u, [centre])])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, nargs="*", default=list(np.arange(1.0, 20.5, 1.0)))
    ap.add_argument("--only", choices=["necklace", "honeycomb"])
    ap.add_argument("--method", choices=["cngf", "ncg"], default="ncg")
    args = ap.parse_args()
    cfg = SweepConfig(method=args.method)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["graph", "start", "rho", "iterations", "stop_reason", "energy", "localized_fraction"])
    try:
        if args.only != "honeycomb":
            necklace_runs(cfg, args.rho, writer)
        if args.only != "necklace":
            honeycomb_runs(cfg, args.rho, writer)
    except SolverError as exc:
        sys.exit(f"solver failed: {exc}")


if __name__ == "__main__":
    main()
