"""Soliton propagation on a tadpole and on a rooted binary tree, plus a
self-convergence study on a long segment.

Mass and energy drift are printed; snapshots are written with ``--out``.
"""
import argparse
import math
from dataclasses import dataclass
from pathlib import Path

from qgraph import families
from qgraph.dynamics import EvolutionConfig, relaxation_evolve, self_convergence_order, strang_evolve
from qgraph.graph import Dirichlet, build_graph
from qgraph.io import write_snapshots
from qgraph.oracles import soliton
from qgraph.wavefunction import from_edge_functions


@dataclass
class DynamicsRuns:
    tadpole_nodes: int = 8000
    tree_nodes: int = 30000
    dt: float = 1e-3
    snapshot_every: int = 50


def tadpole(run, out):
    g = build_graph([("A", "B", 6.0), ("B", "C", math.pi), ("C", "B", math.pi)], {"A": Dirichlet()},
                    total_nodes=run.tadpole_nodes)
    psi = from_edge_functions(g, {("A", "B", "0"): lambda x: soliton(x, 20, 3, 3)})
    cfg = EvolutionConfig(run.dt, 1.0, snapshot_every=run.snapshot_every)
    _, traj = relaxation_evolve(g.operator, psi, cfg)
    print(f"tadpole relaxation: mass drift {traj.mass_drift():.2e}, energy drift {traj.energy_drift():.2e}")
    if out:
        write_snapshots(traj, cfg, out / "tadpole")


def tree(run, out):
    g = families.binary_tree(2, [10.61, 9.96], rooted=True, root_len=7.2, total_nodes=run.tree_nodes)
    psi = from_edge_functions(g, {("A", "R", "0"): lambda x: soliton(x, 15, 3, 3.6)})
    cfg = EvolutionConfig(run.dt, 2.0, snapshot_every=run.snapshot_every)
    _, traj = strang_evolve(g.operator, psi, cfg)
    print(f"tree Strang: mass drift {traj.mass_drift():.2e}, energy drift {traj.energy_drift():.2e}")
    if out:
        write_snapshots(traj, cfg, out / "tree")


def order():
    g = families.segment(60.0, total_nodes=3000)
    psi = from_edge_functions(g, lambda e, x: soliton(x, 8, 2, 30))
    for scheme in (relaxation_evolve, strang_evolve):
        finals = [scheme(g.operator, psi, EvolutionConfig(dt, 1.0, snapshot_every=1000))[0]
                  for dt in (4e-3, 2e-3, 1e-3)]
        print(f"{scheme.__name__}: self-convergence order {self_convergence_order(*finals):.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("which", nargs="*", choices=["tadpole", "tree", "order"])
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    run = DynamicsRuns()
    for name in args.which or ["tadpole", "tree", "order"]:
        {"tadpole": lambda: tadpole(run, args.out), "tree": lambda: tree(run, args.out), "order": order}[name]()


if __name__ == "__main__":
    main()
