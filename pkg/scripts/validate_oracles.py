"""Compare computed ground states with the closed-form ring, star and tadpole
profiles, with a refinement study for each.
"""
import argparse
import math

import numpy as np

from qgraph import families
from qgraph.graph import Delta
from qgraph.oracles import (
    RingParams,
    StarDeltaParams,
    TadpoleParams,
    ring_ground_state,
    ring_modulus_for_period,
    star_delta_ground_state,
    tadpole_ground_state,
)
from qgraph.special import ellip_E
from qgraph.stationary import EnergyModel, GroundStateConfig, ncg
from qgraph.wavefunction import from_edge_functions


def report(name, n, u, exact, rep):
    err = np.abs(u.values - exact.values).max()
    print(f"{name:8s} nodes/edge={n:6d}  iterations={rep.iterations:5d}  max error={err:.3e}  E={rep.energies[-1]:.10f}")


def ring(ns):
    k = ring_modulus_for_period(2 * math.pi)
    P = RingParams(mass=2 * ellip_E(k), perimeter=2 * math.pi, lam=2.0)
    for n in ns:
        g = families.ring(2 * math.pi, nodes_per_edge=[n, n])
        u0 = from_edge_functions(g, {("A", "B", "0"): lambda x: np.exp(-x**2),
                                     ("B", "A", "0"): lambda x: np.exp(-(math.pi - x) ** 2)})
        u, rep = ncg(EnergyModel(lam=2.0), u0, GroundStateConfig(rho=math.sqrt(P.mass), iter_max=5000))
        report("ring", n, u, ring_ground_state(P, g), rep)


def star(ns):
    P = StarDeltaParams()
    for n in ns:
        g = families.star(P.N, 40.0, {"O": Delta(P.vertex_strength())}, nodes_per_edge=[n] * P.N)
        u0 = from_edge_functions(g, lambda e, x: np.exp(-x**2))
        u, rep = ncg(EnergyModel(), u0, GroundStateConfig(rho=math.sqrt(P.mass)))
        report("star", n, u, star_delta_ground_state(P, g), rep)
    print(f"star exact energy {P.energy:.10f}")


def tadpole(ns):
    P = TadpoleParams()
    for n in ns:
        g = families.tadpole(1.0, 30.0, nodes_per_edge=[n, n, 30 * n])
        u0 = from_edge_functions(g, {("J", "P", "0"): lambda x: np.exp(-(x - 1) ** 2),
                                     ("P", "J", "0"): lambda x: np.exp(-x**2),
                                     ("J", "E", "0"): lambda x: np.exp(-(x + 1) ** 2)})
        u, rep = ncg(EnergyModel(), u0, GroundStateConfig(rho=math.sqrt(3.1727382562292), iter_max=5000))
        report("tadpole", n, u, tadpole_ground_state(P, g), rep)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("which", nargs="*", choices=["ring", "star", "tadpole"])
    ap.add_argument("--nodes", type=int, nargs="+", default=[250, 500, 1000])
    args = ap.parse_args()
    for name in args.which or ["ring", "star", "tadpole"]:
        {"ring": ring, "star": star, "tadpole": tadpole}[name](args.nodes)


if __name__ == "__main__":
    main()
