"""Command-line front end.

``qgraph eigs|groundstate|evolve|validate --config PATH [--out DIR] [--trace PATH]
[--dump-operator PATH] [--svg]``

Exit status: 0 on success, 1 when a solver fails or a validation misses its
tolerance, 2 for configuration errors.  ``QGRAPH_LOG`` sets the log level.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import families, oracles
from .dynamics import EvolutionConfig, EvolutionError, evolve
from .expr import ExprError, compile_expr, parse_number
from .graph import GraphError, MetricGraph
from .io import (
    ConfigError,
    canonical_json,
    conditions_from_json,
    dump_operator,
    graph_from_json,
    load_json,
    write_snapshots,
    write_trace,
    write_wavefunction,
)
from .linalg import EigenError, SingularMatrixError, eigs_smallest
from .stationary import EnergyModel, GroundStateConfig, LineSearch, SolverError, ground_state
from .svg import render_svg
from .wavefunction import WaveFunction, from_edge_functions, mass

log = logging.getLogger("qgraph")

COMMANDS = ("eigs", "groundstate", "evolve", "validate")
CONFIG_KEYS = {"command", "graph", "model", "solver", "evolution", "eigs", "initial", "oracle", "tolerances", "output"}
FAMILY_KEYS = {"family", "params", "conditions", "total_nodes", "nodes_per_edge", "dx", "closure_order"}
ORACLES = ("ring", "star_delta", "tadpole", "dumbbell")


@dataclass
class RunConfig:
    command: str
    graph: MetricGraph
    model: EnergyModel = field(default_factory=EnergyModel)
    solver: dict = field(default_factory=dict)
    evolution: dict = field(default_factory=dict)
    eigs: dict = field(default_factory=dict)
    initial: dict | None = None
    oracle: dict | None = None
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"'{where}' must be an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in '{where}': {', '.join(extra)}")


def build_graph_config(d: dict) -> MetricGraph:
    """Inline graph description or ``{"family": name, "params": {...}, ...}``."""
    if not isinstance(d, dict):
        raise ConfigError("'graph' must be an object")
    if "family" not in d:
        return graph_from_json(d)
    _check_keys(d, FAMILY_KEYS, "graph")
    params = dict(d.get("params") or {})
    for k, v in list(params.items()):
        if isinstance(v, str):
            params[k] = parse_number(v)
        elif isinstance(v, list):
            params[k] = [parse_number(x) for x in v]
    for k in ("N", "cells", "rings", "depth"):
        if k in params and float(params[k]).is_integer():
            params[k] = int(params[k])
    conds = conditions_from_json(d.get("conditions"))
    mesh = {k: d[k] for k in ("total_nodes", "nodes_per_edge", "dx", "closure_order") if k in d}
    try:
        return families.build_family(d["family"], dict(params, conditions=conds or None), **mesh)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(d: dict, command: str | None = None) -> RunConfig:
    _check_keys(d, CONFIG_KEYS, "config")
    cmd = d.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"config is for {cmd!r} but the command line asks for {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if "graph" not in d:
        raise ConfigError("config needs a 'graph'")
    g = build_graph_config(d["graph"])
    model = d.get("model", {})
    _check_keys(model, {"lam", "p", "kinetic"}, "model")
    try:
        em = EnergyModel(**model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from None
    for k in ("solver", "evolution", "eigs", "tolerances", "output"):
        if k in d and not isinstance(d[k], dict):
            raise ConfigError(f"'{k}' must be an object")
    _check_keys(d.get("solver", {}), {"method", "rho", "mass", "dt", "epsilon", "iter_max", "precond_shift", "line_search"}, "solver")
    _check_keys(d.get("evolution", {}), {"scheme", "dt", "t_end", "snapshot_every"}, "evolution")
    _check_keys(d.get("eigs", {}), {"k", "sigma"}, "eigs")
    _check_keys(d.get("tolerances", {}), {"max_abs_error", "mass_error"}, "tolerances")
    _check_keys(d.get("output", {}), {"dir", "formats"}, "output")
    oracle = d.get("oracle")
    if oracle is not None:
        _check_keys(oracle, {"name", "params"}, "oracle")
        if oracle.get("name") not in ORACLES:
            raise ConfigError(f"unknown oracle {oracle.get('name')!r}; choose from {', '.join(ORACLES)}")
    if cmd == "validate" and oracle is None:
        raise ConfigError("validate needs an 'oracle'")
    return RunConfig(cmd, g, em, d.get("solver", {}), d.get("evolution", {}), d.get("eigs", {}), d.get("initial"),
                     oracle, d.get("tolerances", {}), d.get("output", {}))


# initial data -------------------------------------------------------------------------
def _edge_key(s: str):
    parts = s.split("/")
    if len(parts) == 2:
        parts.append("0")
    if len(parts) != 3:
        raise ConfigError(f"edge key must be 'from/to[/id]', got {s!r}")
    return tuple(parts)


def initial_datum(g: MetricGraph, spec, oracle_state: WaveFunction | None = None) -> WaveFunction:
    """``{"expr": e}`` on every edge, ``{"edges": {"A/B/0": e}}`` (others zero) or ``{"oracle": true}``."""
    if spec is None:
        spec = {"expr": "1"}
    _check_keys(spec, {"expr", "edges", "oracle"}, "initial")
    if sum(k in spec for k in ("expr", "edges", "oracle")) != 1:
        raise ConfigError("'initial' needs exactly one of expr, edges, oracle")
    try:
        if "oracle" in spec:
            if oracle_state is None:
                raise ConfigError("initial datum refers to an oracle but none is configured")
            return oracle_state.copy()
        if "expr" in spec:
            f = compile_expr(spec["expr"])
            return from_edge_functions(g, lambda e, x: f(x))
        funcs = {}
        for k, e in spec["edges"].items():
            key = _edge_key(k)
            try:
                g.edge_index(key)
            except KeyError:
                raise ConfigError(f"initial datum on unknown edge {k!r}") from None
            funcs[key] = compile_expr(e)
        return from_edge_functions(g, funcs)
    except ExprError as exc:
        raise ConfigError(f"initial datum: {exc}") from None


def oracle_state(cfg: RunConfig):
    """``(state, mass, info)`` of the configured oracle on the configured graph."""
    name = cfg.oracle["name"]
    params = {k: parse_number(v) for k, v in (cfg.oracle.get("params") or {}).items()}
    g = cfg.graph
    try:
        if name == "ring":
            p = oracles.RingParams(**params)
            return oracles.ring_ground_state(p, g), p.mass, {"modulus": oracles.ring_modulus(p)}
        if name == "star_delta":
            if "N" in params:
                params["N"] = int(params["N"])
            p = oracles.StarDeltaParams(**params)
            return oracles.star_delta_ground_state(p, g), p.mass, {"energy": p.energy}
        if name == "tadpole":
            p = oracles.TadpoleParams(**params)
            k, b = oracles.tadpole_constants(p)
            return oracles.tadpole_ground_state(p, g), oracles.tadpole_mass(p), {"k": k, "b": b}
        p = oracles.DumbbellParams(**params)
        ref = oracles.dumbbell_reference(p)
        info = {k: v for k, v in ref.items() if v is not None}
        return WaveFunction(g, np.full(g.size, ref["constant_value"])), p.mass, info
    except TypeError as exc:
        raise ConfigError(f"oracle {name}: {exc}") from None
    except (GraphError, oracles.OracleError) as exc:
        raise ConfigError(f"oracle {name}: {exc}") from None


def _gs_config(s: dict, default_rho: float | None = None) -> GroundStateConfig:
    s = dict(s)
    s.pop("method", None)
    if "mass" in s:
        if "rho" in s:
            raise ConfigError("give either solver.rho or solver.mass")
        s["rho"] = math.sqrt(parse_number(s.pop("mass")))
    if "rho" not in s and default_rho is not None:
        s["rho"] = default_rho
    ls = s.pop("line_search", None)
    try:
        if ls is not None:
            _check_keys(ls, {"xtol", "maxfun", "interval"}, "solver.line_search")
            if "interval" in ls:
                ls = dict(ls, interval=tuple(parse_number(v) for v in ls["interval"]))
            s["line_search"] = LineSearch(**ls)
        return GroundStateConfig(**s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from None


# commands ---------------------------------------------------------------------------
def _outdir(cfg: RunConfig, args) -> Path:
    out = Path(args.out or cfg.output.get("dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _want_svg(cfg, args) -> bool:
    return bool(args.svg) or "svg" in cfg.output.get("formats", [])


def run_eigs(cfg: RunConfig, args) -> int:
    k = int(cfg.eigs.get("k", 6))
    sigma = parse_number(cfg.eigs.get("sigma", 0.0))
    pairs = eigs_smallest(cfg.graph.operator.H, cfg.graph, k=k, sigma=sigma)
    out = _outdir(cfg, args)
    lines = ["index,eigenvalue"] + [f"{i},{val!r}" for i, (val, _) in enumerate(pairs)]
    (out / "eigenvalues.csv").write_text("\n".join(lines) + "\n")
    for i, (val, v) in enumerate(pairs):
        write_wavefunction(v, out / f"eigenvector_{i}.csv")
        if _want_svg(cfg, args):
            render_svg(cfg.graph, v, out / f"eigenvector_{i}.svg")
        print(f"{i}\t{val:.12g}")
    return 0


def run_groundstate(cfg: RunConfig, args) -> int:
    method = cfg.solver.get("method", "cngf")
    u0 = initial_datum(cfg.graph, cfg.initial)
    u, rep = ground_state(cfg.model, u0, _gs_config(cfg.solver), method)
    out = _outdir(cfg, args)
    write_wavefunction(u, out / "groundstate.csv")
    if args.trace:
        write_trace(rep, args.trace)
    if _want_svg(cfg, args):
        render_svg(cfg.graph, u, out / "groundstate.svg")
    summary = {"method": method, "iterations": rep.iterations, "stop_reason": rep.stop_reason,
               "energy": rep.energies[-1], "mass": rep.masses[-1], "final_residual": rep.final_residual}
    (out / "summary.json").write_text(canonical_json(summary))
    print(f"{method}: {rep.stop_reason} after {rep.iterations} iterations, E = {rep.energies[-1]:.12g}")
    return 0


def run_evolve(cfg: RunConfig, args) -> int:
    ev = dict(cfg.evolution)
    scheme = ev.pop("scheme", "relaxation")
    try:
        ecfg = EvolutionConfig(**{k: parse_number(v) if k != "snapshot_every" else int(v) for k, v in ev.items()},
                               p=cfg.model.p, lam=cfg.model.lam)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"evolution: {exc}") from None
    psi0 = initial_datum(cfg.graph, cfg.initial)
    psi, traj = evolve(cfg.graph.operator, psi0, ecfg, scheme)
    out = _outdir(cfg, args)
    write_snapshots(traj, ecfg, out)
    if _want_svg(cfg, args):
        render_svg(cfg.graph, psi, out / "final.svg")
    print(f"{scheme}: {traj.steps} steps, relative mass drift {traj.mass_drift():.3e}")
    return 0


def run_validate(cfg: RunConfig, args) -> int:
    exact, m, info = oracle_state(cfg)
    method = cfg.solver.get("method", "cngf")
    gcfg = _gs_config(cfg.solver, default_rho=math.sqrt(m))
    u0 = initial_datum(cfg.graph, cfg.initial, exact)
    u, rep = ground_state(cfg.model, u0, gcfg, method)
    err = float(np.abs(u.values - exact.values).max())
    mass_err = abs(mass(u) - m) / m
    tol_err = float(cfg.tolerances.get("max_abs_error", 1e-5))
    tol_mass = float(cfg.tolerances.get("mass_error", 1e-8))
    passed = err <= tol_err and mass_err <= tol_mass
    report = {
        "oracle": cfg.oracle["name"],
        "max_abs_error": err,
        "mass_error": mass_err,
        "energy": rep.energies[-1],
        "iterations": rep.iterations,
        "stop_reason": rep.stop_reason,
        "tolerances": {"max_abs_error": tol_err, "mass_error": tol_mass},
        "passed": passed,
        "oracle_info": {k: float(v) for k, v in info.items()},
    }
    out = _outdir(cfg, args)
    (out / "report.json").write_text(canonical_json(report))
    write_wavefunction(u, out / "groundstate.csv")
    if args.trace:
        write_trace(rep, args.trace)
    if _want_svg(cfg, args):
        render_svg(cfg.graph, u, out / "groundstate.svg")
    print(f"validate {cfg.oracle['name']}: max |error| = {err:.3e}, mass error = {mass_err:.3e} -> {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


RUNNERS = {"eigs": run_eigs, "groundstate": run_groundstate, "evolve": run_evolve, "validate": run_validate}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgraph", description="Linear and nonlinear Schroedinger problems on metric graphs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--trace", help="write the solver iteration trace CSV here")
    p.add_argument("--dump-operator", help="write H in Matrix Market format here")
    p.add_argument("--svg", action="store_true", help="also write SVG drawings")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("QGRAPH_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = parse_config(load_json(args.config), args.command)
        if args.dump_operator:
            dump_operator(cfg.graph, args.dump_operator)
        return RUNNERS[cfg.command](cfg, args)
    except FileNotFoundError as exc:
        print(f"qgraph: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qgraph: cannot write output: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, GraphError, ExprError) as exc:
        print(f"qgraph: config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, EvolutionError, EigenError, SingularMatrixError) as exc:
        print(f"qgraph: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
