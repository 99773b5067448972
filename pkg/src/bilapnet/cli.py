"""Command line interface: ``bilapnet <group> <command> [options]``.

Exit codes: 0 success, 1 a reproduction criterion failed, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import ConditionCB, ConditionYR, cb_to_yr, preset_conditions, yr_to_cb
from .discrete import (
    POSITIVITY_TOL, bilaplacian_closed_form, discrete_evolver, discrete_semigroup,
    discrete_transition_time, kappa, lp_dissipativity_scan, markov_character,
    spectral_gap_bounds_check,
)
from .errors import NumericalError, SchemaError, ValidationError
from .fem import Mesh, assemble, eigensolve, evolve, kernel_dimension, kernel_sup_bound
from .graphs import Graph, MetricGraph, preset_graph
from .io import condition_to_dict, dumps, parse_condition_json, parse_graph_json, write_csv, write_json
from .qualitative import SIGN_TOL, FemEvolver, classify, transition_time

TOLERANCES = {"positivity": POSITIVITY_TOL, "sign": SIGN_TOL, "transition": 1e-10}


# -- argument helpers -------------------------------------------------------------

def _geometric(spec: str) -> np.ndarray:
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ValidationError(f"--times expects a:b:n, got {spec!r}") from None
    if not (0 < a < b) or n < 2:
        raise ValidationError("--times needs 0 < a < b and n >= 2")
    return np.geomspace(a, b, n)


def _tolerances(items) -> dict:
    tol = dict(TOLERANCES)
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or name not in tol:
            raise ValidationError(f"--tol expects NAME=VALUE with NAME in {sorted(tol)}, got {item!r}")
        try:
            tol[name] = float(value)
        except ValueError:
            raise ValidationError(f"--tol {name}: {value!r} is not a number") from None
        if not tol[name] > 0:
            raise ValidationError(f"--tol {name} must be positive")
    return tol


def _params(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            out[name] = value
    return out


def _floats(spec: str, what: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise ValidationError(f"{what} expects comma separated numbers, got {spec!r}") from None


def load_graph(spec: str) -> Graph | MetricGraph:
    """A JSON file, or ``kind:n`` for a preset family (path, cycle, complete, star, flower)."""
    if spec is None:
        raise ValidationError("--graph is required")
    if Path(spec).exists() or spec.endswith(".json"):
        return parse_graph_json(spec)
    kind, sep, n = spec.partition(":")
    if not sep:
        raise ValidationError(f"--graph {spec!r}: not a file and not of the form kind:n")
    try:
        return preset_graph(kind, int(n))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"--graph {spec!r}: n must be an integer") from None


def _discrete(args) -> Graph:
    g = load_graph(args.graph)
    return g.graph if isinstance(g, MetricGraph) else g


def _metric(args) -> MetricGraph:
    g = load_graph(args.graph)
    return g if isinstance(g, MetricGraph) else MetricGraph(g)


def load_condition(args, mg: MetricGraph) -> ConditionYR:
    given = [x for x in (args.preset, args.yr, args.cb) if x]
    if len(given) > 1:
        raise ValidationError("give only one of --preset, --yr, --cb")
    if args.cb:
        cond = parse_condition_json(args.cb, mg)
        if not isinstance(cond, ConditionCB):
            raise SchemaError(f"{args.cb}: expected C and B")
        cond = cb_to_yr(cond)
    elif args.yr:
        cond = parse_condition_json(args.yr, mg)
        if isinstance(cond, ConditionCB):
            raise SchemaError(f"{args.yr}: expected Y_basis and R")
    else:
        cond = preset_conditions(mg, args.preset or "friedrichs", _params(args.param))
    if cond.edge_count != mg.edge_count:
        raise ValidationError(f"condition acts on {cond.edge_count} edges, graph has {mg.edge_count}")
    return cond


def config_of(args) -> dict:
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["tol"] = _tolerances(args.tol) if hasattr(args, "tol") else None
    return cfg


class Output:
    """Writes the JSON/CSV products to ``--out``; prints nothing itself."""

    def __init__(self, args):
        self.dir = Path(args.out) if getattr(args, "out", None) else None
        self.config = config_of(args)

    def json(self, name, payload):
        if self.dir is not None:
            write_json(self.dir / name, payload, self.config)

    def csv(self, name, header, rows):
        if self.dir is not None:
            write_csv(self.dir / name, header, rows, self.config)


def _fmt_matrix(a) -> str:
    return "\n".join("  " + " ".join(f"{x: .4f}" for x in row) for row in np.asarray(a))


# -- discrete ---------------------------------------------------------------------

def cmd_discrete_check(args, out: Output) -> int:
    g = _discrete(args)
    tol = _tolerances(args.tol)
    op = bilaplacian_closed_form(g)
    s = discrete_semigroup(op, args.t)
    rep = markov_character(g, tol=tol["positivity"])
    print(f"exp(-{args.t:g} L^2):")
    print(_fmt_matrix(s))
    print(f"min entry at t={args.t:g}: {s.min():.6g}")
    print(f"complete graph: {rep.is_complete}")
    print(f"positive on t-grid: {rep.positive_all_t} (min entry {rep.min_entry:.4g})")
    print(f"l-inf contractive: {rep.linf_contractive} (max row sum {rep.max_row_sum:.6g})")
    print("sub-Markovian" if rep.positive_all_t and rep.linf_contractive else "not sub-Markovian")
    out.json("discrete_check.json", {
        "t": args.t, "semigroup": s, "bilaplacian": op.matrix, "is_complete": rep.is_complete,
        "positive_all_t": rep.positive_all_t, "linf_contractive": rep.linf_contractive,
        "rows_passing": rep.rows_passing, "min_entry": rep.min_entry, "max_row_sum": rep.max_row_sum,
        "consistent": rep.consistent})
    out.csv("discrete_check_grid.csv", ["t", "min_entry", "max_row_sum"], rep.samples)
    return 0


def cmd_discrete_evolve(args, out: Output) -> int:
    g = _discrete(args)
    tol = _tolerances(args.tol)
    f0 = _floats(args.f0, "--f0") if args.f0 else np.eye(g.vertex_count)[0]
    if f0.shape != (g.vertex_count,):
        raise ValidationError(f"--f0 needs {g.vertex_count} values")
    ts = _geometric(args.times or "1e-3:10:50")
    u = discrete_evolver(g, f0)
    rows = [[t, *u(t)] for t in ts]
    res = discrete_transition_time(g, f0, tol["transition"])
    print(f"transition time t* = {res.t_star:.6g} ({res.status}, horizon {res.horizon:.4g})")
    out.csv("discrete_evolve.csv", ["t"] + [f"u{v}" for v in range(g.vertex_count)], rows)
    out.json("discrete_transition.json", {"f0": f0, "t_star": res.t_star, "status": res.status,
                                         "certified": res.certified, "horizon": res.horizon})
    return 0


def cmd_discrete_scan(args, out: Output) -> int:
    g = _discrete(args)
    payload = {}
    if args.f:
        f = _floats(args.f, "--f")
        ps = _floats(args.p or "2", "--p")
        vals = [kappa(g, f, p) for p in ps]
        for r in vals:
            print(f"kappa_f({r.p:g}) = {r.kappa:.6g} ({r.sign})")
        payload["kappa"] = [{"p": r.p, "kappa": r.kappa, "sign": r.sign} for r in vals]
    else:
        ps = _floats(args.p or "3,4,5,6,8", "--p")
        res = lp_dissipativity_scan(g, ps, trials=args.trials, seed=args.seed)
        for p, m in res.minima:
            print(f"p = {p:g}: min kappa found {m:.6g}")
        if res.found:
            print(f"witness at p = {res.p:g}: f = {np.round(res.witness, 6).tolist()}")
        else:
            print("no witness found (inconclusive)")
        payload.update(p=res.p, witness=res.witness, kappa=res.kappa, minima=res.minima)
        out.csv("discrete_scan.csv", ["p", "min_kappa"], res.minima)
    out.json("discrete_scan.json", payload)
    return 0


def cmd_discrete_gap(args, out: Output) -> int:
    g = _discrete(args)
    rep = spectral_gap_bounds_check(g)
    print(f"lambda2 = {rep.lambda2:.10g}")
    print(f"bounds [{rep.lower:.10g}, {rep.upper:.10g}]: {'within' if rep.within else 'VIOLATED'}")
    print(f"spectral mapping error {rep.spectral_mapping_error:.3e}")
    out.json("discrete_gap.json", vars(rep))
    return 0 if rep.within else 3


# -- metric -----------------------------------------------------------------------

def _system(args):
    mg = _metric(args)
    cond = load_condition(args, mg)
    return mg, cond, assemble(mg, Mesh.uniform(mg, args.mesh), cond)


def cmd_metric_spectrum(args, out: Output) -> int:
    _, cond, sysm = _system(args)
    eig = eigensolve(sysm, args.k)
    for j, lam in enumerate(eig.values):
        print(f"{j:3d}  {lam:.10g}")
    out.csv("metric_spectrum.csv", ["index", "eigenvalue"], list(enumerate(eig.values)))
    out.json("metric_spectrum.json", {"condition": cond.name, "eigenvalues": eig.values,
                                      "reduced_dim": sysm.r})
    return 0


def cmd_metric_kernel(args, out: Output) -> int:
    _, cond, sysm = _system(args)
    dim = kernel_dimension(sysm)
    print(f"kernel dimension: {dim}")
    out.json("metric_kernel.json", {"condition": cond.name, "kernel_dimension": dim})
    return 0


def _bump_spec(spec: str):
    """``bump:edge:center:width`` or ``const:value``."""
    parts = spec.split(":")
    try:
        if parts[0] == "const" and len(parts) == 2:
            c = float(parts[1])
            return lambda e, x: np.full_like(np.asarray(x, dtype=float), c)
        if parts[0] == "bump" and len(parts) == 4:
            edge, center, width = int(parts[1]), float(parts[2]), float(parts[3])
            if width <= 0:
                raise ValidationError("bump width must be positive")

            def f(e, x):
                s = (np.asarray(x, dtype=float) - center) / width
                inside = (np.abs(s) < 1) & (e == edge)
                return np.where(inside, (1 - s**2) ** 2, 0.0)
            return f
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
    raise ValidationError(f"--f0 expects bump:edge:center:width or const:value, got {spec!r}")


def cmd_metric_evolve(args, out: Output) -> int:
    _, _, sysm = _system(args)
    tol = _tolerances(args.tol)
    f0 = _bump_spec(args.f0 or "bump:0:0.2:0.05")
    eig = eigensolve(sysm)
    ts = _geometric(args.times or "1e-5:1:40")
    ev = FemEvolver(sysm, f0, eig)
    traj = evolve(sysm, f0, ts, eig)
    rows = [[t, float(np.min(ev(t))), float(np.max(ev(t))), traj.mean(i)] for i, t in enumerate(ts)]
    res = transition_time(ev, tol["transition"])
    if res.status == "ok":
        print(f"transition time t* = {res.t_star:.6g} (certified to {res.horizon:.4g})")
    else:
        print(f"still negative at t = {res.horizon:.4g}")
    out.csv("metric_evolve.csv", ["t", "min", "max", "mean"], rows)
    out.json("metric_transition.json", {"t_star": res.t_star, "status": res.status,
                                       "certified": res.certified, "horizon": res.horizon})
    return 0 if res.status == "ok" else 3


def cmd_metric_classify(args, out: Output) -> int:
    _, cond, sysm = _system(args)
    tol = _tolerances(args.tol)
    c = classify(eigensolve(sysm), tol["sign"], seed=args.seed)
    print(f"verdict: {c.verdict}")
    print(f"kernel dimension: {c.kernel_dim}, lowest multiplicity: {c.lowest_multiplicity}")
    out.json("metric_classify.json", dict(c.to_dict(), condition=cond.name))
    return 0


def cmd_metric_ultra(args, out: Output) -> int:
    _, _, sysm = _system(args)
    eig = eigensolve(sysm)
    ts = _geometric(args.times or "1e-4:1e-2:21")
    sup = np.array([kernel_sup_bound(sysm, t, eig) for t in ts])
    slope = float(np.polyfit(np.log(ts), np.log(sup), 1)[0])
    print(f"log-log slope of the kernel sup bound: {slope:.4f}")
    out.csv("metric_ultra.csv", ["t", "kernel_sup"], zip(ts, sup))
    out.json("metric_ultra.json", {"slope": slope})
    return 0


# -- conditions -------------------------------------------------------------------

def _read_condition(args):
    if args.cb:
        return parse_condition_json(args.cb)
    if args.yr:
        return parse_condition_json(args.yr)
    mg = _metric(args)
    return preset_conditions(mg, args.preset or "friedrichs", _params(args.param))


def cmd_conditions_verify(args, out: Output) -> int:
    cond = _read_condition(args)
    cb = cond if isinstance(cond, ConditionCB) else yr_to_cb(cond)
    cb.check_self_adjoint()
    info = {"edges": cb.edge_count, "rank": cb.rank(), "hermitian_defect": cb.hermitian_defect()}
    if isinstance(cond, ConditionYR):
        info.update(dim_Y=cond.dim_Y, self_adjoint=cond.self_adjoint, dissipative=cond.is_dissipative())
    print("self-adjoint: rank([C B]) = {rank} = 4E, CB* Hermitian (defect {hermitian_defect:.2e})"
          .format(**info))
    out.json("conditions_verify.json", info)
    return 0


def cmd_conditions_convert(args, out: Output) -> int:
    cond = _read_condition(args)
    res = cb_to_yr(cond) if isinstance(cond, ConditionCB) else yr_to_cb(cond)
    text = json.dumps(condition_to_dict(res), sort_keys=True)
    print(text)
    out.json("conditions_convert.json", condition_to_dict(res))
    return 0


# -- reproduce --------------------------------------------------------------------

def cmd_reproduce(args, out: Output) -> int:
    from .reproduce import run_all
    results = run_all(print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    # timings stay on stdout so the files are reproducible byte for byte
    rows = [[r.number, r.title, "PASS" if r.passed else "FAIL", r.detail] for r in results]
    out.csv("reproduce.csv", ["criterion", "title", "status", "detail"], rows)
    out.json("reproduce.json", {"criteria": [dict(zip(("criterion", "title", "status", "detail"), r))
                                             for r in rows]})
    return 0 if passed == len(results) else 1


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", metavar="DIR", help="directory for JSON/CSV outputs")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"tolerance override, NAME in {sorted(TOLERANCES)}")

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--graph", help="graph JSON file or kind:n (path, cycle, complete, star, flower)")

    cond = argparse.ArgumentParser(add_help=False)
    cond.add_argument("--preset", help="sliding_kirchhoff, cont_deriv, cont_free, friedrichs, krein, kiik")
    cond.add_argument("--param", action="append", metavar="NAME=VALUE", help="preset parameter")
    cond.add_argument("--yr", metavar="FILE", help="condition JSON with Y_basis and R")
    cond.add_argument("--cb", metavar="FILE", help="condition JSON with C and B")

    metric = argparse.ArgumentParser(add_help=False, parents=[common, graph, cond])
    metric.add_argument("--mesh", type=int, default=16, metavar="N", help="elements per edge")

    p = argparse.ArgumentParser(prog="bilapnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = p.add_subparsers(dest="group", required=True)

    d = groups.add_parser("discrete", help="the square of the discrete Laplacian").add_subparsers(
        dest="command", required=True)
    s = d.add_parser("check", parents=[common, graph], help="semigroup matrix and Markov character")
    s.add_argument("--t", type=float, default=0.1)
    s.set_defaults(func=cmd_discrete_check)
    s = d.add_parser("evolve", parents=[common, graph], help="trajectory and transition time")
    s.add_argument("--f0", help="comma separated vertex values (default: first indicator)")
    s.add_argument("--times", metavar="a:b:n")
    s.set_defaults(func=cmd_discrete_evolve)
    s = d.add_parser("scan", parents=[common, graph], help="kappa values or a witness search")
    s.add_argument("--f", help="evaluate kappa_f at --p for this vector instead of scanning")
    s.add_argument("--p", help="comma separated exponents")
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_discrete_scan)
    s = d.add_parser("gap", parents=[common, graph], help="second eigenvalue and its bounds")
    s.set_defaults(func=cmd_discrete_gap)

    m = groups.add_parser("metric", help="the fourth derivative on a metric graph").add_subparsers(
        dest="command", required=True)
    s = m.add_parser("spectrum", parents=[metric])
    s.add_argument("--k", type=int, default=10, help="number of eigenvalues")
    s.set_defaults(func=cmd_metric_spectrum)
    m.add_parser("kernel", parents=[metric]).set_defaults(func=cmd_metric_kernel)
    s = m.add_parser("evolve", parents=[metric])
    s.add_argument("--f0", help="bump:edge:center:width or const:value")
    s.add_argument("--times", metavar="a:b:n")
    s.set_defaults(func=cmd_metric_evolve)
    m.add_parser("classify", parents=[metric]).set_defaults(func=cmd_metric_classify)
    s = m.add_parser("ultra", parents=[metric])
    s.add_argument("--times", metavar="a:b:n")
    s.set_defaults(func=cmd_metric_ultra)

    c = groups.add_parser("conditions", help="vertex condition encodings").add_subparsers(
        dest="command", required=True)
    c.add_parser("verify", parents=[common, graph, cond]).set_defaults(func=cmd_conditions_verify)
    c.add_parser("convert", parents=[common, graph, cond]).set_defaults(func=cmd_conditions_convert)

    r = groups.add_parser("reproduce-paper", parents=[common], help="run the reproduction battery")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _tolerances(args.tol)
        return args.func(args, Output(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
