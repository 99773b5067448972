"""The desk-scale reproduction battery shared by ``bilapnet reproduce-paper`` and the tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .conditions import (
    LEAF_KINDS, VertexCondition, assemble_vertex_conditions, cb_to_yr, conditions_equal,
    preset_conditions, yr_to_cb,
)
from .discrete import (
    bilaplacian_closed_form, discrete_semigroup, discrete_transition_time, kappa, markov_character,
    spectral_gap_bounds_check,
)
from .fem import Mesh, assemble, assemble_laplacian_ck, eigensolve, kernel_dimension, kernel_sup_bound
from .graphs import MetricGraph, build_graph, enumerate_connected_graphs, incidence_matrix, preset_graph
from .qualitative import (
    FemEvolver, classify, classify_fem, dissipativity_identity_probe, probe_battery, transition_time,
)

P3_PRINTED = np.array([[0.8535, 0.1978, -0.0513], [0.1978, 0.6048, 0.1978],
                       [-0.0513, 0.1978, 0.8535]])
SIMPLE_PRESETS = ("sliding_kirchhoff", "cont_deriv", "cont_free", "friedrichs", "krein")


def test_graphs() -> dict[str, MetricGraph]:
    return {
        "edge": MetricGraph(build_graph(2, [(0, 1)])),
        "P3": MetricGraph(preset_graph("path", 3)),
        "star3": MetricGraph(preset_graph("star", 3)),
        "C4": MetricGraph(preset_graph("cycle", 4)),
    }


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, title):
    def deco(fn: Callable[[], tuple[bool, str]]):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn()
            return CriterionResult(number, title, bool(ok), detail, time.perf_counter() - t0)
        run.number = number
        run.title = title
        return run
    return deco


@_timed(1, "closed-form square equals (I I^T)^2, all connected graphs n <= 6")
def criterion_1():
    t0 = time.perf_counter()
    count = bad = 0
    for n in range(1, 7):
        for g in enumerate_connected_graphs(n):
            inc = incidence_matrix(g)
            lap = inc @ inc.T
            count += 1
            bad += not np.array_equal(bilaplacian_closed_form(g).matrix, lap @ lap)
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 60, f"{count} graphs, {bad} mismatches, {dt:.1f}s (limit 60s)"


@_timed(2, "exp(-0.1 L^2) on P3 matches the printed matrix")
def criterion_2():
    s = discrete_semigroup(bilaplacian_closed_form(preset_graph("path", 3)), 0.1)
    err = float(np.max(np.abs(s - P3_PRINTED)))
    return err <= 5e-4, f"max deviation {err:.2e} (tol 5e-4)"


@_timed(3, "positivity <=> l-inf row condition + contraction <=> completeness, n <= 6")
def criterion_3():
    count = bad = 0
    for n in range(2, 7):
        for g in enumerate_connected_graphs(n):
            count += 1
            bad += not markov_character(g).consistent
    return bad == 0, f"{count} graphs, {bad} disagreements"


@_timed(4, "kappa_f(2) = 49/8 and kappa_f(5.71) > 0 > kappa_f(5.72) on the 2-edge star")
def criterion_4():
    g = preset_graph("star", 2)
    f = [1.0, 7 / 4, -1.0]
    k2, hi, lo = (kappa(g, f, p).kappa for p in (2, 5.71, 5.72))
    ok = k2 == 49 / 8 and hi > 0 > lo
    return ok, f"kappa(2)={k2!r}, kappa(5.71)={hi:.4f}, kappa(5.72)={lo:.4f}"


@_timed(5, "spectral gap bounds, all connected graphs n <= 6, equality on paths and complete graphs")
def criterion_5():
    count = outside = 0
    for n in range(2, 7):
        for g in enumerate_connected_graphs(n):
            count += 1
            rep = spectral_gap_bounds_check(g)
            outside += not (rep.within and rep.spectral_mapping_ok)
    tight = True
    for n in range(2, 7):
        p = spectral_gap_bounds_check(preset_graph("path", n))
        tight &= abs(p.lambda2 - p.lower) <= 1e-9
        if n >= 3:
            k = spectral_gap_bounds_check(preset_graph("complete", n))
            tight &= abs(k.lambda2 - k.upper) <= 1e-9
    return outside == 0 and tight, f"{count} graphs, {outside} outside bounds, equality cases {'ok' if tight else 'FAILED'}"


def hinged_condition(mg: MetricGraph):
    return assemble_vertex_conditions(mg, [VertexCondition("zero", "free")] * mg.vertex_count,
                                      name="hinged")


@_timed(6, "single-edge spectra at n_e = 64: sliding {0, pi^4, 16 pi^4}, hinged {pi^4, 16 pi^4}")
def criterion_6():
    t0 = time.perf_counter()
    mg = test_graphs()["edge"]
    mesh = Mesh.uniform(mg, 64)
    p4 = math.pi**4
    sl = eigensolve(assemble(mg, mesh, preset_conditions(mg, "friedrichs")), 3).values
    hi = eigensolve(assemble(mg, mesh, hinged_condition(mg)), 2).values
    # the zero eigenvalue is compared on the scale of the first nonzero one
    errs = [abs(sl[0]) / p4, abs(sl[1] - p4) / p4, abs(sl[2] - 16 * p4) / (16 * p4),
            abs(hi[0] - p4) / p4, abs(hi[1] - 16 * p4) / (16 * p4)]
    dt = time.perf_counter() - t0
    return max(errs) <= 1e-3 and dt < 5, f"max rel err {max(errs):.2e}, {dt:.2f}s"


KERNEL_TABLE = [
    ("friedrichs", "edge", 1), ("friedrichs", "P3", 1), ("friedrichs", "star3", 1), ("friedrichs", "C4", 1),
    ("krein", "P3", 5), ("krein", "star3", 7), ("krein", "C4", 8),
    ("cont_free", "edge", 2), ("cont_free", "P3", 3), ("cont_free", "star3", 4), ("cont_free", "C4", 4),
    ("cont_deriv", "C3", 1), ("cont_deriv", "C4", 2),
]


@_timed(7, "kernel dimension table, identical at n_e in {1, 4, 16}")
def criterion_7():
    graphs = dict(test_graphs(), C3=MetricGraph(preset_graph("cycle", 3)))
    wrong = []
    for kind, gname, want in KERNEL_TABLE:
        mg = graphs[gname]
        got = [kernel_dimension(assemble(mg, Mesh.uniform(mg, n), preset_conditions(mg, kind)))
               for n in (1, 4, 16)]
        if got != [want] * 3:
            wrong.append(f"{kind}/{gname}: {got} != {want}")
    return not wrong, "; ".join(wrong) if wrong else f"{len(KERNEL_TABLE)} rows match"


@_timed(8, "square relation on the equilateral 3-star")
def criterion_8():
    mg = test_graphs()["star3"]
    bi = eigensolve(assemble(mg, Mesh.uniform(mg, 64), preset_conditions(mg, "sliding_kirchhoff")), 5).values
    ck = eigensolve(assemble_laplacian_ck(mg, Mesh.uniform(mg, 256)), 5).values ** 2
    scale = np.maximum(np.abs(ck), ck[1])  # the zero eigenvalue is judged on the first nonzero scale
    err = float(np.max(np.abs(bi - ck) / scale))
    return err <= 1e-2, f"max rel err {err:.2e} (tol 1e-2); bi/pi^4 = {np.round(bi / math.pi**4, 4).tolist()}"


def all_test_conditions():
    for gname, mg in test_graphs().items():
        for kind in SIMPLE_PRESETS:
            yield gname, kind, preset_conditions(mg, kind)
    mg = test_graphs()["star3"]
    for leaf in LEAF_KINDS:
        yield "star3", f"kiik/{leaf}", preset_conditions(
            mg, "kiik", {"alpha": 2.0, "beta": 2.0, "gamma": 2 * math.pi - 4.0, "leaf": leaf})


@_timed(9, "self-adjointness certificate and CB/YR roundtrip for every preset")
def criterion_9():
    bad = []
    count = 0
    for gname, kind, cond in all_test_conditions():
        count += 1
        cb = yr_to_cb(cond)
        n = 4 * cond.edge_count
        if cb.rank() != n or cb.hermitian_defect() > 1e-9 or not conditions_equal(cond, cb_to_yr(cb)):
            bad.append(f"{kind}/{gname}")
    return not bad, f"{count} conditions, failures: {bad or 'none'}"


FEM_VERDICTS = [
    ("friedrichs", True), ("sliding_kirchhoff", True), ("krein", False), ("cont_free", False),
]


@_timed(10, "eventual-positivity verdicts")
def criterion_10():
    bad = []
    for n in range(2, 7):
        for g in enumerate_connected_graphs(n):
            if classify(bilaplacian_closed_form(g)).verdict != "eventually_sub_markovian":
                bad.append(f"discrete {g.edges}")
    graphs = test_graphs()
    for kind, positive in FEM_VERDICTS:
        for gname, mg in graphs.items():
            c = classify_fem(mg, preset_conditions(mg, kind))
            ok = c.is_eventually_irreducible if positive else c.verdict == "none"
            if not ok:
                bad.append(f"{kind}/{gname} -> {c.verdict}")
    for n, positive in ((3, True), (5, True), (4, False), (6, False)):
        mg = MetricGraph(preset_graph("cycle", n))
        c = classify_fem(mg, preset_conditions(mg, "cont_deriv"))
        ok = c.is_eventually_irreducible if positive else c.verdict == "none"
        if not ok:
            bad.append(f"cont_deriv/C{n} -> {c.verdict}")
    return not bad, "all verdicts match" if not bad else "; ".join(bad[:5])


def bump(center=0.2, width=0.05):
    def f(e, x):
        s = (np.asarray(x) - center) / width
        return np.where(np.abs(s) < 1, (1 - s**2) ** 2, 0.0)
    return f


@_timed(11, "transition times: discrete P3 and a bump on the sliding interval")
def criterion_11():
    oracle = brentq(lambda t: 1 / 3 + math.exp(-9 * t) / 6 - math.exp(-t) / 2, 0.05, 2.0)
    res = discrete_transition_time(preset_graph("path", 3), [1.0, 0.0, 0.0])
    ok_d = res.certified and abs(res.t_star - oracle) <= 0.01 and abs(res.t_star - 0.39) <= 0.01
    mg = test_graphs()["edge"]
    ev = FemEvolver(assemble(mg, Mesh.uniform(mg, 64), preset_conditions(mg, "friedrichs")), bump())
    fres = transition_time(ev)
    ok_f = False
    if fres.status == "ok" and fres.t_star > 0:
        before = min(v for t, v in fres.samples if 0 < t < fres.t_star)
        after = min(v for t, v in fres.samples if t >= fres.t_star)
        ok_f = before < 0 and after >= -1e-10
    return ok_d and ok_f, (f"P3 t*={res.t_star:.5f} (oracle {oracle:.5f}); "
                           f"bump t*={fres.t_star}, status {fres.status}")


@_timed(12, "ultracontractivity slope on [1e-4, 1e-2], single edge, 128 elements")
def criterion_12():
    mg = test_graphs()["edge"]
    sysm = assemble(mg, Mesh.uniform(mg, 128), preset_conditions(mg, "friedrichs"))
    eig = eigensolve(sysm)
    ts = np.geomspace(1e-4, 1e-2, 21)
    sup = [kernel_sup_bound(sysm, t, eig) for t in ts]
    slope = float(np.polyfit(np.log(ts), np.log(sup), 1)[0])
    return -0.33 <= slope <= -0.17, f"slope {slope:.4f} (window [-0.33, -0.17])"


@_timed(13, "integration-by-parts identity for p = 3 on a 20-function battery")
def criterion_13():
    res = [dissipativity_identity_probe(f) for f in probe_battery(20, seed=42)]
    worst = max(r.residual for r in res)
    failing = sum(r.residual > 1e-6 for r in res)
    worst_fixed = max(r.corrected_residual for r in res)
    return failing == 0, (f"{failing}/20 above 1e-6 (worst {worst:.2e}); with the sign-change "
                          f"term -(4/3) sum |u'(x0)|^3 the worst is {worst_fixed:.1e}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13]


def run_all(echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        r = crit()
        out.append(r)
        if echo:
            echo(r.line())
    return out
