import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilapnet.conditions import (
    LEAF_KINDS, ConditionCB, ConditionYR, TraceConvention, VertexCondition,
    admissible_trace_space, assemble_vertex_conditions, cb_to_yr, conditions_equal, cv_basis,
    krein_lambda, largest_principal_angle, preset_conditions, yr_to_cb,
)
from bilapnet.errors import (
    DegenerateAngle, DimensionMismatch, NotSelfAdjoint, UnsupportedGraphForPreset, ValidationError,
)
from bilapnet.graphs import MetricGraph, build_graph, preset_graph

EDGE = MetricGraph(build_graph(2, [(0, 1)]))
P3 = MetricGraph(preset_graph("path", 3))
STAR3 = MetricGraph(preset_graph("star", 3))
C4 = MetricGraph(preset_graph("cycle", 4))
GRAPHS = {"edge": EDGE, "P3": P3, "star3": STAR3, "C4": C4,
          "P3_uneven": MetricGraph(preset_graph("path", 3), (0.5, 2.0))}
SIMPLE = ("sliding_kirchhoff", "cont_deriv", "cont_free", "friedrichs", "krein")


def all_presets():
    for gname, mg in GRAPHS.items():
        for kind in SIMPLE:
            yield gname, kind, preset_conditions(mg, kind)
    for leaf in LEAF_KINDS:
        yield "star3", f"kiik-{leaf}", preset_conditions(
            STAR3, "kiik", {"alpha": 2.0, "beta": 2.1, "gamma": 2 * math.pi - 4.1, "leaf": leaf})


def test_trace_convention_layout():
    tc = TraceConvention(3)
    assert [tc.value_slot(1, 0), tc.value_slot(1, 1), tc.derivative_slot(1, 0), tc.derivative_slot(1, 1)] == [1, 4, 7, 10]
    assert tc.derivative_sign(0) == -1 and tc.derivative_sign(1) == 1
    x = tc.trace01([1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12])
    assert x[6:9].tolist() == [-7, -8, -9] and x[9:].tolist() == [10, 11, 12]
    y = tc.trace32([1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4])
    assert y.tolist() == [-1] * 3 + [2] * 3 + [-3] * 3 + [-4] * 3


def test_cv_basis_examples():
    b = cv_basis(EDGE)
    assert b.shape == (2, 2) and np.linalg.matrix_rank(b) == 2
    b = cv_basis(P3)
    assert b.shape == (4, 3)
    # slot of edge 0's end (index 2) and edge 1's start (index 1) share vertex 1
    assert b[2, 1] == b[1, 1] == pytest.approx(1 / math.sqrt(2))
    b = cv_basis(STAR3)
    assert b.shape == (6, 4) and np.count_nonzero(b[:, 0]) == 3
    assert np.allclose(b.T @ b, np.eye(4))


def test_preset_dimensions():
    for mg in GRAPHS.values():
        V, E = mg.vertex_count, mg.edge_count
        assert preset_conditions(mg, "friedrichs").dim_Y == V
        assert preset_conditions(mg, "cont_free").dim_Y == V + 2 * E
        assert preset_conditions(mg, "sliding_kirchhoff").dim_Y == V + 2 * E - V
        assert preset_conditions(mg, "cont_deriv").dim_Y == 2 * V
    assert preset_conditions(P3, "cont_free").dim_Y == 7


def test_krein_single_edge_quadratic_form():
    cond = preset_conditions(EDGE, "krein")
    assert cond.dim_Y == 4
    rng = np.random.default_rng(5)
    for _ in range(5):
        u0, u1, du0, du1 = rng.standard_normal(4)
        x = TraceConvention(1).trace01([u0], [u1], [du0], [du1])
        q = np.real(np.vdot(x, cond.R_full() @ x))
        assert q == pytest.approx((du1 - du0) ** 2, rel=1e-12)


@given(st.lists(st.floats(0.1, 5), min_size=4, max_size=4), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_krein_lambda_sum_formula(lengths, seed):
    mg = MetricGraph(preset_graph("cycle", 4), tuple(lengths))
    lam = krein_lambda(mg)
    assert np.allclose(lam, lam.T)
    assert np.linalg.eigvalsh(lam).min() >= -1e-12
    w = np.random.default_rng(seed).standard_normal(8)
    x = np.concatenate([np.zeros(8), w])
    want = sum((w[e] + w[4 + e]) ** 2 / lengths[e] for e in range(4))
    assert x @ lam @ x == pytest.approx(want, rel=1e-10)


def test_kiik_errors():
    with pytest.raises(UnsupportedGraphForPreset):
        preset_conditions(P3, "kiik", {"alpha": 1, "beta": 1, "gamma": 1})
    with pytest.raises(DegenerateAngle):
        preset_conditions(STAR3, "kiik", {"alpha": math.pi, "beta": 1, "gamma": 1})
    with pytest.raises(DegenerateAngle):
        preset_conditions(STAR3, "kiik", {"alpha": 0, "beta": 1, "gamma": 1})
    with pytest.raises(ValidationError):
        preset_conditions(STAR3, "nope")


def test_kiik_center_space():
    a, b, g = 1.0, 2.0, 2 * math.pi - 3.0
    cond = preset_conditions(STAR3, "kiik", {"alpha": a, "beta": b, "gamma": g, "leaf": "free"})
    s = np.array([math.sin(a), math.sin(b), math.sin(g)])
    # derivative block, centre slots 0..2 (edge starts): every Y vector is orthogonal to s
    deriv_centre = cond.Y_basis[6:9]
    assert np.allclose(s @ deriv_centre, 0)
    assert np.linalg.matrix_rank(deriv_centre) == 2


def test_kiik_on_relabelled_star():
    # centre is the target of every edge; slots must still follow edge order
    mg = MetricGraph(build_graph(4, [(1, 0), (2, 0), (3, 0)]))
    cond = preset_conditions(mg, "kiik", {"alpha": 1.0, "beta": 2.0, "gamma": 2.5})
    s = np.sin([1.0, 2.0, 2.5])
    assert np.allclose(s @ cond.Y_basis[9:12], 0)


def test_yr_to_cb_trivial_cases():
    n = 4
    full = ConditionYR(np.eye(n), np.zeros((n, n)))
    cb = yr_to_cb(full)
    assert np.allclose(cb.C, 0) and np.allclose(cb.B, np.eye(n))
    clamped = ConditionYR(np.zeros((n, 0)), np.zeros((0, 0)))
    cb = yr_to_cb(clamped)
    assert np.allclose(cb.B, 0) and np.allclose(cb.C, np.eye(n))
    back = cb_to_yr(ConditionCB(np.eye(n), np.zeros((n, n))))
    assert back.dim_Y == 0


@pytest.mark.parametrize("gname, kind, cond", list(all_presets()), ids=lambda x: x if isinstance(x, str) else "")
def test_roundtrip_and_certificate(gname, kind, cond):
    cb = yr_to_cb(cond)
    assert cb.rank() == 4 * cond.edge_count
    assert cb.hermitian_defect() <= 1e-9
    back = cb_to_yr(cb)
    assert conditions_equal(cond, back)
    assert conditions_equal(cond, cb)
    assert admissible_trace_space(cond).dim == 4 * cond.edge_count
    assert cond.dim_Y + cond.complement_basis().shape[1] == 4 * cond.edge_count
    assert cond.self_adjoint


def test_krein_roundtrip_recovers_lambda():
    cond = preset_conditions(EDGE, "krein")
    back = cb_to_yr(yr_to_cb(cond))
    assert np.max(np.abs(back.R_full() - cond.R_full())) <= 1e-10


def test_sliding_vs_cont_deriv_differ():
    a = admissible_trace_space(preset_conditions(STAR3, "sliding_kirchhoff"))
    b = admissible_trace_space(preset_conditions(STAR3, "cont_deriv"))
    assert largest_principal_angle(a.basis, b.basis) > 0.1
    assert not conditions_equal(preset_conditions(STAR3, "sliding_kirchhoff"),
                                preset_conditions(STAR3, "cont_deriv"))


def test_cb_rejects_non_hermitian():
    rng = np.random.default_rng(1)
    C, B = rng.standard_normal((2, 4, 4))
    with pytest.raises(NotSelfAdjoint, match="CB\\* not Hermitian"):
        cb_to_yr(ConditionCB(C, B))


def test_cb_rejects_rank_deficient():
    with pytest.raises(NotSelfAdjoint, match="rank"):
        cb_to_yr(ConditionCB(np.zeros((4, 4)), np.diag([1.0, 1, 1, 0])))


def test_admissible_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        admissible_trace_space(ConditionCB(np.zeros((4, 4)), np.diag([1.0, 1, 1, 0])))


def test_yr_validation():
    with pytest.raises(ValidationError):
        ConditionYR(np.ones((4, 2)), np.zeros((2, 2)))


def test_dissipativity_flag():
    cond = preset_conditions(EDGE, "krein")
    assert not cond.is_dissipative()
    assert preset_conditions(EDGE, "cont_free").is_dissipative()
    neg = ConditionYR(np.eye(4), -np.eye(4))
    assert neg.is_dissipative()


@given(st.integers(0, 2**31), st.integers(0, 8))
@settings(max_examples=40, deadline=None)
def test_random_hermitian_roundtrip(seed, k):
    rng = np.random.default_rng(seed)
    n = 8
    Q = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0][:, :k]
    h = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    cond = ConditionYR(Q, h + h.conj().T)
    back = cb_to_yr(yr_to_cb(cond))
    assert conditions_equal(cond, back)
    assert np.allclose(back.R_full(), cond.R_full(), atol=1e-9)


def test_custom_vertex_assembly():
    local = [VertexCondition("continuous", "zero"), VertexCondition("free", "free")]
    cond = assemble_vertex_conditions(EDGE, local, name="mixed")
    assert cond.dim_Y == 1 + 1 + 1 and cond.provenance == ("continuous/zero", "free/free")
