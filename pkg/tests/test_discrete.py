import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from bilapnet.discrete import (
    SymmetricOperator, bilaplacian_closed_form, discrete_semigroup, discrete_transition_time,
    kappa, laplacian, linf_generator_row_condition, lp_dissipativity_scan, markov_character,
    signed_power, spectral_gap_bounds_check, vertex_transition_experiment,
)
from bilapnet.errors import EmptyGrid, InvalidExponent, NegativeTime, NotApplicable, ValidationError
from bilapnet.graphs import build_graph, enumerate_connected_graphs, incidence_matrix, preset_graph

from test_graphs import connected_graphs

P3 = preset_graph("path", 3)
K2 = build_graph(2, [(0, 1)])
K3 = preset_graph("complete", 3)
K4 = preset_graph("complete", 4)
STAR2 = preset_graph("star", 2)


def p3_exact(t):
    # closed form of exp(-t L^2) on P3; eigenvalues of L^2 are 0, 1, 9
    a, b = math.exp(-t), math.exp(-9 * t)
    return np.array([
        [2 + 3 * a + b, 2 - 2 * b, 2 - 3 * a + b],
        [2 - 2 * b, 2 + 4 * b, 2 - 2 * b],
        [2 - 3 * a + b, 2 - 2 * b, 2 + 3 * a + b],
    ]) / 6


def test_laplacian_examples():
    assert laplacian(P3).matrix.tolist() == [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]
    assert laplacian(K2).matrix.tolist() == [[1, -1], [-1, 1]]


def test_bilaplacian_examples():
    assert bilaplacian_closed_form(P3).matrix.tolist() == [[2, -3, 1], [-3, 6, -3], [1, -3, 2]]
    k4 = bilaplacian_closed_form(K4).matrix
    assert np.all(np.diag(k4) == 12) and np.all(k4[~np.eye(4, dtype=bool)] == -4)
    s3 = bilaplacian_closed_form(preset_graph("star", 3)).matrix
    assert s3[0, 0] == 12 and all(s3[i, i] == 2 for i in (1, 2, 3))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_form_matches_square(n):
    for g in enumerate_connected_graphs(n):
        inc = incidence_matrix(g)
        lap = inc @ inc.T
        assert np.array_equal(bilaplacian_closed_form(g).matrix, lap @ lap)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_complete_graph_square_is_v_times_laplacian(n):
    g = preset_graph("complete", n)
    assert np.array_equal(bilaplacian_closed_form(g).matrix, n * laplacian(g).matrix)


def test_symmetric_operator_checks():
    with pytest.raises(ValidationError):
        SymmetricOperator(np.array([[1.0, 2.0], [0.0, 1.0]]))
    op = bilaplacian_closed_form(P3)
    assert op.eigenvalues == pytest.approx([0, 1, 9], abs=1e-12)
    assert op.reconstruction_error() <= 1e-9 * 6


def test_semigroup_p3_printed_values():
    s = discrete_semigroup(bilaplacian_closed_form(P3), 0.1)
    printed = np.array([[0.8535, 0.1978, -0.0513], [0.1978, 0.6048, 0.1978],
                        [-0.0513, 0.1978, 0.8535]])
    assert np.max(np.abs(s - printed)) <= 5e-4
    assert np.allclose(s, p3_exact(0.1), atol=1e-12)


def test_semigroup_k2_and_identity():
    op = bilaplacian_closed_form(K2)
    assert np.allclose(discrete_semigroup(op, 0.0), np.eye(2), atol=1e-14)
    t = 0.37
    e = math.exp(-4 * t)
    want = np.array([[1 + e, 1 - e], [1 - e, 1 + e]]) / 2
    assert np.allclose(discrete_semigroup(op, t), want, atol=1e-13)
    with pytest.raises(NegativeTime):
        discrete_semigroup(op, -1e-3)


@given(connected_graphs(), st.floats(0, 10), st.floats(0, 5))
@settings(max_examples=50, deadline=None)
def test_semigroup_properties(g, s, t):
    op = bilaplacian_closed_form(g)
    et = discrete_semigroup(op, t)
    assert np.allclose(et @ np.ones(g.vertex_count), 1, atol=1e-10)
    assert np.allclose(et, et.T, atol=1e-14)
    assert np.linalg.norm(et, 2) <= 1 + 1e-12
    both = discrete_semigroup(op, s) @ et
    assert np.allclose(both, discrete_semigroup(op, s + t), atol=1e-9)


def test_row_condition():
    assert linf_generator_row_condition(bilaplacian_closed_form(K4)).all()
    rows = linf_generator_row_condition(bilaplacian_closed_form(P3))
    assert not rows[0] and not rows[2]
    assert linf_generator_row_condition(np.diag([1.0, 0.0, 3.0])).all()


def test_markov_character_examples():
    rep = markov_character(K4)
    assert rep.is_complete and rep.positive_all_t and rep.linf_contractive and rep.consistent
    rep = markov_character(P3, [0.1])
    assert not (rep.is_complete or rep.positive_all_t or rep.linf_contractive)
    assert rep.min_entry == pytest.approx(-0.0513, abs=5e-4)
    with pytest.raises(EmptyGrid):
        markov_character(P3, [])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_markov_character_agrees(n):
    assert all(markov_character(g).consistent for g in enumerate_connected_graphs(n))


def test_kappa_values():
    f = [1.0, 7 / 4, -1.0]
    assert kappa(STAR2, f, 2).kappa == pytest.approx(49 / 8, rel=1e-14)
    assert kappa(STAR2, f, 5).kappa == pytest.approx(2.31, abs=5e-3)
    hi, lo = kappa(STAR2, f, 5.71), kappa(STAR2, f, 5.72)
    assert hi.kappa == pytest.approx(0.02, abs=5e-3) and hi.sign == "positive"
    assert lo.kappa == pytest.approx(-0.02, abs=5e-3) and lo.sign == "negative"


def test_kappa_constant_and_errors():
    for p in (1.5, 2, 3.3, 7):
        assert kappa(P3, [2.0, 2.0, 2.0], p).sign == "zero"
    with pytest.raises(InvalidExponent):
        kappa(P3, [1, 0, 0], 1.0)


def test_signed_power_zero_entries():
    assert signed_power(np.array([0.0, -2.0, 3.0]), 1.5).tolist() == [0.0, -(2 ** 0.5), 3 ** 0.5]


@given(connected_graphs(), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_kappa_two_is_norm_squared(g, seed):
    f = np.random.default_rng(seed).standard_normal(g.vertex_count)
    lf = laplacian(g).matrix @ f
    rep = kappa(g, f, 2)
    assert rep.kappa == pytest.approx(lf @ lf, rel=1e-10, abs=1e-12)


def test_scan_star_finds_witness():
    res = lp_dissipativity_scan(STAR2, [3, 4, 5, 6], trials=100, seed=42)
    assert res.found and res.p <= 6
    assert kappa(STAR2, res.witness, res.p).kappa == pytest.approx(res.kappa, rel=1e-10)
    assert np.linalg.norm(res.witness) == pytest.approx(1)


@pytest.mark.parametrize("g", [P3, K3, STAR2, preset_graph("cycle", 4)])
def test_scan_near_two_no_witness(g):
    assert not lp_dissipativity_scan(g, [2.05], trials=100, seed=1).found


def test_scan_k3_snapshot():
    a = lp_dissipativity_scan(K3, [3, 4], trials=100, seed=42)
    b = lp_dissipativity_scan(K3, [3, 4], trials=100, seed=42)
    assert not a.found
    assert a.minima == b.minima
    assert all(-1e-10 <= m <= 1e-12 for _, m in a.minima)


def test_scan_rejects_bad_grid():
    with pytest.raises(ValidationError):
        lp_dissipativity_scan(P3, [3, 2.5])
    with pytest.raises(ValidationError):
        lp_dissipativity_scan(P3, [2.0])


def test_gap_examples():
    rep = spectral_gap_bounds_check(P3)
    assert rep.lambda2 == pytest.approx(1) and rep.lower == pytest.approx(1) and rep.within
    rep = spectral_gap_bounds_check(K3)
    assert rep.lambda2 == pytest.approx(9) and rep.upper == 9 and rep.within
    assert rep.spectral_mapping_ok


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_gap_bounds_exhaustive(n):
    for g in enumerate_connected_graphs(n):
        rep = spectral_gap_bounds_check(g)
        assert rep.within and rep.spectral_mapping_ok


def test_transition_p3():
    oracle = brentq(lambda t: 1 / 3 + math.exp(-9 * t) / 6 - math.exp(-t) / 2, 0.05, 2)
    res = discrete_transition_time(P3, [1, 0, 0])
    assert res.certified and res.t_star == pytest.approx(oracle, rel=1e-3)
    assert abs(res.t_star - 0.39) <= 0.01
    # samples after t* stay nonnegative
    assert all(v >= -1e-10 for t, v in res.samples if t >= res.t_star)


def test_transition_p3_solution_matches_closed_form():
    from bilapnet.discrete import discrete_evolver
    u = discrete_evolver(P3, [1, 0, 0])
    for t in (0.05, 0.3, 1.7):
        a, b = math.exp(-t), math.exp(-9 * t)
        want = [1 / 3 + b / 6 + a / 2, 1 / 3 - b / 3, 1 / 3 + b / 6 - a / 2]
        assert np.allclose(u(t), want, atol=1e-13)


def test_transition_complete_is_zero():
    rng = np.random.default_rng(3)
    for _ in range(3):
        assert discrete_transition_time(K4, rng.random(4)).t_star == 0.0


def test_transition_rejects_negative():
    with pytest.raises(NotApplicable):
        discrete_transition_time(P3, [1, -1, 0])
    with pytest.raises(NotApplicable):
        discrete_transition_time(P3, [0, 0, 0])


def test_vertex_experiment_rows():
    rows = vertex_transition_experiment(P3)
    assert [r["degree"] for r in rows] == [1, 2, 1]
    assert rows[0]["t_star"] == pytest.approx(rows[2]["t_star"])
