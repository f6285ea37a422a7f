import math

import numpy as np
import pytest

from chunglu.degrees import DegreeSequence, degree_vector_e, moments, normalized_degree_vector
from chunglu.errors import ConvergenceError, InvalidInput, NotDetachedError
from chunglu.sampler import SampleSeed, SparseAdjacency, sample_fast
from chunglu.spectral import (CenteredOperator, IndefiniteError, apply_centered, conjugate_gradient,
                              eigvec_from_resolvent, expansion_diagnostics, fix_sign, fixed_point_solve,
                              power_iteration_top, quadratic_forms, secular_solve, spectral_norm_H,
                              truncation_depth)

from conftest import random_graphical, sampled


def _setup(seq, seed=0):
    m = moments(seq)
    adj = sample_fast(seq, m, True, SampleSeed(seed))
    e = degree_vector_e(seq, m)
    return adj, e, CenteredOperator(adj, e)


def _dense_top(adj):
    w, V = np.linalg.eigh(adj.to_dense())
    return w[-1], fix_sign(V[:, -1])


def _complete(n):
    i, j = np.triu_indices(n)
    return SparseAdjacency.from_edges(n, i, j, True)


def test_complete_graph_with_loops():
    adj = _complete(4)
    ep = power_iteration_top(adj)
    assert ep.value == pytest.approx(4.0)
    assert np.allclose(ep.vector, 0.5)
    e = np.ones(4)
    op = CenteredOperator(adj, e)
    assert spectral_norm_H(op) == 0.0
    res = secular_solve(op, e, 0.0)
    assert res.lam == pytest.approx(4.0)


def test_power_iteration_matches_dense():
    adj, e, op = _setup(DegreeSequence.uniform_integers(150, 8, 14, seed=1))
    lam, v = _dense_top(adj)
    ep = power_iteration_top(adj, tol=1e-10)
    assert ep.value == pytest.approx(lam, rel=1e-9)
    assert np.linalg.norm(ep.vector - v) < 1e-6
    assert ep.vector.sum() > 0


def test_power_iteration_errors():
    empty = SparseAdjacency.from_edges(3, np.array([], int), np.array([], int), True)
    with pytest.raises(ConvergenceError):
        power_iteration_top(empty)
    adj, _, _ = _setup(DegreeSequence.constant(100, 10))
    with pytest.raises(ConvergenceError) as info:
        power_iteration_top(adj, tol=1e-14, max_iter=2, start=np.arange(100.0))
    assert info.value.best is not None
    with pytest.raises(InvalidInput):
        power_iteration_top(adj, start=np.ones(3))


def test_bipartite_needs_shift():
    # a single edge: eigenvalues +-1; shifting makes the iteration converge
    adj = SparseAdjacency.from_edges(2, np.array([0]), np.array([1]), False)
    ep = power_iteration_top(adj, start=np.array([1.0, 0.0]), shift=1.0)
    assert ep.value == pytest.approx(1.0)


def test_centered_operator_matches_dense():
    adj, e, op = _setup(DegreeSequence.uniform_integers(80, 4, 9, seed=2))
    H = adj.to_dense() - np.outer(e, e)
    x = np.sin(np.arange(80.0))
    assert np.allclose(apply_centered(op, x), H @ x)
    assert np.allclose(op @ x, H @ x)
    with pytest.raises(InvalidInput):
        CenteredOperator(adj, np.ones(3))


@pytest.mark.parametrize("n", [10, 100, 600])
def test_spectral_norm_matches_dense(n):
    adj, e, op = _setup(DegreeSequence.uniform_integers(n, 3, max(4, int(math.sqrt(3 * n))), seed=n))
    H = adj.to_dense() - np.outer(e, e)
    exact = np.abs(np.linalg.eigvalsh(H)).max()
    assert spectral_norm_H(op) == pytest.approx(exact, rel=1e-6)


def test_spectral_norm_scale():
    adj, e, op = _setup(DegreeSequence.constant(5000, 40))
    ratio = spectral_norm_H(op) / (2 * math.sqrt(40))
    assert 0.8 <= ratio <= 1.3


def test_spectral_norm_nonconvergence_raises():
    adj, e, op = _setup(DegreeSequence.constant(2000, 40))
    with pytest.raises(ConvergenceError):
        spectral_norm_H(op, tol=1e-15, max_iter=1)


def test_conjugate_gradient():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((40, 40))
    M = B @ B.T + 40 * np.eye(40)
    b = rng.standard_normal(40)
    x, its = conjugate_gradient(lambda v: M @ v, b, rtol=1e-12)
    assert np.allclose(M @ x, b, atol=1e-9)
    assert its <= 40
    x0, its0 = conjugate_gradient(lambda v: M @ v, np.zeros(40))
    assert its0 == 0 and not x0.any()
    with pytest.raises(IndefiniteError):
        conjugate_gradient(lambda v: -v, b)


def test_secular_matches_dense_and_power():
    adj, e, op = _setup(DegreeSequence.uniform_integers(200, 10, 14, seed=4))
    lam, v = _dense_top(adj)
    res = secular_solve(op, e, spectral_norm_H(op))
    ep = eigvec_from_resolvent(res, op)
    assert res.lam == pytest.approx(lam, rel=1e-9)
    assert np.linalg.norm(ep.vector - v) < 1e-6
    lo, hi = res.bracket
    assert lo < res.lam < hi
    # secular identity at the root
    x = np.linalg.solve(res.lam * np.eye(200) - (adj.to_dense() - np.outer(e, e)), e)
    assert e @ x == pytest.approx(1.0, abs=1e-8)


def test_secular_not_detached():
    adj, e, op = _setup(DegreeSequence.constant(100, 4))
    with pytest.raises(NotDetachedError):
        secular_solve(op, e, norm_H_estimate=float(e @ e) + 1)


def test_quadratic_forms_match_dense():
    adj, e, op = _setup(DegreeSequence.uniform_integers(100, 5, 9, seed=6))
    H = adj.to_dense() - np.outer(e, e)
    q = quadratic_forms(op, e, 4)
    for k in range(5):
        assert q[k] == pytest.approx(e @ np.linalg.matrix_power(H, k) @ e, rel=1e-10, abs=1e-9)
    with pytest.raises(InvalidInput):
        quadratic_forms(op, e, -1)


def test_truncation_depth():
    assert truncation_depth(1000) == 6
    assert truncation_depth(2000) == 7
    assert truncation_depth(3) == 1


@pytest.mark.parametrize("seed", range(5))
def test_expansion_gap_below_tail_bound(seed):
    adj, e, op = _setup(DegreeSequence.constant(1000, 30), seed)
    ep = power_iteration_top(adj, tol=1e-12)
    diag = expansion_diagnostics(op, e, ep)
    assert diag.L == 6
    assert diag.gap <= diag.tail_bound
    assert diag.ratio_norm < 1
    assert diag.partial_sums[-1] == pytest.approx(diag.partial_sum)
    assert len(diag.qforms) == diag.L + 1


def test_expansion_refuses_without_gap():
    adj, e, op = _setup(DegreeSequence.constant(100, 4))
    ep = power_iteration_top(adj)
    with pytest.raises(NotDetachedError):
        expansion_diagnostics(op, e, ep, norm_H=ep.value * 2)


def test_fixed_point():
    # x = 3 + 2/x has root 1 + 2 = 3.5615...
    x = fixed_point_solve([3.0, 2.0], (1.0, 10.0))
    assert x == pytest.approx((3 + math.sqrt(17)) / 2, rel=1e-12)
    with pytest.raises(InvalidInput):
        fixed_point_solve([3.0], (5.0, 10.0))


def test_oracle_equivalence_random_sequences():
    rng = np.random.default_rng(123)
    for t in range(8):
        seq = random_graphical(rng, int(rng.integers(20, 120)), low=6)
        adj = sampled(seq, seed=t)
        m = moments(seq)
        e = degree_vector_e(seq, m)
        op = CenteredOperator(adj, e)
        lam, v = _dense_top(adj)
        ep = power_iteration_top(adj, tol=1e-11, start=normalized_degree_vector(seq, m))
        res = secular_solve(op, e, spectral_norm_H(op))
        es = eigvec_from_resolvent(res, op)
        for got in (ep, es):
            assert got.value == pytest.approx(lam, rel=1e-7)
            assert np.linalg.norm(got.vector - (got.vector @ v) * v) < 1e-5
