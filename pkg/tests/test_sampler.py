import numpy as np
import pytest
import scipy.sparse as sp

from chunglu.degrees import DegreeSequence, moments
from chunglu.errors import InvalidInput, InvalidParameter, NonGraphicalError
from chunglu.sampler import (CHUNG_LU, Model, SampleSeed, SparseAdjacency, expected_edge_count,
                             fast_indicators, matvec, naive_indicators, read_edge_list, row_sums,
                             sample_fast, sample_fast_edges, sample_naive, write_edge_list)


def _pmatrix(seq, model, self_loops):
    m = moments(seq)
    P = model.prob(seq.d[:, None], seq.d[None, :], m.m1)
    P = np.array(np.broadcast_to(P, (seq.n, seq.n)), dtype=float)
    if not self_loops:
        np.fill_diagonal(P, 0.0)
    return P


def test_model_parse_roundtrip():
    assert Model.parse("chung_lu") == CHUNG_LU
    er = Model.parse("erdos_renyi:0.004")
    assert er.kind == "erdos_renyi" and er.p == 0.004
    assert Model.parse(str(er)) == er
    with pytest.raises(InvalidParameter):
        Model.parse("erdos_renyi:1.5")
    with pytest.raises(InvalidParameter):
        Model.parse("bogus")


def test_from_edges_builds_symmetric_csr():
    adj = SparseAdjacency.from_edges(4, np.array([0, 1, 2]), np.array([1, 1, 3]), True)
    dense = adj.to_dense()
    assert np.array_equal(dense, dense.T)
    assert dense[1, 1] == 1 and dense[0, 1] == 1 and dense[2, 3] == 1
    assert adj.edge_count == 3
    assert list(row_sums(adj)) == [1, 2, 1, 1]
    with pytest.raises(InvalidInput):
        SparseAdjacency.from_edges(3, np.array([0, 1]), np.array([1, 0]), True)
    with pytest.raises(InvalidInput):
        SparseAdjacency.from_edges(3, np.array([1]), np.array([1]), False)


def test_matvec_matches_dense(small_seq):
    adj = sample_fast(DegreeSequence.constant(200, 10), moments(DegreeSequence.constant(200, 10)), True,
                      SampleSeed(3))
    x = np.linspace(-1, 1, 200)
    assert np.allclose(matvec(adj, x), adj.to_dense() @ x)
    assert isinstance(adj.csr, sp.csr_matrix)
    with pytest.raises(InvalidInput):
        matvec(adj, np.ones(5))


@pytest.mark.parametrize("sampler", [sample_fast, sample_naive])
def test_deterministic_and_seed_sensitive(sampler):
    seq = DegreeSequence.uniform_integers(300, 5, 15, seed=2)
    m = moments(seq)
    kw = dict(self_loops=True, seed=SampleSeed(9, 4))
    a, b = sampler(seq, m, **kw), sampler(seq, m, **kw)
    assert a == b
    c = sampler(seq, m, self_loops=True, seed=SampleSeed(9, 5))
    assert a != c


def test_fast_batch_matches_single_replicas():
    seq = DegreeSequence.uniform_integers(150, 3, 12, seed=5)
    m = moments(seq)
    reps = [0, 3, 7]
    pos, i, j = sample_fast_edges(seq, m, True, 21, reps)
    for k, r in enumerate(reps):
        single = sample_fast(seq, m, True, SampleSeed(21, r))
        batch = SparseAdjacency.from_edges(seq.n, i[pos == k], j[pos == k], True)
        assert single == batch


def test_no_self_loops_option():
    seq = DegreeSequence.constant(100, 10)
    adj = sample_fast(seq, moments(seq), False, SampleSeed(1))
    assert np.all(adj.to_dense().diagonal() == 0)
    assert adj.edge_count > 0


def test_nongraphical_rejected():
    seq = DegreeSequence(np.array([3.0, 4.0, 5.0]))
    with pytest.raises(NonGraphicalError) as info:
        sample_fast(seq, moments(seq))
    assert "(2, 3)" in str(info.value)
    with pytest.raises(NonGraphicalError):
        sample_naive(seq, moments(seq))


@pytest.mark.parametrize("model", [CHUNG_LU, Model("grg"), Model("erdos_renyi", 0.3)])
@pytest.mark.parametrize("self_loops", [True, False])
def test_pair_frequencies(model, self_loops):
    # 2e4 replicas per sampler; each pair's hit count within 4.5 sd of p_ij
    seq = DegreeSequence(np.array([3.0, 4.0, 4.0, 5.0, 5.0, 5.0]))
    m = moments(seq)
    P = _pmatrix(seq, model, self_loops)
    R = 20_000
    for draw in (naive_indicators, fast_indicators):
        i, j, hits = draw(seq, m, model, self_loops, 77, np.arange(R))
        freq = hits.mean(axis=0)
        p = P[i, j]
        sd = np.sqrt(np.maximum(p * (1 - p), 1e-300) / R)
        z = np.where(p > 0, (freq - p) / sd, 0.0)
        assert np.all(np.abs(z) < 4.5), (draw.__name__, z)
        if not self_loops:
            assert np.all(i != j)


def test_expected_edge_count_against_brute_force():
    seq = DegreeSequence.uniform_integers(60, 2, 7, seed=3)
    m = moments(seq)
    for model in (CHUNG_LU, Model("grg")):
        for loops in (True, False):
            P = _pmatrix(seq, model, loops)
            iu = np.triu_indices(seq.n, 0 if loops else 1)
            mean, var = expected_edge_count(seq, m, model, loops)
            assert mean == pytest.approx(P[iu].sum(), rel=1e-12)
            assert var == pytest.approx((P[iu] * (1 - P[iu])).sum(), rel=1e-12)


def test_edge_count_within_four_sd_over_seeds():
    seq = DegreeSequence.constant(1000, 40)
    m = moments(seq)
    mean, var = expected_edge_count(seq, m)
    counts = np.array([sample_fast(seq, m, True, SampleSeed(s)).edge_count for s in range(20)])
    assert np.all(np.abs(counts - mean) < 4 * np.sqrt(var))


def test_edge_list_roundtrip(tmp_path):
    seq = DegreeSequence.constant(50, 6)
    adj = sample_fast(seq, moments(seq), True, SampleSeed(2))
    path = tmp_path / "g.txt"
    write_edge_list(adj, path)
    first = path.read_text().splitlines()[0]
    assert first == "n 50 self_loops 1"
    assert read_edge_list(path) == adj
    path.write_text("nodes 3\n1 2\n")
    with pytest.raises(InvalidInput):
        read_edge_list(path)


def test_fast_sampler_scales_linearly():
    seq = DegreeSequence.constant(100_000, 20)
    adj = sample_fast(seq, moments(seq), True, SampleSeed(0))
    mean, var = expected_edge_count(seq, moments(seq))
    assert abs(adj.edge_count - mean) < 5 * np.sqrt(var)
