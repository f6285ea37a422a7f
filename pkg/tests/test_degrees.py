import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chunglu.degrees import (DegreeSequence, Thresholds, check_assumptions, connection_probability,
                             degree_vector_e, grg_probability, moments, normalized_degree_vector,
                             offending_pair, read_degree_file)
from chunglu.errors import InvalidInput, InvalidParameter


def test_small_moments(small_seq):
    m = moments(small_seq)
    assert (m.m1, m.m2, m.m3, m.m4) == (10.0, 26.0, 70.0, 194.0)
    assert m.m_inf == 3 and m.m_0 == 2 and m.n == 4
    assert m.rank_one_eigenvalue == pytest.approx(2.6)
    assert m.graphical


def test_constant_rank_one():
    m = moments(DegreeSequence.constant(10_000, 40))
    assert m.rank_one_eigenvalue == 40.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 10_000), min_size=1, max_size=200))
def test_moments_match_direct_sums(values):
    d = np.array(values, dtype=float)
    m = moments(DegreeSequence(d))
    for k, got in zip(range(1, 5), (m.m1, m.m2, m.m3, m.m4)):
        exact = sum(int(v) ** k for v in values)
        assert got == pytest.approx(exact, rel=1e-15)
    assert m.m_inf == max(values) and m.m_0 == min(values)


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -2.0], [1.0, np.nan], [np.inf]])
def test_rejects_invalid(bad):
    with pytest.raises(InvalidInput):
        DegreeSequence(np.array(bad, dtype=float))


def test_warns_non_integer():
    with pytest.warns(UserWarning):
        DegreeSequence(np.array([1.5, 2.0]))


def test_input_is_frozen():
    seq = DegreeSequence(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        seq.d[0] = 5


def test_probabilities(small_seq):
    m = moments(small_seq)
    assert connection_probability(0, 2, small_seq, m) == pytest.approx(0.6)
    assert connection_probability(2, 3, small_seq, m) == pytest.approx(0.9)
    assert grg_probability(2, 3, small_seq, m) == pytest.approx(9 / 19)
    with pytest.raises(IndexError):
        connection_probability(0, 4, small_seq, m)


def test_offending_pair():
    bad = DegreeSequence(np.array([3.0, 4.0, 5.0]))
    assert offending_pair(bad, moments(bad)) == (1, 2)
    seq = DegreeSequence(np.array([2.0, 2.0, 3.0, 3.0]))
    assert offending_pair(seq, moments(seq)) is None


def test_degree_vectors(small_seq):
    m = moments(small_seq)
    e = degree_vector_e(small_seq, m)
    # e e^T is the matrix of connection probabilities
    assert np.allclose(np.outer(e, e), np.outer(small_seq.d, small_seq.d) / m.m1)
    et = normalized_degree_vector(small_seq, m)
    assert np.linalg.norm(et) == pytest.approx(1.0)


def test_assumption_verdicts():
    rep = check_assumptions(DegreeSequence.constant(10_000, 40), 2.1)
    assert rep.d1_upper_verdict == "pass" and rep.d2_verdict == "pass"
    assert rep.d1_lower_ratio == pytest.approx(math.log(10_000) ** 4.2 / 40)
    rep = check_assumptions(DegreeSequence(np.array([1.0] * 99 + [50.0])), 2.1, Thresholds())
    assert rep.d2_verdict == "fail" and rep.d1_upper_verdict == "fail"
    with pytest.raises(InvalidParameter):
        check_assumptions(DegreeSequence.constant(10, 2), 2.0)


def test_uniform_integers_reproducible_and_in_range():
    a = DegreeSequence.uniform_integers(5000, 30, 60, seed=1)
    b = DegreeSequence.uniform_integers(5000, 30, 60, seed=1)
    assert np.array_equal(a.d, b.d)
    assert a.d.min() == 30 and a.d.max() == 60
    counts = np.bincount(a.d.astype(int))[30:61]
    assert counts.min() > 100
    with pytest.raises(InvalidInput):
        DegreeSequence.uniform_integers(10, 5, 4, seed=0)


def test_read_degree_file(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# header\n2\n2\n\n3  # note\n3\n")
    assert list(read_degree_file(p).d) == [2, 2, 3, 3]
    p.write_text("2\nx\n")
    with pytest.raises(InvalidInput):
        read_degree_file(p)
