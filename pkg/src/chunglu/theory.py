"""Closed-form predictions for the principal eigenvalue and eigenvector.

All double sums over vertex pairs collapse because ``p_ij = d_i d_j / m1`` is
rank one, e.g. ``sum_ij p_ij^3 = m3^2 / m1^3``.  Brute-force versions are
kept for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeMoments, DegreeSequence, moments, offending_pair
from .errors import InvalidParameter, NonGraphicalError


@dataclass
class PredictionReport:
    lambda1_rank_one: float
    lambda1_mean: float
    sigma1_sq_exact: float
    sigma1_sq_asym: float
    lambda_z_scale: float
    v1_mean: np.ndarray = field(repr=False)
    s1_sq_exact: np.ndarray = field(repr=False)
    s1_sq_asym: np.ndarray = field(repr=False)
    v1_z_scale: np.ndarray = field(repr=False)
    # the multiplier (m2/m1)/s1(i) as printed in the componentwise CLT; kept
    # only to show that it does not standardise
    v1_z_scale_literal: np.ndarray = field(repr=False)
    deloc_bound: float
    er_corollary_scale: float | None
    alignment_predicted: float
    xi: float

    _VECTORS = ("v1_mean", "s1_sq_exact", "s1_sq_asym", "v1_z_scale", "v1_z_scale_literal")

    def to_dict(self, coordinates=None) -> dict:
        """Flat JSON-ready dict; vectors restricted to ``coordinates`` if given."""
        out = {}
        for name, value in self.__dict__.items():
            if name in self._VECTORS:
                vec = value if coordinates is None else value[np.asarray(coordinates, dtype=int)]
                out[name] = [float(x) for x in vec]
            else:
                out[name] = None if value is None else float(value)
        if coordinates is not None:
            out["coordinates"] = [int(c) for c in coordinates]
        return out


def sigma1_sq_bruteforce(seq: DegreeSequence, mom: DegreeMoments) -> float:
    """``sum_{i,j} p^3 (1 - p)`` over ordered pairs, diagonal included."""
    p = np.outer(seq.d, seq.d) / mom.m1
    return math.fsum((p ** 3 * (1 - p)).ravel())


def s1_sq_bruteforce(seq: DegreeSequence, mom: DegreeMoments) -> np.ndarray:
    """``sum_j d_j^2 p_ij (1 - p_ij)`` for every ``i``."""
    p = np.outer(seq.d, seq.d) / mom.m1
    return np.array([math.fsum(row) for row in seq.d ** 2 * p * (1 - p)])


def er_corollary_scale(n: int, p: float) -> float:
    """``n sqrt(p / (1 - p))``, the eigenvector-coordinate multiplier for G(n, p)."""
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    return n * math.sqrt(p / (1.0 - p))


def delocalization_bound(mom: DegreeMoments, n: int, xi: float, C: float = 1.0) -> float:
    """``C (ln n)^xi / sqrt(n m_inf)``."""
    if not xi > 2:
        raise InvalidParameter(f"xi must exceed 2, got {xi}")
    return C * math.log(n) ** xi / math.sqrt(n * mom.m_inf)


def predict(seq: DegreeSequence, mom: DegreeMoments | None = None, xi: float = 2.1) -> PredictionReport:
    if not xi > 2:
        raise InvalidParameter(f"xi must exceed 2, got {xi}")
    mom = moments(seq) if mom is None else mom
    pair = offending_pair(seq, mom)
    if pair is not None:
        raise NonGraphicalError(pair, seq.d[pair[0]] * seq.d[pair[1]] / mom.m1)
    m1, m2, m3, m4 = mom.m1, mom.m2, mom.m3, mom.m4
    d = seq.d
    rank_one = m2 / m1
    sig_asym = m3 ** 2 / m1 ** 3
    sig_exact = sig_asym - m4 ** 2 / m1 ** 4
    s1_asym = d * m3 / m1
    s1_exact = s1_asym - d ** 2 * m4 / m1 ** 2
    constant = bool(np.all(d == d[0]))
    return PredictionReport(
        lambda1_rank_one=rank_one,
        lambda1_mean=rank_one + m1 * m3 / m2 ** 2,
        sigma1_sq_exact=sig_exact,
        sigma1_sq_asym=sig_asym,
        lambda_z_scale=rank_one / math.sqrt(sig_exact) if sig_exact > 0 else math.inf,
        v1_mean=d / math.sqrt(m2),
        s1_sq_exact=s1_exact,
        s1_sq_asym=s1_asym,
        v1_z_scale=np.sqrt(m2 ** 3 / (d * m3 * m1)),
        v1_z_scale_literal=rank_one / np.sqrt(s1_exact),
        deloc_bound=delocalization_bound(mom, seq.n, xi),
        er_corollary_scale=er_corollary_scale(seq.n, d[0] / seq.n) if constant and d[0] < seq.n else None,
        # <v1, e~>^-2 - 1 ~ ||He||^2 / (lam^2 <e,e>) ~ m1^2 m3 / m2^3
        alignment_predicted=1.0 / math.sqrt(1.0 + m1 ** 2 * m3 / m2 ** 3),
        xi=xi,
    )
