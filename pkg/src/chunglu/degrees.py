"""Expected-degree sequences, their power sums, and edge probabilities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidParameter
from .rng import uniform_pair

# reserved replica id for streams that generate inputs rather than graphs
DEGREE_STREAM = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class DegreeSequence:
    """Expected degrees ``d`` of ``n`` vertices (0-based internally)."""

    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64).ravel()
        if d.size == 0:
            raise InvalidInput("degree sequence is empty")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise InvalidInput("degrees must be finite and positive")
        if np.any(d != np.round(d)):
            warnings.warn("non-integer degrees; treating them as real weights", stacklevel=3)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return int(self.d.size)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"DegreeSequence(n={self.n}, min={self.d.min():g}, max={self.d.max():g})"

    @classmethod
    def constant(cls, n: int, degree: float) -> "DegreeSequence":
        if n < 1:
            raise InvalidInput("n must be at least 1")
        return cls(np.full(n, float(degree)))

    @classmethod
    def uniform_integers(cls, n: int, low: int, high: int, seed: int) -> "DegreeSequence":
        """``n`` i.i.d. integers uniform on ``[low, high]``, drawn from ``seed``.

        Uses the same counter-based stream as the samplers, on a replica id
        reserved for inputs, so the sequence is reproducible from the seed.
        """
        if n < 1:
            raise InvalidInput("n must be at least 1")
        if not 0 < low <= high:
            raise InvalidInput(f"need 0 < low <= high, got [{low}, {high}]")
        u, _ = uniform_pair(seed, DEGREE_STREAM, np.arange(n), 0)
        d = low + np.floor(u * (high - low + 1))
        return cls(np.minimum(d, high))


@dataclass(frozen=True)
class DegreeMoments:
    m1: float
    m2: float
    m3: float
    m4: float
    m_inf: float
    m_0: float
    kappa: float
    n: int

    @property
    def rank_one_eigenvalue(self) -> float:
        """Top eigenvalue of the mean adjacency, ``m2/m1``."""
        return self.m2 / self.m1

    @property
    def graphical(self) -> bool:
        return self.m_inf ** 2 <= self.m1


def _power_sum(d: np.ndarray, k: int) -> float:
    # fsum is exactly rounded, so power sums keep full relative accuracy at any n
    return math.fsum(d ** k)


def moments(seq: DegreeSequence) -> DegreeMoments:
    d = seq.d
    m1 = _power_sum(d, 1)
    m_inf = float(d.max())
    return DegreeMoments(
        m1=m1,
        m2=_power_sum(d, 2),
        m3=_power_sum(d, 3),
        m4=_power_sum(d, 4),
        m_inf=m_inf,
        m_0=float(d.min()),
        kappa=seq.n * m_inf / m1,
        n=seq.n,
    )


def _check_index(seq: DegreeSequence, *idx: int) -> None:
    for i in idx:
        if not 0 <= i < seq.n:
            raise IndexError(f"vertex index {i} out of range [0, {seq.n})")


def connection_probability(i: int, j: int, seq: DegreeSequence, mom: DegreeMoments) -> float:
    """Chung-Lu edge probability ``d_i d_j / m1``.

    Not clipped: values above 1 signal a non-graphical sequence.
    """
    _check_index(seq, i, j)
    return float(seq.d[i] * seq.d[j] / mom.m1)


def grg_probability(i: int, j: int, seq: DegreeSequence, mom: DegreeMoments) -> float:
    """Generalized-random-graph probability ``d_i d_j / (m1 + d_i d_j)``."""
    _check_index(seq, i, j)
    w = seq.d[i] * seq.d[j]
    return float(w / (mom.m1 + w))


def offending_pair(seq: DegreeSequence, mom: DegreeMoments) -> tuple[int, int] | None:
    """A pair with probability above 1, or None when the sequence is graphical.

    Prefers the two largest-degree distinct vertices (the largest off-diagonal
    probability); falls back to the top vertex's self-pair.
    """
    if mom.graphical:
        return None
    order = np.argsort(-seq.d, kind="stable")
    if seq.n >= 2:
        a, b = sorted(int(x) for x in order[:2])
        if seq.d[a] * seq.d[b] > mom.m1:
            return a, b
    top = int(order[0])
    return top, top


def degree_vector_e(seq: DegreeSequence, mom: DegreeMoments) -> np.ndarray:
    """``e = d / sqrt(m1)``, so that ``E[A] = e e^T``."""
    return seq.d / math.sqrt(mom.m1)


def normalized_degree_vector(seq: DegreeSequence, mom: DegreeMoments) -> np.ndarray:
    """Unit vector along the degrees, ``d / sqrt(m2)``."""
    return seq.d / math.sqrt(mom.m2)


@dataclass(frozen=True)
class Thresholds:
    """Finite-n surrogates for the asymptotic assumptions."""

    d1_lower_marginal_factor: float = 100.0
    d1_upper_fraction: float = 0.8
    d2_max_ratio: float = 10.0


@dataclass(frozen=True)
class AssumptionReport:
    xi: float
    d1_lower_ratio: float
    d1_upper_ratio: float
    d2_ratio: float
    graphical: bool
    d1_lower_verdict: str
    d1_upper_verdict: str
    d2_verdict: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_assumptions(seq: DegreeSequence, xi: float, thresholds: Thresholds = Thresholds()) -> AssumptionReport:
    """Connectivity/sparsity (D1) and bounded-inhomogeneity (D2) diagnostics.

    ``d1_lower_ratio = (ln n)^(2 xi) / m_inf`` passes when at most 1 and is
    marginal up to ``d1_lower_marginal_factor``; ``d1_upper_ratio = m_inf/sqrt(n)``
    passes up to ``d1_upper_fraction``; ``d2_ratio = m_inf/m_0`` passes up to
    ``d2_max_ratio``.  Verdicts never raise.
    """
    if not xi > 2:
        raise InvalidParameter(f"xi must exceed 2, got {xi}")
    mom = moments(seq)
    n = seq.n
    # log 1 = 0 would make the lower ratio vanish; clamp so it stays positive
    lower = max(math.log(n), 1e-300) ** (2 * xi) / mom.m_inf
    upper = mom.m_inf / math.sqrt(n)
    d2 = mom.m_inf / mom.m_0
    if lower <= 1:
        lv = "pass"
    elif lower <= thresholds.d1_lower_marginal_factor:
        lv = "marginal"
    else:
        lv = "fail"
    return AssumptionReport(
        xi=xi,
        d1_lower_ratio=lower,
        d1_upper_ratio=upper,
        d2_ratio=d2,
        graphical=mom.graphical,
        d1_lower_verdict=lv,
        d1_upper_verdict="pass" if upper <= thresholds.d1_upper_fraction else "fail",
        d2_verdict="pass" if d2 <= thresholds.d2_max_ratio else "fail",
    )


def read_degree_file(path) -> DegreeSequence:
    """One degree per line; blank lines and ``#`` comments are ignored."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise InvalidInput(f"{path}:{lineno}: not a number: {text!r}") from None
    return DegreeSequence(np.array(values))
