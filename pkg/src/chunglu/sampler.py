"""Independent-edge samplers for Chung-Lu, GRG and Erdos-Renyi graphs.

Two samplers share one randomness source (:mod:`chunglu.rng`):

* :func:`sample_naive` visits every unordered pair and compares one uniform
  against its probability.  O(n^2); the reference.
* :func:`sample_fast` walks each row over columns sorted by decreasing degree,
  jumping ahead geometrically under the current probability bound and
  thinning candidates by ``p_ij / bound``.  Expected work is proportional to
  the number of edges plus rejections.

Rows are processed in lockstep: one vectorised step advances every row that
is still active, and the uniforms for row ``i`` at step ``t`` come from the
counter ``(i, t, replica)``.  The output therefore depends only on the seed,
never on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .degrees import DegreeMoments, DegreeSequence, offending_pair
from .errors import InvalidInput, InvalidParameter, NonGraphicalError
from .rng import uniform_pair

# high bit of the step word separates the naive sampler's stream from the fast one
_NAIVE_TAG = 1 << 31


@dataclass(frozen=True)
class SampleSeed:
    master_seed: int
    replica_index: int = 0


@dataclass(frozen=True)
class Model:
    """Edge-probability model: ``chung_lu``, ``grg`` or ``erdos_renyi`` with ``p``."""

    kind: str = "chung_lu"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("chung_lu", "grg", "erdos_renyi"):
            raise InvalidParameter(f"unknown model {self.kind!r}")
        if self.kind == "erdos_renyi":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise InvalidParameter(f"erdos_renyi needs 0 <= p <= 1, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "Model":
        """``chung_lu``, ``grg``, or ``erdos_renyi:<p>``."""
        kind, _, arg = text.partition(":")
        return cls(kind, float(arg) if arg else None)

    def __str__(self):
        return f"erdos_renyi:{self.p!r}" if self.kind == "erdos_renyi" else self.kind

    def prob(self, di, dj, m1: float):
        """Vectorised edge probability for degree arrays ``di``, ``dj``."""
        if self.kind == "chung_lu":
            return di * dj / m1
        if self.kind == "grg":
            w = di * dj
            return w / (m1 + w)
        return np.broadcast_to(np.float64(self.p), np.broadcast(di, dj).shape)


CHUNG_LU = Model("chung_lu")


@dataclass(frozen=True)
class SparseAdjacency:
    """Symmetric 0/1 matrix in CSR form, both (i, j) and (j, i) stored.

    A self-loop is a single diagonal entry equal to 1.
    """

    n: int
    row_offsets: np.ndarray = field(repr=False)
    column_indices: np.ndarray = field(repr=False)
    self_loops_allowed: bool
    edge_count: int

    @classmethod
    def from_edges(cls, n: int, i, j, self_loops_allowed: bool) -> "SparseAdjacency":
        """Build from unordered edges ``{i[k], j[k]}``; duplicates are an error."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= n):
            raise InvalidInput("edge endpoint out of range")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        if not self_loops_allowed and np.any(lo == hi):
            raise InvalidInput("self-loop present but self-loops are not allowed")
        key = np.unique(lo * n + hi)
        if key.size != lo.size:
            raise InvalidInput("duplicate edge")
        lo, hi = key // n, key % n
        off = lo != hi
        rows = np.concatenate([lo, hi[off]])
        cols = np.concatenate([hi, lo[off]])
        order = np.argsort(rows * n + cols, kind="stable")
        rows, cols = rows[order], cols[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
        offsets.setflags(write=False)
        cols = cols.astype(np.int64)
        cols.setflags(write=False)
        return cls(n, offsets, cols, bool(self_loops_allowed), int(key.size))

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(self.column_indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.column_indices, self.row_offsets), shape=(self.n, self.n))

    def upper_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Each unordered edge once, as ``(i, j)`` with ``i <= j``, sorted."""
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        keep = rows <= self.column_indices
        return rows[keep], self.column_indices[keep]

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def __eq__(self, other):
        if not isinstance(other, SparseAdjacency):
            return NotImplemented
        return (
            self.n == other.n
            and self.self_loops_allowed == other.self_loops_allowed
            and self.edge_count == other.edge_count
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.column_indices, other.column_indices)
        )

    __hash__ = None


def _require_graphical(seq: DegreeSequence, mom: DegreeMoments, model: Model) -> None:
    if model.kind != "chung_lu":
        return
    pair = offending_pair(seq, mom)
    if pair is not None:
        i, j = pair
        raise NonGraphicalError(pair, seq.d[i] * seq.d[j] / mom.m1)


def naive_indicators(seq, mom, model, self_loops, master_seed, replicas):
    """Edge indicators of the naive sampler for many replicas at once.

    Returns ``(i, j, hits)`` where ``(i[k], j[k])`` enumerates the upper
    triangle (diagonal included when ``self_loops``) and ``hits`` has shape
    ``(len(replicas), len(i))``.  Memory is O(R n^2): for small graphs.
    """
    _require_graphical(seq, mom, model)
    n = seq.n
    i, j = np.triu_indices(n, 0 if self_loops else 1)
    p = model.prob(seq.d[i], seq.d[j], mom.m1)
    reps = np.asarray(replicas, dtype=np.uint64)[:, None]
    u, _ = uniform_pair(master_seed, reps, i[None, :], j[None, :] | _NAIVE_TAG)
    return i, j, u < p


def sample_naive(seq: DegreeSequence, mom: DegreeMoments, model: Model = CHUNG_LU,
                 self_loops: bool = True, seed: SampleSeed = SampleSeed(0)) -> SparseAdjacency:
    _require_graphical(seq, mom, model)
    n = seq.n
    d = seq.d
    ei, ej = [], []
    for row in range(n):
        start = row if self_loops else row + 1
        cols = np.arange(start, n)
        if cols.size == 0:
            continue
        u, _ = uniform_pair(seed.master_seed, seed.replica_index, row, cols | _NAIVE_TAG)
        hit = cols[u < model.prob(d[row], d[cols], mom.m1)]
        ei.append(np.full(hit.size, row))
        ej.append(hit)
    ei = np.concatenate(ei) if ei else np.empty(0, np.int64)
    ej = np.concatenate(ej) if ej else np.empty(0, np.int64)
    return SparseAdjacency.from_edges(n, ei, ej, self_loops)


def _skip_walk(ds, m1, model, self_loops, master_seed, replica, pos, key):
    """Lockstep geometric skipping over rows ``pos`` of the degree-sorted matrix.

    ``ds`` are the degrees sorted in decreasing order, ``pos`` the row
    positions to walk (one stream each), ``key`` the vertex id that keys each
    stream's counter and ``replica`` the replica id per stream (or a scalar).
    Returns ``(stream, column_position)`` for every accepted pair.
    """
    n = ds.size
    pos = np.asarray(pos, dtype=np.int64)
    key = np.asarray(key, dtype=np.uint64)
    replica = np.broadcast_to(np.asarray(replica, dtype=np.uint64), pos.shape)
    col = pos if self_loops else pos + 1
    live = np.flatnonzero(col < n)
    col = col[live]
    bound = model.prob(ds[pos[live]], ds[col], m1).astype(np.float64)
    out_s, out_c = [], []
    step = 0
    while live.size:
        u, v = uniform_pair(master_seed, replica[live], key[live], step)
        with np.errstate(divide="ignore"):
            jump = np.floor(np.log(u) / np.log1p(-np.minimum(bound, 1.0)))
        jump = np.where(bound >= 1.0, 0.0, jump)
        col = col + np.minimum(jump, n).astype(np.int64)
        inside = col < n
        live, col, bound, v = live[inside], col[inside], bound[inside], v[inside]
        q = model.prob(ds[pos[live]], ds[col], m1)
        accept = v * bound < q
        out_s.append(live[accept])
        out_c.append(col[accept])
        go_on = (q > 0) & (col + 1 < n)
        live, col, bound = live[go_on], col[go_on] + 1, q[go_on]
        step += 1
    if not out_s:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(out_s), np.concatenate(out_c)


def _sort_order(seq: DegreeSequence) -> np.ndarray:
    return np.argsort(-seq.d, kind="stable")


def sample_fast(seq: DegreeSequence, mom: DegreeMoments, self_loops: bool = True,
                seed: SampleSeed = SampleSeed(0), model: Model = CHUNG_LU) -> SparseAdjacency:
    """Skip-and-thin sampler; same distribution as :func:`sample_naive`."""
    _require_graphical(seq, mom, model)
    order = _sort_order(seq)
    ds = seq.d[order]
    n = seq.n
    stream, colpos = _skip_walk(ds, mom.m1, model, self_loops, seed.master_seed,
                                seed.replica_index, np.arange(n), order)
    return SparseAdjacency.from_edges(n, order[stream], order[colpos], self_loops)


def sample_fast_edges(seq: DegreeSequence, mom: DegreeMoments, self_loops: bool, master_seed: int,
                      replicas, model: Model = CHUNG_LU) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edges of :func:`sample_fast` for many replicas in one lockstep pass.

    Returns ``(replica_position, i, j)`` arrays; replica ``replicas[k]`` owns
    the edges with ``replica_position == k``, and they are exactly the edges
    ``sample_fast`` draws for that replica.
    """
    _require_graphical(seq, mom, model)
    n = seq.n
    order = _sort_order(seq)
    ds = seq.d[order]
    replicas = np.asarray(replicas, dtype=np.uint64).ravel()
    pos = np.tile(np.arange(n), replicas.size)
    stream, colpos = _skip_walk(ds, mom.m1, model, self_loops, master_seed,
                                np.repeat(replicas, n), pos, order[pos])
    return stream // n, order[pos[stream]], order[colpos]


def fast_indicators(seq, mom, model, self_loops, master_seed, replicas):
    """Same layout as :func:`naive_indicators`, produced by the skip sampler."""
    n = seq.n
    rep, a, b = sample_fast_edges(seq, mom, self_loops, master_seed, replicas, model)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    i, j = np.triu_indices(n, 0 if self_loops else 1)
    pair_index = np.full((n, n), -1, dtype=np.int64)
    pair_index[i, j] = np.arange(i.size)
    hits = np.zeros((np.size(replicas), i.size), dtype=bool)
    hits[rep, pair_index[lo, hi]] = True
    return i, j, hits


def row_sums(adj: SparseAdjacency) -> np.ndarray:
    """Realised degrees; a self-loop counts once."""
    return np.diff(adj.row_offsets)


def matvec(adj: SparseAdjacency, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (adj.n,):
        raise InvalidInput(f"vector has shape {x.shape}, expected ({adj.n},)")
    return adj.csr @ x


def expected_edge_count(seq: DegreeSequence, mom: DegreeMoments, model: Model = CHUNG_LU,
                        self_loops: bool = True) -> tuple[float, float]:
    """Mean and variance of the number of unordered edges (Poisson-binomial)."""
    d = seq.d
    if model.kind == "chung_lu":
        # rank-one sums: sum_ij p = m1, sum_ij p^2 = m2^2/m1^2
        p_all, p2_all = mom.m1, mom.m2 ** 2 / mom.m1 ** 2
        pd = d * d / mom.m1
        s_off, s2_off = (p_all - pd.sum()) / 2, (p2_all - (pd ** 2).sum()) / 2
        mean = s_off + (pd.sum() if self_loops else 0.0)
        var = s_off - s2_off + ((pd - pd ** 2).sum() if self_loops else 0.0)
        return float(mean), float(var)
    mean = var = 0.0
    for row in range(seq.n):
        cols = np.arange(row if self_loops else row + 1, seq.n)
        p = model.prob(d[row], d[cols], mom.m1)
        mean += float(p.sum())
        var += float((p * (1 - p)).sum())
    return mean, var


def write_edge_list(adj: SparseAdjacency, path) -> None:
    i, j = adj.upper_edges()
    with open(path, "w") as fh:
        fh.write(f"n {adj.n} self_loops {int(adj.self_loops_allowed)}\n")
        for a, b in zip((i + 1).tolist(), (j + 1).tolist()):
            fh.write(f"{a} {b}\n")


def read_edge_list(path) -> SparseAdjacency:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "n" or header[2] != "self_loops":
            raise InvalidInput(f"{path}: bad header {' '.join(header)!r}")
        n, loops = int(header[1]), header[3] == "1"
        pairs = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if pairs.size == 0:
        pairs = np.empty((0, 2), dtype=np.int64)
    if pairs.shape[1] != 2:
        raise InvalidInput(f"{path}: expected two columns")
    return SparseAdjacency.from_edges(n, pairs[:, 0] - 1, pairs[:, 1] - 1, loops)
