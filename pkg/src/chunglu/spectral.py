"""Principal eigenpair of a sampled adjacency matrix, two independent ways.

``A = H + e e^T`` with ``H = A - E[A]`` centred.  The top eigenpair is found
either by power iteration on ``A`` or as the root above ``||H||`` of the
secular equation

    f(lam) = <e, (lam I - H)^{-1} e> = 1,

whose resolvent vector ``(lam I - H)^{-1} e`` is parallel to the eigenvector.
Everything is matrix-free: ``H`` is applied as ``A x - e <e, x>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError, InvalidInput, NotDetachedError
from .rng import uniform_pair
from .sampler import SparseAdjacency, matvec

# below this size a dense eigendecomposition is cheaper than Lanczos
_DENSE_NORM_MAX_N = 20


@dataclass
class Eigenpair:
    value: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Representative with non-negative entry sum."""
    return -v if v.sum() < 0 else v


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def power_iteration_top(adj: SparseAdjacency, tol: float = 1e-8, max_iter: int = 10_000,
                        start=None, shift: float = 0.0, random_start_seed: int | None = None) -> Eigenpair:
    """Top eigenpair by power iteration with Rayleigh-quotient eigenvalue.

    Stops when ``||A v - lam v|| <= tol * |lam|``.  ``start`` defaults to the
    normalised all-ones vector unless ``random_start_seed`` is given; the
    experiment harness passes the normalised degree vector.  A positive
    ``shift`` iterates with ``A + shift I`` (needed when ``-lam_1`` is also an
    eigenvalue, e.g. bipartite graphs); it does not change the result.
    """
    n = adj.n
    if n == 0:
        raise InvalidInput("empty matrix")
    if start is not None:
        v = np.asarray(start, dtype=np.float64).copy()
    elif random_start_seed is not None:
        u, _ = uniform_pair(random_start_seed, 0, np.arange(n), 0)
        v = u - 0.25
    else:
        v = np.ones(n)
    if v.shape != (n,):
        raise InvalidInput(f"start vector has shape {v.shape}, expected ({n},)")
    v = _unit(v)
    lam = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = matvec(adj, v)
        if not w.any():
            raise ConvergenceError("no principal direction: A v = 0", best=v, iterations=it)
        lam = float(v @ w)
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= tol * abs(lam):
            return Eigenpair(lam, fix_sign(v), residual, it)
        w += shift * v
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps (residual {residual:.3g})",
        best=Eigenpair(lam, fix_sign(v), residual, max_iter), iterations=max_iter, residual=residual,
    )


@dataclass
class CenteredOperator:
    """``H = A - e e^T`` applied without forming it."""

    adjacency: SparseAdjacency
    e: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=np.float64)
        if self.e.shape != (self.adjacency.n,):
            raise InvalidInput("degree vector length does not match the graph")

    @property
    def n(self) -> int:
        return self.adjacency.n

    def __matmul__(self, x):
        return apply_centered(self, x)


def apply_centered(op: CenteredOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = matvec(op.adjacency, x)
    y -= op.e * float(op.e @ x)
    return y


def spectral_norm_H(op: CenteredOperator, tol: float = 1e-6, max_iter: int = 200, seed: int = 0x5EED) -> float:
    """``||H||`` as the square root of the top eigenvalue of ``H^2``.

    ``H`` has eigenvalues near both ends of its roughly symmetric spectrum, so
    iterating ``H`` itself would oscillate; we iterate ``H`` applied twice.
    Plain power steps stall on the clustered bulk edge (hundreds of steps for
    1e-4 accuracy), so the iteration is Krylov-accelerated with ARPACK's
    implicitly restarted Lanczos from a fixed pseudo-random start, which keeps
    the result reproducible.  ``tol`` is the relative accuracy asked of the
    eigenvalue of ``H^2``; failing to reach it in ``max_iter`` restarts raises
    :class:`ConvergenceError`.
    """
    n = op.n
    u, _ = uniform_pair(seed, 0, np.arange(n), 0)
    v0 = _unit(u - 0.5)
    if n <= _DENSE_NORM_MAX_N:
        H = op.adjacency.to_dense() - np.outer(op.e, op.e)
        return float(np.max(np.abs(np.linalg.eigvalsh(H)))) if n else 0.0
    if np.linalg.norm(apply_centered(op, v0)) == 0.0:
        # a generic start in the kernel means H vanishes
        return 0.0
    H2 = LinearOperator((n, n), matvec=lambda x: apply_centered(op, apply_centered(op, np.ravel(x))), dtype=np.float64)
    try:
        vals = eigsh(H2, k=1, which="LA", v0=v0, tol=tol, maxiter=max_iter, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        best = math.sqrt(max(float(exc.eigenvalues[0]), 0.0)) if len(exc.eigenvalues) else None
        raise ConvergenceError("spectral norm iteration did not converge", best=best, iterations=max_iter) from None
    return math.sqrt(max(float(vals[0]), 0.0))


class IndefiniteError(ArithmeticError):
    """Conjugate gradients met a direction of non-positive curvature."""


def conjugate_gradient(apply, b: np.ndarray, x0=None, rtol: float = 1e-10, max_iter: int | None = None):
    """Solve ``M x = b`` for symmetric positive definite ``M`` given as a callable.

    Returns ``(x, iterations)``.  Raises :class:`IndefiniteError` if a search
    direction has ``p^T M p <= 0`` and :class:`ConvergenceError` if the relative
    residual stays above ``rtol``.
    """
    n = b.size
    max_iter = 10 * n + 100 if max_iter is None else max_iter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    p = r.copy()
    rr = float(r @ r)
    for it in range(max_iter + 1):
        if math.sqrt(rr) <= rtol * bnorm:
            return x, it
        Mp = apply(p)
        curv = float(p @ Mp)
        if curv <= 0.0:
            raise IndefiniteError(f"non-positive curvature {curv:.3g} at step {it}")
        alpha = rr / curv
        x += alpha * p
        r -= alpha * Mp
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise ConvergenceError(f"CG did not reach rtol {rtol:g} in {max_iter} steps", best=x,
                           iterations=max_iter, residual=math.sqrt(rr) / bnorm)


@dataclass
class SecularSolveResult:
    lam: float
    resolvent_vector: np.ndarray = field(repr=False)
    bracket: tuple[float, float]
    newton_steps: int
    bisection_steps: int
    residual: float
    inner_iterations: int = 0


def secular_solve(op: CenteredOperator, e=None, norm_H_estimate: float | None = None,
                  tol: float = 1e-9, max_steps: int = 200, inner_rtol: float = 1e-10,
                  delta: float = 1e-3) -> SecularSolveResult:
    """Root of ``<e, (lam I - H)^{-1} e> = 1`` above the spectrum of ``H``.

    ``f`` is decreasing and convex there; Newton is applied to ``1/f``, which
    is nearly linear in ``lam`` when ``lam`` dominates ``||H||`` (exactly
    linear when ``H = 0``).  A step that leaves the current bracket is
    replaced by bisection, and the bracket shrinks at every evaluation since
    the sign of ``f - 1`` tells on which side of the root ``lam`` lies.  Stops
    once ``|<e, x> - 1| <= tol``.
    """
    e = op.e if e is None else np.asarray(e, dtype=np.float64)
    ee = float(e @ e)
    h = spectral_norm_H(op) if norm_H_estimate is None else float(norm_H_estimate)
    if not ee > h:
        raise NotDetachedError(
            f"<e,e> = {ee:.6g} does not exceed ||H|| ~ {h:.6g}; eigenvalue not detached"
        )
    lo = h * (1 + delta)
    # upper end of the Weyl interval, padded in case the norm estimate is low
    hi = ee + h * (1 + delta)
    bracket = (lo, hi)

    def resolvent(lam, x0):
        return conjugate_gradient(lambda x: lam * x - apply_centered(op, x), e, x0=x0, rtol=inner_rtol)

    x, inner = resolvent(hi, None)
    f = float(e @ x)
    if f > 1.0:
        raise NotDetachedError(f"f(hi) = {f:.6g} >= 1 at hi = {hi:.6g}; bracket does not straddle the root")
    lam = hi
    hi_x = x
    newton = bisect = 0
    for _ in range(max_steps):
        if abs(f - 1.0) <= tol:
            return SecularSolveResult(lam, x, bracket, newton, bisect, abs(f - 1.0), inner)
        fprime = -float(x @ x)
        # Newton on g = 1/f - 1, g' = -f'/f^2
        cand = lam - (1.0 / f - 1.0) * f * f / (-fprime)
        if lo < cand < hi:
            lam_next = cand
            newton += 1
        else:
            lam_next = 0.5 * (lo + hi)
            bisect += 1
        try:
            x_next, k = resolvent(lam_next, hi_x)
            inner += k
            f_next = float(e @ x_next)
        except IndefiniteError:
            # lam_next is inside the spectrum of H: the root lies above it
            lo = lam_next
            lam, x, f = hi, hi_x, float(e @ hi_x)
            continue
        lam, x, f = lam_next, x_next, f_next
        if f > 1.0:
            lo = lam
        else:
            hi, hi_x = lam, x
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    if abs(f - 1.0) <= max(tol, 1e3 * np.finfo(float).eps):
        return SecularSolveResult(lam, x, bracket, newton, bisect, abs(f - 1.0), inner)
    raise ConvergenceError(f"secular solve stalled at lam = {lam:.12g}, |f - 1| = {abs(f - 1):.3g}",
                           best=lam, iterations=newton + bisect, residual=abs(f - 1.0))


def eigvec_from_resolvent(result: SecularSolveResult, op: CenteredOperator) -> Eigenpair:
    """Normalise the resolvent vector; residual is measured against ``A``."""
    v = fix_sign(_unit(result.resolvent_vector))
    residual = float(np.linalg.norm(matvec(op.adjacency, v) - result.lam * v))
    return Eigenpair(result.lam, v, residual, result.newton_steps + result.bisection_steps)


def quadratic_forms(op: CenteredOperator, e, K: int) -> np.ndarray:
    """``<e, H^k e>`` for ``k = 0..K`` by repeated application of ``H``."""
    if K < 0:
        raise InvalidInput("K must be non-negative")
    e = np.asarray(e, dtype=np.float64)
    out = np.empty(K + 1)
    w = e
    out[0] = float(e @ e)
    for k in range(1, K + 1):
        w = apply_centered(op, w)
        out[k] = float(e @ w)
    return out


@dataclass
class ExpansionDiagnostics:
    L: int
    qforms: np.ndarray = field(repr=False)
    partial_sum: float
    gap: float
    norm_H: float
    ratio_norm: float
    tail_bound: float

    @property
    def partial_sums(self) -> np.ndarray:
        """Partial sums up to each depth ``0..L`` at the converged eigenvalue."""
        lam = self.norm_H / self.ratio_norm if self.ratio_norm else np.nan
        return np.cumsum(self.qforms / lam ** np.arange(self.L + 1))


def truncation_depth(n: int) -> int:
    """``floor(ln n)``."""
    return int(math.floor(math.log(n)))


def expansion_diagnostics(op: CenteredOperator, e, eigen: Eigenpair, norm_H: float | None = None,
                          L: int | None = None) -> ExpansionDiagnostics:
    """Truncated Neumann series for the top eigenvalue and its error bound.

    The tail beyond depth ``L`` is bounded geometrically by
    ``<e,e> r^(L+1) / (1 - r)`` with ``r = ||H|| / lam``.
    """
    e = np.asarray(e, dtype=np.float64)
    h = spectral_norm_H(op) if norm_H is None else float(norm_H)
    lam = eigen.value
    ratio = h / lam
    if not ratio < 1.0:
        raise NotDetachedError(f"||H|| / lam = {ratio:.4g} >= 1: series expansion invalid")
    L = truncation_depth(op.n) if L is None else L
    q = quadratic_forms(op, e, L)
    partial = float(np.sum(q / lam ** np.arange(L + 1)))
    bound = float(q[0] * ratio ** (L + 1) / (1 - ratio))
    return ExpansionDiagnostics(L, q, partial, abs(lam - partial), h, ratio, bound)


def fixed_point_solve(coeffs, bracket: tuple[float, float], rtol: float = 1e-12, max_steps: int = 200) -> float:
    """Root of ``x = sum_k c_k x^{-k}`` inside ``bracket`` by safeguarded Newton."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size == 0 or not c[0] > 0:
        raise InvalidInput("leading coefficient must be positive")
    k = np.arange(c.size)

    def g(x):
        return x - float(np.sum(c * x ** -k)), 1.0 + float(np.sum(k * c * x ** (-k - 1.0)))

    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise InvalidInput(f"bad bracket {bracket}")
    glo, ghi = g(lo)[0], g(hi)[0]
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise InvalidInput(f"no sign change on [{lo}, {hi}]")
    rising = ghi > 0
    x = 0.5 * (lo + hi)
    for _ in range(max_steps):
        gx, dg = g(x)
        if gx == 0:
            return x
        if (gx > 0) == rising:
            hi = x
        else:
            lo = x
        cand = x - gx / dg if dg != 0 else math.nan
        nxt = cand if lo < cand < hi else 0.5 * (lo + hi)
        if abs(nxt - x) <= rtol * abs(nxt):
            return nxt
        x = nxt
    raise ConvergenceError("fixed-point solve did not converge", best=x)
