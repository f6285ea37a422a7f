"""Counter-based random numbers keyed by (master seed, replica, row).

The generator is Philox4x32-10 (Salmon, Moraes, Dror, Shaw 2011), evaluated
on whole arrays of counters at once.  Every draw is a pure function of

    key     = (master_seed low 32 bits, master_seed high 32 bits)
    counter = (row, step, replica low 32 bits, replica high 32 bits)

so a row's stream does not depend on which other rows or replicas were
generated before it, or on which worker generated them.  Each Philox block
yields four 32-bit words; :func:`uniform_pair` turns them into two doubles
in the open interval (0, 1) with 53 bits of precision each.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
ROUNDS = 10


def philox4x32(counter, key, rounds: int = ROUNDS) -> np.ndarray:
    """Philox4x32 block function.

    ``counter`` is broadcastable to shape ``(..., 4)`` and ``key`` to
    ``(..., 2)``; words are unsigned 32-bit values.  Returns the four output
    words per block as ``uint64`` holding 32-bit values.
    """
    ctr = np.asarray(counter, dtype=np.uint64) & _MASK32
    k = np.asarray(key, dtype=np.uint64) & _MASK32
    c0, c1, c2, c3 = (ctr[..., i] for i in range(4))
    k0, k1 = k[..., 0], k[..., 1]
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack(np.broadcast_arrays(c0, c1, c2, c3), axis=-1)


def _key(master_seed: int) -> np.ndarray:
    s = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([s & 0xFFFFFFFF, s >> 32], dtype=np.uint64)


def uniform_pair(master_seed: int, replica, rows, step) -> tuple[np.ndarray, np.ndarray]:
    """Two independent U(0,1) arrays for counters ``(rows, step, replica)``.

    ``replica``, ``rows`` and ``step`` broadcast against each other.
    """
    rep = np.asarray(replica, dtype=np.uint64)
    rows = np.asarray(rows, dtype=np.uint64)
    step = np.asarray(step, dtype=np.uint64)
    rep, rows, step = np.broadcast_arrays(rep, rows, step)
    ctr = np.empty(rows.shape + (4,), dtype=np.uint64)
    ctr[..., 0] = rows
    ctr[..., 1] = step
    ctr[..., 2] = rep & _MASK32
    ctr[..., 3] = rep >> _SHIFT32
    w = philox4x32(ctr, _key(master_seed))
    a = (w[..., 0] << _SHIFT32) | w[..., 1]
    b = (w[..., 2] << _SHIFT32) | w[..., 3]
    # top 53 bits, offset by half a unit so neither 0 nor 1 occurs
    scale = 2.0 ** -53
    u = ((a >> np.uint64(11)).astype(np.float64) + 0.5) * scale
    v = ((b >> np.uint64(11)).astype(np.float64) + 0.5) * scale
    return u, v
