"""Pure-numpy implementations of the hot kernels.

Each function mirrors one in ``_numba`` and takes 1-D float64 arrays (the
broadcasting wrappers live in ``kernels/__init__``).  The bisections run the
same 72 halvings on log p as the scalar kernels, vectorised across the batch.
"""

import numpy as np

from ._scalar import BISECT_ITERS, LN2, LOG_HALF, LOG_LO


def h2(p):
    p = np.asarray(p, dtype=np.float64)
    inside = (p > 0.0) & (p < 1.0)
    q = np.where(inside, p, 0.5)
    out = -(q * np.log(q) + (1.0 - q) * np.log1p(-q)) / LN2
    return np.where(inside, out, 0.0)


def j(p):
    p = np.asarray(p, dtype=np.float64)
    q = np.clip(p, 1e-300, 1.0 - 2.0**-53)
    mid = (q > 0.25) & (q < 0.75)
    with np.errstate(divide="ignore"):
        near_half = 2.0 * np.arctanh(np.where(mid, 1.0 - 2.0 * q, 0.0)) / LN2
        tails = (np.log1p(-q) - np.log(q)) / LN2
    out = np.where(mid, near_half, tails)
    out = np.where(p <= 0.0, np.inf, out)
    return np.where(p >= 1.0, -np.inf, out)


def big_l(u):
    u = np.asarray(u, dtype=np.float64)
    below = u < 0.5
    safe = np.where(below, u, 0.0)
    return np.where(below, 2.0 * h2(safe) / (1.0 - 2.0 * safe), np.inf)


def _log_bisect(target, fn):
    lo = np.full(target.shape, LOG_LO)
    hi = np.full(target.shape, LOG_HALF)
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        below = fn(np.exp(mid)) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(0.5 * (lo + hi))


def h2_inv(y):
    y = np.asarray(y, dtype=np.float64)
    out = _log_bisect(y, h2)
    out = np.where(y <= 0.0, 0.0, out)
    return np.where(y >= 1.0, 0.5, out)


def big_l_inv(z):
    z = np.asarray(z, dtype=np.float64)
    out = _log_bisect(z, big_l)
    out = np.where(z <= 0.0, 0.0, out)
    return np.where(np.isinf(z), 0.5, out)


def eta(y):
    p = h2_inv(y)
    return (1.0 - 2.0 * p) * j(p)


def jl(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(np.isinf(z), 0.0, j(big_l_inv(z)))


def phi(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = np.abs(1.0 - 2.0 * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(d > 0.0, 2.0 * y / d, np.inf)
        tail = np.where(d > 0.0, d * jl(z), 0.0)
    out = eta(y) - tail
    return np.where(h2(x) <= y, 0.0, out)


def sym_kl(u, w):
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    same = u == w
    with np.errstate(invalid="ignore"):
        out = (u - w) * (j(w) - j(u))
    return np.where(same, 0.0, out)


def kappa(u, w):
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    d = np.abs(u - w)
    close = d < 1e-9
    dd = np.where(close, 1.0, d)
    out = 0.5 * sym_kl(u, w) - dd * jl((h2(u) + h2(w)) / dd)
    return np.where(close, 0.0, out)


def perspective(x, y):
    ax = np.abs(np.asarray(x, dtype=np.float64))
    zero = ax == 0.0
    safe = np.where(zero, 1.0, ax)
    return np.where(zero, 0.0, safe * jl(y / safe))


def smooth(tables, p):
    """Apply the product BSC(p) kernel to each row of a (B, 2^n) array."""
    v = np.array(tables, dtype=np.float64, copy=True)
    b, size = v.shape
    n = size.bit_length() - 1
    for i in range(n):
        block = v.reshape(b, size >> (i + 1), 2, 1 << i)
        lo = block[:, :, 0, :].copy()
        hi = block[:, :, 1, :]
        block[:, :, 0, :] = (1.0 - p) * lo + p * hi
        block[:, :, 1, :] = p * lo + (1.0 - p) * hi
    return v


def _edge_sum(v, f):
    b, size = v.shape
    n = size.bit_length() - 1
    fv = f(v)
    total = np.zeros(b)
    for i in range(n):
        vb = v.reshape(b, size >> (i + 1), 2, 1 << i)
        fb = fv.reshape(b, size >> (i + 1), 2, 1 << i)
        dv = vb[:, :, 0, :] - vb[:, :, 1, :]
        df = fb[:, :, 0, :] - fb[:, :, 1, :]
        total += (dv * df).reshape(b, -1).sum(axis=1)
    return total / size


def kl_edge_sum(v):
    """(1/2^n) sum over edges of (v_x - v_y)(j(v_y) - j(v_x)), per row."""
    return _edge_sum(np.asarray(v, dtype=np.float64), lambda a: -j(a))


def hel_edge_sum(d):
    """(1/2^n) sum over edges of (d_x - d_y)(s(d_x) - s(d_y)), s(d) = d/sqrt(1-d^2)."""
    return _edge_sum(
        np.asarray(d, dtype=np.float64),
        lambda a: a / np.sqrt((1.0 - a) * (1.0 + a)),
    )
