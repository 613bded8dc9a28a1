"""Reference computations that share no code with the package.

Posterior fields are built from the dense 2^n x 2^n channel matrix and the
joint law of (F, Y_t); scalar inverses come from mpmath root finding.
"""

import math
from functools import reduce

import mpmath as mp
import numpy as np


def bsc_matrix(n, p):
    """Dense transition matrix of n independent BSC(p) bits in vertex order."""
    one = np.array([[1.0 - p, p], [p, 1.0 - p]])
    # vertex index bit i is coordinate i+1, so coordinate 1 is the fastest axis
    return reduce(np.kron, [one] * n)


def crossover(t):
    return 0.5 * (1.0 - math.exp(-2.0 * t))


def posterior(table, t):
    table = np.asarray(table, dtype=float)
    n = table.size.bit_length() - 1
    return bsc_matrix(n, crossover(t)) @ table


def _h(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.where((p <= 0) | (p >= 1), 0.0, out)


def joint_conditional_entropy(table, t):
    """H(F | Y_t) from the full joint of (F, Y_t) over 2 * 2^n outcomes."""
    table = np.asarray(table, dtype=float)
    n = table.size.bit_length() - 1
    k = bsc_matrix(n, crossover(t))
    px = np.full(table.size, 2.0**-n)
    # joint[f, y] = sum_x P(x) P(f | x) P(y | x)
    joint = np.stack([(px * table) @ k, (px * (1 - table)) @ k])
    py = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, -joint * np.log2(joint / py), 0.0)
    return float(terms.sum())


def mutual_information(table, t):
    return float(_h(np.mean(table))) - joint_conditional_entropy(table, t)


def hellinger_r(table, t):
    d = 1.0 - 2.0 * posterior(table, t)
    return float(np.mean(np.sqrt(1.0 - d * d)))


def central_difference(f, t, h=1e-5):
    return (f(t + h) - f(t - h)) / (2.0 * h)


# --------------------------------------------------------------------------
# mpmath scalar references


def mp_h2(p):
    p = mp.mpf(p)
    if p in (0, 1):
        return mp.mpf(0)
    return -(p * mp.log(p, 2) + (1 - p) * mp.log(1 - p, 2))


def _log_bisect(f, target, lo=-800.0, hi=math.log(0.5), iters=300):
    """Root of increasing f(e^s) = target on [lo, hi], at working precision."""
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if f(mp.exp(mid)) < target:
            lo = mid
        else:
            hi = mid
    return mp.exp((lo + hi) / 2)


def mp_h2_inv(y):
    y = mp.mpf(y)
    if y <= 0:
        return mp.mpf(0)
    if y >= 1:
        return mp.mpf(0.5)
    return _log_bisect(mp_h2, y)


def mp_big_l(u):
    u = mp.mpf(u)
    return 2 * mp_h2(u) / (1 - 2 * u)


def mp_big_l_inv(z):
    z = mp.mpf(z)
    if z == 0:
        return mp.mpf(0)
    return _log_bisect(lambda u: mp_big_l(u) if u < 0.5 else mp.inf, z)


def mp_j(p):
    p = mp.mpf(p)
    return mp.log((1 - p) / p, 2)


def mp_eta(y):
    a = mp_h2_inv(y)
    return (1 - 2 * a) * mp_j(a)
