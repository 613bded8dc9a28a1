"""Binary-entropy special functions with domain checks.

All entropies, divergences and ``j`` are in bits.  Natural logarithms only
enter through the flow clock: ``crossover(t) = (1 - e^{-2t}) / 2``.

Every function accepts a scalar or an array and returns the same kind.
"""

import math

import numpy as np

from . import kernels

LN2 = math.log(2.0)

#: Value of ``big_l`` at u = 1/2.  Code paths test for it with ``np.isinf``
#: rather than relying on comparisons against it.
L_AT_HALF = math.inf

# inputs this close outside [0, 1] are treated as rounding error and clamped
CLAMP_SLACK = 1e-15


def _out(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def as_probability(x, name="p", lo=0.0, hi=1.0):
    """Validate ``x`` as lying in [lo, hi]; clamp values within 1e-15 of an end."""
    a = np.asarray(x, dtype=np.float64)
    if np.isnan(a).any():
        raise ValueError(f"{name} contains NaN")
    if (a < lo - CLAMP_SLACK).any() or (a > hi + CLAMP_SLACK).any():
        raise ValueError(f"{name} must lie in [{lo}, {hi}]")
    return np.clip(a, lo, hi)


def crossover(t):
    """BSC crossover probability p_t = (1 - e^{-2t}) / 2 for flow time t >= 0."""
    t = np.asarray(t, dtype=np.float64)
    if np.isnan(t).any() or (t < 0).any():
        raise ValueError("flow time must be >= 0")
    return _out(-0.5 * np.expm1(-2.0 * t))


def correlation(t):
    """rho_t = e^{-2t}."""
    t = np.asarray(t, dtype=np.float64)
    if np.isnan(t).any() or (t < 0).any():
        raise ValueError("flow time must be >= 0")
    return _out(np.exp(-2.0 * t))


def h2(p):
    return _out(kernels.h2(as_probability(p)))


def h2_inv(y):
    """Inverse binary entropy onto [0, 1/2]."""
    return _out(kernels.h2_inv(as_probability(y, "y")))


def j(p):
    """log2((1 - p) / p); undefined at p in {0, 1}."""
    p = as_probability(p)
    if ((p <= 0.0) | (p >= 1.0)).any():
        raise ValueError("j is infinite at p = 0 and p = 1")
    return _out(kernels.j(p))


def d2(x, y):
    """Binary KL divergence D(x || y) in bits."""
    x = as_probability(x, "x")
    y = as_probability(y, "y")
    x, y = np.broadcast_arrays(x, y)
    same = x == y
    if (~same & ((y <= 0.0) | (y >= 1.0))).any():
        raise ValueError("d2(x || y) is infinite for y in {0, 1} and x != y")
    ys = np.where(same, 0.5, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x > 0.0, x * np.log(np.where(x > 0.0, x, 1.0) / ys), 0.0)
        b = np.where(
            x < 1.0, (1.0 - x) * np.log(np.where(x < 1.0, 1.0 - x, 1.0) / (1.0 - ys)), 0.0
        )
    return _out(np.where(same, 0.0, (a + b) / LN2))


def eta(y):
    """(1 - 2 h2_inv(y)) j(h2_inv(y)) on (0, 1]."""
    y = as_probability(y, "y")
    if (y <= 0.0).any():
        raise ValueError("eta requires y > 0")
    return _out(kernels.eta(y))


def big_l(u):
    """2 h2(u) / (1 - 2u) on [0, 1/2], with the L_AT_HALF sentinel at 1/2."""
    u = as_probability(u, "u", 0.0, 0.5)
    return _out(kernels.big_l(u))


def big_l_inv(z):
    """Inverse of big_l on [0, inf]; big_l_inv(inf) = 1/2."""
    z = np.asarray(z, dtype=np.float64)
    if np.isnan(z).any() or (z < 0).any():
        raise ValueError("big_l_inv requires z >= 0")
    return _out(kernels.big_l_inv(z))


def binary_conv(a, b):
    """a * b = a(1 - b) + (1 - a) b."""
    a = as_probability(a, "a")
    b = as_probability(b, "b")
    return _out(a * (1.0 - b) + (1.0 - a) * b)
