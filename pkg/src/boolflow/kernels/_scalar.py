"""Scalar special functions written against ``math`` only.

Everything here is valid nopython numba code; ``maybe_njit`` compiles it
unless numba is disabled, in which case it runs as ordinary Python.  No argument validation happens at
this level: callers in :mod:`boolflow.scalar` own the domain checks.
"""

import math

from .._accel import maybe_njit

LN2 = math.log(2.0)

# H2^-1 and L^-1 are solved in s = log(p) on the bracket [LOG_LO, log(1/2)].
# The vectorised backend bisects: 72 halvings of the width-737 bracket leave
# a relative width below 2e-19.  The scalar solver below runs Newton on the
# log-residual instead (nearly linear in s) and falls back to bisection
# whenever a step leaves the bracket.
LOG_LO = math.log(1e-320)
LOG_HALF = math.log(0.5)
BISECT_ITERS = 72
_MAX_STEPS = 200
_STEP_TOL = 1e-16


@maybe_njit
def h2(p):
    """Binary entropy in bits with 0 log 0 = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p)) / LN2


@maybe_njit
def j(p):
    """log2((1-p)/p), the derivative of h2."""
    if p <= 0.0:
        return math.inf
    if p >= 1.0:
        return -math.inf
    if 0.25 < p < 0.75:
        # 1 - 2p is exact here, so the atanh form has no cancellation near 1/2
        return 2.0 * math.atanh(1.0 - 2.0 * p) / LN2
    return (math.log1p(-p) - math.log(p)) / LN2


@maybe_njit
def h2_inv(y):
    """Inverse of h2 on [0, 1/2]: safeguarded Newton on log h2(e^s) = log y."""
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return 0.5
    ly = math.log(y)
    lo = LOG_LO
    hi = LOG_HALF
    s = math.log(y / (2.0 - math.log2(y)))
    if not lo < s < hi:
        s = 0.5 * (lo + hi)
    for _ in range(_MAX_STEPS):
        p = math.exp(s)
        hp = h2(p)
        f = math.log(hp) - ly
        if f < 0.0:
            lo = s
        elif f > 0.0:
            hi = s
        else:
            return p
        d = p * j(p) / hp
        nxt = s - f / d if d > 0.0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - s) <= _STEP_TOL * max(1.0, abs(s)) or hi - lo <= _STEP_TOL * max(1.0, abs(lo)):
            return math.exp(nxt)
        s = nxt
    return math.exp(s)


@maybe_njit
def big_l(u):
    """2 h2(u) / (1 - 2u) on [0, 1/2); +inf at u >= 1/2."""
    if u >= 0.5:
        return math.inf
    return 2.0 * h2(u) / (1.0 - 2.0 * u)


@maybe_njit
def _dlog_big_l(u):
    """d log big_l(u) / d log u."""
    t = 1.0 - 2.0 * u
    hu = h2(u)
    return u * (j(u) * t + 2.0 * hu) / (t * hu)


@maybe_njit
def big_l_inv(z):
    """Inverse of big_l: u in [0, 1/2) with big_l(u) = z; inf maps to 1/2."""
    if z <= 0.0:
        return 0.0
    if math.isinf(z):
        return 0.5
    lz = math.log(z)
    lo = LOG_LO
    hi = LOG_HALF
    if z < 1.0:
        s = math.log(z / (2.0 * (2.0 - math.log2(z))))
    else:
        s = math.log(0.5 - 0.5 / (1.0 + z))
    if not lo < s < hi:
        s = 0.5 * (lo + hi)
    for _ in range(_MAX_STEPS):
        u = math.exp(s)
        f = math.log(big_l(u)) - lz
        if f < 0.0:
            lo = s
        elif f > 0.0:
            hi = s
        else:
            return u
        d = _dlog_big_l(u)
        nxt = s - f / d if d > 0.0 and math.isfinite(d) else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - s) <= _STEP_TOL * max(1.0, abs(s)) or hi - lo <= _STEP_TOL * max(1.0, abs(lo)):
            return math.exp(nxt)
        s = nxt
    return math.exp(s)


@maybe_njit
def eta_from_p(p):
    return (1.0 - 2.0 * p) * j(p)


@maybe_njit
def eta(y):
    """(1 - 2 h2_inv(y)) j(h2_inv(y)); +inf at y = 0."""
    return eta_from_p(h2_inv(y))


@maybe_njit
def jl(z):
    """j(big_l_inv(z)), with jl(0) = +inf and jl(inf) = 0."""
    if math.isinf(z):
        return 0.0
    return j(big_l_inv(z))


@maybe_njit
def phi(x, y):
    """Closed-form phi(x, y); zero whenever h2(x) <= y.

    Uses phi(1/2, y) - phi(x, y) = |1 - 2x| j(L^-1(2y / |1 - 2x|)), which is
    the same quantity as eta(y) - (y/r) eta(r) with r = h2(L^-1(...)).
    """
    if h2(x) <= y:
        return 0.0
    d = abs(1.0 - 2.0 * x)
    if d == 0.0:
        return eta(y)
    return eta(y) - d * jl(2.0 * y / d)


@maybe_njit
def sym_kl(u, w):
    """(u - w)(j(w) - j(u)) = D2(u||w) + D2(w||u); zero on the diagonal."""
    if u == w:
        return 0.0
    return (u - w) * (j(w) - j(u))


@maybe_njit
def kappa(u, w):
    d = abs(u - w)
    if d < 1e-9:
        return 0.0
    return 0.5 * sym_kl(u, w) - d * jl((h2(u) + h2(w)) / d)


@maybe_njit
def perspective(x, y):
    """|x| j(L^-1(y / |x|)); the x = 0 value is the limit 0."""
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    return ax * jl(y / ax)


@maybe_njit
def root1m2(d):
    """sqrt(1 - d^2) evaluated as sqrt((1 - d)(1 + d))."""
    return math.sqrt((1.0 - d) * (1.0 + d))


@maybe_njit
def hel_slope(d):
    """d / sqrt(1 - d^2)."""
    return d / root1m2(d)
