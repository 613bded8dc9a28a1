"""mpmath re-evaluation of margins, used to separate float noise from real violations.

The functions mirror the double-precision kernels at ``DPS`` significant
digits.  Inputs are converted from float exactly, so a margin computed here
is the exact-arithmetic margin of the same float instance up to ~1e-40.
"""

import mpmath as mp

DPS = 40
_ITERS = 200


def _ctx():
    return mp.workdps(DPS)


def h2(p):
    p = mp.mpf(p)
    if p <= 0 or p >= 1:
        return mp.mpf(0)
    return -(p * mp.log(p) + (1 - p) * mp.log1p(-p)) / mp.log(2)


def j(p):
    p = mp.mpf(p)
    return (mp.log1p(-p) - mp.log(p)) / mp.log(2)


def _log_bisect(fn, target):
    lo, hi = mp.mpf(-800), mp.log(mp.mpf(0.5))
    for _ in range(_ITERS):
        mid = (lo + hi) / 2
        if fn(mp.exp(mid)) < target:
            lo = mid
        else:
            hi = mid
    return mp.exp((lo + hi) / 2)


def h2_inv(y):
    y = mp.mpf(y)
    if y <= 0:
        return mp.mpf(0)
    if y >= 1:
        return mp.mpf(0.5)
    return _log_bisect(h2, y)


def big_l(u):
    u = mp.mpf(u)
    if u >= 0.5:
        return mp.inf
    return 2 * h2(u) / (1 - 2 * u)


def big_l_inv(z):
    z = mp.mpf(z)
    if z <= 0:
        return mp.mpf(0)
    if mp.isinf(z):
        return mp.mpf(0.5)
    return _log_bisect(big_l, z)


def eta(y):
    p = h2_inv(y)
    return (1 - 2 * p) * j(p)


def jl(z):
    if mp.isinf(z):
        return mp.mpf(0)
    return j(big_l_inv(z))


def phi(x, y):
    x, y = mp.mpf(x), mp.mpf(y)
    if h2(x) <= y:
        return mp.mpf(0)
    d = abs(1 - 2 * x)
    if d == 0:
        return eta(y)
    return eta(y) - d * jl(2 * y / d)


def sym_kl(u, w):
    u, w = mp.mpf(u), mp.mpf(w)
    if u == w:
        return mp.mpf(0)
    return (u - w) * (j(w) - j(u))


def kappa(u, w):
    u, w = mp.mpf(u), mp.mpf(w)
    d = abs(u - w)
    if d < mp.mpf("1e-9"):
        return mp.mpf(0)
    return sym_kl(u, w) / 2 - d * jl((h2(u) + h2(w)) / d)


def perspective(x, y):
    x = abs(mp.mpf(x))
    if x == 0:
        return mp.mpf(0)
    return x * jl(mp.mpf(y) / x)


def eta_guess(a, b):
    return eta(min(1 - h2(a) + mp.mpf(b), mp.mpf(1)))


def hel_natural(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return max((1 - a * a - b * b) / b, mp.mpf(0))


CANDIDATES = {
    "phi": phi,
    "eta-guess": eta_guess,
    "zero": lambda a, b: mp.mpf(0),
    "hellinger-zero": lambda a, b: mp.mpf(0),
    "hellinger-natural": hel_natural,
}


def has_candidate(name):
    return name in CANDIDATES


def psi_margin(name, weights, u, w):
    psi = CANDIDATES[name]
    with _ctx():
        p = [mp.mpf(x) for x in weights]
        u = [mp.mpf(x) for x in u]
        w = [mp.mpf(x) for x in w]
        lhs = mp.fsum(pi * sym_kl(ui, wi) for pi, ui, wi in zip(p, u, w)) / 2
        eu = mp.fsum(pi * ui for pi, ui in zip(p, u))
        ew = mp.fsum(pi * wi for pi, wi in zip(p, w))
        hu = mp.fsum(pi * h2(ui) for pi, ui in zip(p, u))
        hw = mp.fsum(pi * h2(wi) for pi, wi in zip(p, w))
        rhs = psi((eu + ew) / 2, (hu + hw) / 2) - psi(eu, hu) / 2 - psi(ew, hw) / 2
        return lhs - rhs


def _root(x):
    return mp.sqrt((1 - x) * (1 + x))


def psi_h_margin(name, weights, u, w):
    psi = CANDIDATES[name]
    with _ctx():
        p = [mp.mpf(x) for x in weights]
        u = [mp.mpf(x) for x in u]
        w = [mp.mpf(x) for x in w]
        lhs = mp.fsum(pi * (ui - wi) * (ui / _root(ui) - wi / _root(wi))
                      for pi, ui, wi in zip(p, u, w)) / 2
        eu = mp.fsum(pi * ui for pi, ui in zip(p, u))
        ew = mp.fsum(pi * wi for pi, wi in zip(p, w))
        ru = mp.fsum(pi * _root(ui) for pi, ui in zip(p, u))
        rw = mp.fsum(pi * _root(wi) for pi, wi in zip(p, w))
        rhs = psi((eu + ew) / 2, (ru + rw) / 2) - psi(eu, ru) / 2 - psi(ew, rw) / 2
        return lhs - rhs


def kappa_reflection_margin(u, w):
    with _ctx():
        return kappa(1 - mp.mpf(u), w) - kappa(u, w)


def kappa_midpoint_margin(a1, b1, a2, b2):
    with _ctx():
        def f(a, b):
            return kappa(h2_inv(a), h2_inv(b))

        a1, b1, a2, b2 = (mp.mpf(x) for x in (a1, b1, a2, b2))
        return f(a1, b1) / 2 + f(a2, b2) / 2 - f((a1 + a2) / 2, (b1 + b2) / 2)


def zeta_lower_bound(m_u, m_w, e_u, e_w):
    with _ctx():
        a, b = h2_inv(e_u), h2_inv(e_w)
        ebar = (mp.mpf(e_u) + mp.mpf(e_w)) / 2
        dm = abs(mp.mpf(m_u) - mp.mpf(m_w))
        return phi((1 - abs(a - b)) / 2, ebar) + sym_kl(a, b) / 2 - phi((1 - dm) / 2, ebar)


def conjecture5_margin(m_u, m_w, e_u, e_w):
    with _ctx():
        lb = zeta_lower_bound(m_u, m_w, e_u, e_w)
        m_u, m_w, e_u, e_w = (mp.mpf(x) for x in (m_u, m_w, e_u, e_w))
        rhs = phi((m_u + m_w) / 2, (e_u + e_w) / 2) - phi(m_u, e_u) / 2 - phi(m_w, e_w) / 2
        return lb - rhs
