"""Entropy flow of a soft predicate under the BSC semigroup on {-1, 1}^n.

Vertex x maps to the integer ``sum_i [x_i = -1] 2^(i-1)`` (coordinate 1 is
the least significant bit).  A predicate table holds ``Pr(F = -1 | X = x)``
in that order.  With X uniform the backward channel equals the forward one,
so the posterior ``v_x(t) = Pr(F = -1 | Y_t = x)`` is the table smoothed by
the product BSC(p_t) kernel, applied one coordinate at a time.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from . import kernels
from .scalar import correlation, crossover

MAX_N = 20
DEFAULT_EPSILON = 1e-6
TRACE_COLUMNS = ("t", "p_t", "gamma", "dgamma", "mi", "margin")


def default_t_grid(points=20, lo=1e-3, hi=3.0):
    """Log-spaced flow times; the default spans rho_t from 0.998 down to 0.0025."""
    if points < 1:
        raise ValueError("t-grid needs at least one point")
    if points == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, points)


def _dimension(size):
    n = int(size).bit_length() - 1
    if size < 2 or (1 << n) != size:
        raise ValueError(f"table length {size} is not a power of two >= 2")
    if n > MAX_N:
        raise ValueError(f"n = {n} exceeds the supported maximum {MAX_N}")
    return n


@dataclass(frozen=True)
class SoftPredicate:
    """Randomised Boolean function: ``table[x] = Pr(F = -1 | X = x)``."""

    table: np.ndarray
    epsilon: float | None = None
    name: str = "custom"

    def __post_init__(self):
        t = np.array(self.table, dtype=np.float64).ravel()
        _dimension(t.size)
        if np.isnan(t).any() or (t <= 0.0).any() or (t >= 1.0).any():
            raise ValueError("predicate entries must lie strictly inside (0, 1)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n(self):
        return self.table.size.bit_length() - 1

    @property
    def mean(self):
        """Pr(F = -1) under uniform X."""
        return float(self.table.mean())


def soften(boolean_table, epsilon=DEFAULT_EPSILON, name="custom"):
    """Soft predicate with entries 1 - eps where f = -1 and eps where f = +1."""
    f = np.asarray(boolean_table, dtype=np.float64).ravel()
    _dimension(f.size)
    if not (0.0 < epsilon < 0.5):
        raise ValueError("epsilon must lie in (0, 1/2)")
    if not np.isin(f, (-1.0, 1.0)).all():
        raise ValueError("boolean table entries must be +1 or -1")
    return SoftPredicate(np.where(f < 0, 1.0 - epsilon, epsilon), epsilon, name)


# --------------------------------------------------------------------------
# built-in Boolean functions (tables of +-1 in vertex order)


def _popcount(n):
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)


def boolean_function(name, n):
    """Truth table of a named function: dictator, majority, parity or constant."""
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must lie in [1, {MAX_N}]")
    idx = np.arange(1 << n)
    if name == "dictator":
        minus = (idx & 1) == 1
    elif name == "majority":
        if n % 2 == 0:
            raise ValueError("majority needs odd n")
        minus = _popcount(n) > n // 2
    elif name == "parity":
        minus = _popcount(n) % 2 == 1
    elif name == "constant":
        minus = np.ones(idx.size, dtype=bool)
    else:
        raise ValueError(f"unknown function {name!r}")
    return np.where(minus, -1.0, 1.0)


BUILTIN_FUNCTIONS = ("dictator", "majority", "parity", "constant")


def named_predicate(name, n, epsilon=DEFAULT_EPSILON):
    return soften(boolean_function(name, n), epsilon, name=name)


def all_boolean_tables(n, start=0, stop=None):
    """Rows k in [start, stop) of the 2^(2^n) truth tables; bit x of k set means f(x) = -1."""
    size = 1 << n
    if size > 16:
        raise ValueError("exhaustive enumeration is limited to n <= 4")
    stop = (1 << size) if stop is None else stop
    k = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (k >> np.arange(size)) & 1
    return np.where(bits == 1, -1.0, 1.0)


def balanced_boolean_tables(n):
    """All truth tables with exactly half the vertices mapped to -1."""
    size = 1 << n
    if size > 16:
        raise ValueError("exhaustive enumeration is limited to n <= 4")
    rows = []
    for minus in combinations(range(size), size // 2):
        row = np.ones(size)
        row[list(minus)] = -1.0
        rows.append(row)
    return np.array(rows)


# --------------------------------------------------------------------------
# posterior field and flow quantities


@dataclass(frozen=True)
class PosteriorField:
    n: int
    t: float
    v: np.ndarray

    @property
    def mean(self):
        return float(self.v.mean())


def _check_time(t):
    t = float(t)
    if math.isnan(t) or t < 0.0:
        raise ValueError("flow time must be >= 0")
    return t


def posterior_field(p, t):
    t = _check_time(t)
    v = kernels.smooth(p.table[None, :], crossover(t))[0]
    return PosteriorField(p.n, t, v)


def advance(field, dt):
    """Run the flow on an existing field for a further time dt."""
    dt = _check_time(dt)
    v = kernels.smooth(field.v[None, :], crossover(dt))[0]
    return PosteriorField(field.n, field.t + dt, v)


def gamma(field):
    """H(F | Y_t) in bits: the vertex average of h2(v_x)."""
    return float(kernels.h2(field.v).mean())


def gamma_derivative(field):
    """Exact d gamma / dt as a sum of symmetrised KL terms over hypercube edges."""
    return float(kernels.kl_edge_sum(field.v[None, :])[0])


def mutual_information(p, t):
    return float(kernels.h2(p.mean)) - gamma(posterior_field(p, t))


def conjecture1_margin(p, t):
    """(1 - h2(p_t)) - I(F; Y_t); predicted nonnegative for hard Boolean F."""
    return 1.0 - float(kernels.h2(crossover(t))) - mutual_information(p, t)


def derivative_bound_margin(p, psi, t):
    """d gamma/dt - psi(Pr[F = -1], gamma(t))."""
    f = posterior_field(p, t)
    return gamma_derivative(f) - float(psi(p.mean, gamma(f)))


# --------------------------------------------------------------------------
# batched sweeps


@dataclass
class SweepResult:
    """Per-table, per-time arrays of shape (tables, times)."""

    times: np.ndarray
    means: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    mi: np.ndarray
    c1_margin: np.ndarray
    bound_margin: np.ndarray | None = None


def sweep(tables, times, psi=None):
    """Flow quantities for every row of ``tables`` (soft entries) at each time.

    ``psi`` is an optional vectorised candidate; when given, the
    derivative-bound margin ``dgamma - psi(mean, gamma)`` is included.
    """
    tables = np.ascontiguousarray(tables, dtype=np.float64)
    if tables.ndim != 2:
        raise ValueError("tables must be a 2-D array")
    _dimension(tables.shape[1])
    times = np.asarray(times, dtype=np.float64)
    means = tables.mean(axis=1)
    h_f = kernels.h2(means)
    shape = (tables.shape[0], times.size)
    g, dg = np.empty(shape), np.empty(shape)
    for k, t in enumerate(times):
        v = kernels.smooth(tables, crossover(_check_time(t)))
        g[:, k] = kernels.h2(v).mean(axis=1)
        dg[:, k] = kernels.kl_edge_sum(v)
    mi = h_f[:, None] - g
    c1 = (1.0 - kernels.h2(crossover(times)))[None, :] - mi
    bound = None
    if psi is not None:
        bound = dg - np.asarray(psi(np.broadcast_to(means[:, None], shape), g), dtype=float)
    return SweepResult(times, means, g, dg, mi, c1, bound)


def epsilon_sensitivity(boolean_table, times, epsilon=DEFAULT_EPSILON):
    """Largest change in (gamma, mi) when epsilon shrinks tenfold."""
    coarse = soften(boolean_table, epsilon).table
    fine = soften(boolean_table, epsilon / 10.0).table
    a = sweep(np.vstack([coarse, fine]), times)
    return {
        "epsilon": epsilon,
        "gamma": float(np.abs(a.gamma[0] - a.gamma[1]).max()),
        "mi": float(np.abs(a.mi[0] - a.mi[1]).max()),
    }


# --------------------------------------------------------------------------
# traces and file formats


@dataclass
class FlowTrace:
    times: np.ndarray
    p_t: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    mi: np.ndarray
    margin: np.ndarray
    margin_kind: str = "conjecture1"
    meta: dict = field(default_factory=dict)

    def rows(self):
        return zip(self.times, self.p_t, self.gamma, self.dgamma, self.mi, self.margin)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def flow_trace(p, times, psi=None):
    """Trace over a t-grid; the margin column is the derivative-bound margin
    when ``psi`` is given and the Conjecture-1 margin otherwise."""
    s = sweep(p.table[None, :], times, psi)
    margin, kind = (s.c1_margin[0], "conjecture1")
    if psi is not None:
        margin, kind = s.bound_margin[0], "derivative-bound"
    return FlowTrace(
        np.asarray(times, dtype=float), crossover(np.asarray(times, dtype=float)),
        s.gamma[0], s.dgamma[0], s.mi[0], margin, kind,
        {"n": p.n, "name": p.name, "epsilon": p.epsilon, "mean": p.mean},
    )


def parse_predicate(text, epsilon=DEFAULT_EPSILON):
    """Parse the predicate text format: n, then 2^n values in vertex order.

    A table made only of +1/-1 entries is a hard function and is softened
    with ``epsilon``; otherwise each entry must be a probability in (0, 1).
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty predicate file")
    try:
        n = int(lines[0])
        values = [float(x) for x in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed predicate file: {exc}") from None
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must lie in [1, {MAX_N}]")
    if len(values) != 1 << n:
        raise ValueError(f"expected {1 << n} entries for n = {n}, found {len(values)}")
    arr = np.array(values)
    if np.isin(arr, (-1.0, 1.0)).all():
        return soften(arr, epsilon)
    return SoftPredicate(arr)


def format_predicate(p):
    return "\n".join([str(p.n)] + [repr(float(x)) for x in p.table]) + "\n"


# --------------------------------------------------------------------------
# ODE lower bound


@dataclass(frozen=True)
class OdeBound:
    value: float
    status: str
    reach: float = math.inf

    @property
    def ok(self):
        return self.status == "ok"


def ode_lower_bound(gamma0, mean, psi, t, scan_points=64):
    """Lower bound g^-1(t) on gamma(t) with g(x) = int_{gamma0}^x du / psi(mean, u).

    Integration stops at the first zero of psi above gamma0 (at the latest
    h2(mean), where the zero region starts).  If g stays below t there, the
    status is "divergent" and the value is that zero, the largest level the
    bound can certify.
    """
    t = _check_time(t)
    gamma0 = float(gamma0)
    ceiling = float(kernels.h2(mean))
    if not 0.0 <= gamma0 <= ceiling:
        raise ValueError("gamma0 must lie in [0, h2(mean)]")
    if t == 0.0:
        return OdeBound(gamma0, "ok", 0.0)

    def rate(u):
        return float(psi(mean, u))

    # locate the first zero of psi on (gamma0, ceiling)
    top = ceiling
    grid = gamma0 + (ceiling - gamma0) * (1.0 - np.geomspace(1.0, 1e-12, scan_points))
    for u in grid[1:]:
        if u < ceiling and rate(u) <= 0.0:
            top = float(u)
            break
    if top <= gamma0 or rate(gamma0 + 0.5 * (top - gamma0)) <= 0.0:
        return OdeBound(gamma0, "divergent", 0.0)

    def integral(a, b):
        if b <= a:
            return 0.0
        # near the zero of psi the requested tolerance sits at the roundoff floor
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(lambda u: 1.0 / rate(u), a, b, epsabs=1e-12, epsrel=1e-11, limit=200)
        return val

    # the integrand blows up at top, so bracket the root from below,
    # accumulating g piecewise so no stretch is integrated twice
    lo, g_lo, hi = gamma0, 0.0, None
    gap = top - gamma0
    for k in range(1, 60):
        x = top - gap * 2.0**-k
        if x <= lo:
            continue
        g_x = g_lo + integral(lo, x)
        if g_x >= t:
            hi = x
            break
        lo, g_lo = x, g_x
    if hi is None:
        return OdeBound(top, "divergent", g_lo)
    root = brentq(lambda x: g_lo + integral(lo, x) - t, lo, hi,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return OdeBound(root, "ok", t)


def balanced_closed_form(gamma0, t):
    """h2(p_t * h2_inv(gamma0)), the balanced-case solution of the phi ODE."""
    a = float(kernels.h2_inv(gamma0))
    return float(kernels.h2(0.5 * (1.0 - correlation(t) * (1.0 - 2.0 * a))))
