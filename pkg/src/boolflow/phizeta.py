"""phi, the symmetric-slice zeta, kappa, the zeta lower bound, and a zeta oracle.

``zeta(m_u, m_w, e_u, e_w)`` is the infimum of ``E[(U - W)(j(W) - j(U))] / 2``
over pairs (U, W) in (0, 1)^2 with the four prescribed moments
``E U, E W, E h2(U), E h2(W)``.  The objective and the constraints are linear
in the law of (U, W), so :func:`zeta_oracle` treats it as a linear program
over atoms: an LP on a logit grid of candidate atoms, an SLSQP polish of the
support, and Nelder-Mead pricing of new atoms against multipliers read off
the polished support.  The returned value is attained by an explicit
feasible distribution, hence an upper bound on zeta; the multipliers give a
(pricing-limited) lower bound.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import expit

from . import kernels
from .kernels import scalar as ks
from .scalar import LN2, as_probability

FEAS_SLACK = 1e-12


def _out(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


# --------------------------------------------------------------------------
# closed forms


def solve_r(x, y):
    """Root r of r / (1 - 2 h2_inv(r)) = y / |1 - 2x|; r = 1 at x = 1/2."""
    x = as_probability(x, "x")
    y = as_probability(y, "y")
    if (y <= 0.0).any():
        raise ValueError("solve_r requires y > 0")
    d = np.abs(1.0 - 2.0 * x)
    with np.errstate(divide="ignore"):
        z = np.where(d > 0.0, 2.0 * y / np.where(d > 0.0, d, 1.0), np.inf)
    r = kernels.h2(kernels.big_l_inv(z))
    return _out(np.where(d > 0.0, r, 1.0))


def phi(x, y):
    """Candidate phi(x, y): 0 where h2(x) <= y, else eta(y) - (y/r) eta(r)."""
    x = as_probability(x, "x")
    y = as_probability(y, "y")
    x, y = np.broadcast_arrays(x, y)
    if ((y <= 0.0) & (kernels.h2(x) > 0.0)).any():
        raise ValueError("phi(x, 0) is undefined for interior x")
    return _out(kernels.phi(x, y))


def zeta_symmetric(m, e):
    """zeta(1 - m, m, e, e) = phi(1/2, e) - phi(m, e)."""
    m = as_probability(m, "m")
    e = as_probability(e, "e")
    if (e <= 0.0).any():
        raise ValueError("zeta_symmetric requires e > 0")
    if (kernels.h2(m) < e - FEAS_SLACK).any():
        raise ValueError("infeasible: h2(m) < e")
    return _out(kernels.phi(0.5, e) - kernels.phi(m, e))


def kappa(u, w):
    """Gap between the symmetrised KL objective and its perspective bound."""
    u = as_probability(u, "u")
    w = as_probability(w, "w")
    u, w = np.broadcast_arrays(u, w)
    edge = (u <= 0.0) | (u >= 1.0) | (w <= 0.0) | (w >= 1.0)
    if (edge & (u != w)).any():
        raise ValueError("kappa(u, w) with u != w needs u, w in (0, 1)")
    return _out(kernels.kappa(u, w))


@dataclass(frozen=True)
class ZetaQuery:
    m_u: float
    m_w: float
    e_u: float
    e_w: float

    def __post_init__(self):
        for name in ("m_u", "m_w", "e_u", "e_w"):
            v = float(as_probability(getattr(self, name), name))
            object.__setattr__(self, name, v)
        if self.e_u > ks.h2(self.m_u) + FEAS_SLACK or self.e_w > ks.h2(self.m_w) + FEAS_SLACK:
            raise ValueError(f"infeasible query {self.as_tuple()}: need h2(m) >= e")

    def as_tuple(self):
        return (self.m_u, self.m_w, self.e_u, self.e_w)

    def moments(self):
        return np.array([1.0, self.m_u, self.m_w, self.e_u, self.e_w])


def zeta_lower_bound(q, form="phi"):
    """Lower bound on zeta(q) valid under both kappa conjectures.

    ``form="phi"`` evaluates the three-term phi expression; ``form="kappa"``
    evaluates |m_u - m_w| j(L^-1((e_u + e_w)/|m_u - m_w|)) + kappa(a, b) with
    a, b = h2_inv(e_u), h2_inv(e_w).  The two agree on feasible queries.
    """
    if not isinstance(q, ZetaQuery):
        q = ZetaQuery(*q)
    if q.e_u <= 0.0 or q.e_w <= 0.0:
        raise ValueError("zeta_lower_bound requires e_u, e_w > 0")
    a = ks.h2_inv(q.e_u)
    b = ks.h2_inv(q.e_w)
    dm = abs(q.m_u - q.m_w)
    if form == "phi":
        ebar = 0.5 * (q.e_u + q.e_w)
        return (
            ks.phi(0.5 * (1.0 - abs(a - b)), ebar)
            + 0.5 * ks.sym_kl(a, b)
            - ks.phi(0.5 * (1.0 - dm), ebar)
        )
    if form == "kappa":
        return ks.perspective(dm, q.e_u + q.e_w) + ks.kappa(a, b)
    raise ValueError(f"unknown form {form!r}")


def zeta_lower_bound_batch(m_u, m_w, e_u, e_w, form="phi"):
    """Vectorised :func:`zeta_lower_bound` for arrays of feasible queries."""
    m_u, m_w, e_u, e_w = (as_probability(v, n) for v, n in
                          ((m_u, "m_u"), (m_w, "m_w"), (e_u, "e_u"), (e_w, "e_w")))
    m_u, m_w, e_u, e_w = np.broadcast_arrays(m_u, m_w, e_u, e_w)
    if ((e_u <= 0.0) | (e_w <= 0.0)).any():
        raise ValueError("zeta_lower_bound requires e_u, e_w > 0")
    if ((e_u > kernels.h2(m_u) + FEAS_SLACK) | (e_w > kernels.h2(m_w) + FEAS_SLACK)).any():
        raise ValueError("infeasible query: need h2(m) >= e")
    a = kernels.h2_inv(e_u)
    b = kernels.h2_inv(e_w)
    dm = np.abs(m_u - m_w)
    if form == "phi":
        ebar = 0.5 * (e_u + e_w)
        out = (kernels.phi(0.5 * (1.0 - np.abs(a - b)), ebar) + 0.5 * kernels.sym_kl(a, b)
               - kernels.phi(0.5 * (1.0 - dm), ebar))
    elif form == "kappa":
        out = kernels.perspective(dm, e_u + e_w) + kernels.kappa(a, b)
    else:
        raise ValueError(f"unknown form {form!r}")
    return _out(out)


# --------------------------------------------------------------------------
# oracle


@dataclass(frozen=True)
class AtomPair:
    p: float
    u: float
    w: float

    @property
    def is_corner(self):
        return (self.u, self.w) in ((0.0, 0.0), (1.0, 1.0))

    def cost(self):
        return 0.0 if self.is_corner else 0.5 * ks.sym_kl(self.u, self.w)


@dataclass
class OracleBudget:
    """Search budget for :func:`zeta_oracle`.

    ``grid`` logit points span ``[-logit_span, logit_span]`` per axis (plus a
    linear grid on [0.02, 0.98]); each round solves one LP, prices
    ``pricing_starts`` new atoms with Nelder-Mead and polishes the support.
    Restarts beyond the first jitter the grid with a seeded offset.
    """

    grid: int = 61
    logit_span: float = 30.0
    max_rounds: int = 6
    pricing_starts: int = 4
    pricing_iters: int = 300
    restarts: int = 1
    gap_tol: float = 1e-10
    seed: int = 0


@dataclass
class ZetaResult:
    value: float
    minimizer: list
    feasibility_residual: float
    restarts_used: int
    status: str = "optimal"
    dual_bound: float = -np.inf
    rounds: int = 0
    corner_weight: float = 0.0
    query: tuple = field(default=())

    @property
    def monotone_coupling(self):
        return not coupling_violations(self.minimizer)

    def to_dict(self):
        return {
            "status": self.status,
            "value": self.value,
            "dual_bound": self.dual_bound,
            "feasibility_residual": self.feasibility_residual,
            "restarts_used": self.restarts_used,
            "rounds": self.rounds,
            "corner_weight": self.corner_weight,
            "monotone_coupling": self.monotone_coupling,
            "query": list(self.query),
            "minimizer": [[a.p, a.u, a.w] for a in self.minimizer],
        }


def _columns(u, w):
    a = np.vstack([np.ones_like(u), u, w, kernels.h2(u), kernels.h2(w)])
    c = 0.5 * kernels.sym_kl(u, w)
    return a, c


def moment_residual(atoms, q):
    """Max-norm violation of the five moment equations by a list of atoms."""
    p = np.array([a.p for a in atoms])
    u = np.array([a.u for a in atoms])
    w = np.array([a.w for a in atoms])
    a, _ = _columns(u, w)
    return float(np.abs(a @ p - q.moments()).max())


def coupling_violations(atoms, tol=1e-9):
    """Index pairs (i, k) with u_i > u_k and w_i < w_k among weighted atoms."""
    out = []
    for i, a in enumerate(atoms):
        for k, b in enumerate(atoms):
            if a.p > 0 and b.p > 0 and a.u > b.u + tol and a.w < b.w - tol:
                out.append((i, k))
    return out


def _base_grid(budget, offset):
    step = 2.0 * budget.logit_span / (budget.grid - 1)
    s = np.linspace(-budget.logit_span, budget.logit_span, budget.grid) + offset * step
    g = np.concatenate([expit(s), np.linspace(0.02, 0.98, 25)])
    return np.unique(g[(g > 0.0) & (g < 1.0)])


def _solve_lp(u, w, b):
    a, c = _columns(u, w)
    res = linprog(
        c, A_eq=a, b_eq=b, bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    return res.x, res.eqlin.marginals, float(res.fun)


def _pricing(y, grid, budget):
    """Most negative reduced costs: grid scan plus Nelder-Mead in logit space."""
    uu, ww = np.meshgrid(grid, grid, indexing="ij")
    uu, ww = uu.ravel(), ww.ravel()
    a, c = _columns(uu, ww)
    rho = c - y @ a

    def reduced(x):
        u, v = expit(x)
        return (0.5 * ks.sym_kl(u, v) - y[0] - y[1] * u - y[2] * v
                - y[3] * ks.h2(u) - y[4] * ks.h2(v))

    found = []
    best = float(rho.min())
    for i in np.argsort(rho, kind="stable")[: budget.pricing_starts]:
        x0 = np.log([uu[i] / (1.0 - uu[i]), ww[i] / (1.0 - ww[i])])
        res = minimize(reduced, x0, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-16, "maxiter": budget.pricing_iters})
        u, v = expit(res.x)
        if 0.0 < u < 1.0 and 0.0 < v < 1.0:
            found.append((u, v))
            best = min(best, float(res.fun))
    return best, found


def _merge(atoms, tol):
    out = []
    for p, u, w in sorted(atoms, key=lambda t: -t[0]):
        for o in out:
            if abs(o[1] - u) < tol and abs(o[2] - w) < tol:
                tot = o[0] + p
                o[1] = (o[0] * o[1] + p * u) / tot
                o[2] = (o[0] * o[2] + p * w) / tot
                o[0] = tot
                break
        else:
            out.append([p, u, w])
    return out


def _polish(atoms, b):
    """SLSQP on weights and positions of the interior atoms, corners free."""
    inner = [a for a in atoms
             if not (max(a[1], a[2]) < 1e-7 or min(a[1], a[2]) > 1.0 - 1e-7)]
    n = len(inner)
    if n == 0:
        return None
    x0 = np.concatenate([[a[0] for a in inner], [0.0, 0.0],
                         [a[1] for a in inner], [a[2] for a in inner]])

    def unpack(x):
        return x[:n], x[n], x[n + 1], x[n + 2:2 * n + 2], x[2 * n + 2:]

    def obj(x):
        p, _, _, u, w = unpack(x)
        return float(p @ (0.5 * kernels.sym_kl(u, w)))

    def grad(x):
        p, _, _, u, w = unpack(x)
        ju, jw = kernels.j(u), kernels.j(w)
        dju = -1.0 / (u * (1.0 - u) * LN2)
        djw = -1.0 / (w * (1.0 - w) * LN2)
        g = np.zeros_like(x)
        g[:n] = 0.5 * (u - w) * (jw - ju)
        g[n + 2:2 * n + 2] = 0.5 * p * ((jw - ju) - (u - w) * dju)
        g[2 * n + 2:] = 0.5 * p * ((u - w) * djw - (jw - ju))
        return g

    def cons(x):
        p, p0, p1, u, w = unpack(x)
        return np.array([p.sum() + p0 + p1 - b[0], p @ u + p1 - b[1], p @ w + p1 - b[2],
                         p @ kernels.h2(u) - b[3], p @ kernels.h2(w) - b[4]])

    def cons_jac(x):
        p, _, _, u, w = unpack(x)
        jac = np.zeros((5, x.size))
        jac[0, :n + 2] = 1.0
        jac[1, :n], jac[1, n + 1] = u, 1.0
        jac[2, :n], jac[2, n + 1] = w, 1.0
        jac[3, :n] = kernels.h2(u)
        jac[4, :n] = kernels.h2(w)
        jac[1, n + 2:2 * n + 2] = p
        jac[2, 2 * n + 2:] = p
        jac[3, n + 2:2 * n + 2] = p * kernels.j(u)
        jac[4, 2 * n + 2:] = p * kernels.j(w)
        return jac

    # seed the corner weights from the LP atoms that sat at the corners
    for a in atoms:
        if max(a[1], a[2]) < 1e-7:
            x0[n] += a[0]
        elif min(a[1], a[2]) > 1.0 - 1e-7:
            x0[n + 1] += a[0]
    edge = 1e-15
    bounds = [(0.0, 1.0)] * (n + 2) + [(edge, 1.0 - edge)] * (2 * n)
    with np.errstate(all="ignore"):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = minimize(obj, x0, jac=grad, method="SLSQP", bounds=bounds,
                           constraints=[{"type": "eq", "fun": cons, "jac": cons_jac}],
                           options={"ftol": 1e-16, "maxiter": 500})
    p, p0, p1, u, w = unpack(res.x)
    out = [(float(p0), 0.0, 0.0), (float(p1), 1.0, 1.0)]
    out += [(float(pi), float(ui), float(wi)) for pi, ui, wi in zip(p, u, w)]
    return out


def _atoms(triples, min_weight=0.0):
    merged = _merge([t for t in triples if t[0] > min_weight], 1e-9)
    return [AtomPair(float(p), float(u), float(w)) for p, u, w in merged]


def _value(atoms):
    return float(sum(a.p * a.cost() for a in atoms))


def _kkt_duals(atoms):
    """Duals making every weighted atom a stationary zero of the reduced cost."""
    rows, rhs = [], []
    for a in atoms:
        if a.p <= 1e-12:
            continue
        rows.append([1.0, a.u, a.w, ks.h2(a.u), ks.h2(a.w)])
        rhs.append(a.cost())
        if not a.is_corner:
            ju, jw = ks.j(a.u), ks.j(a.w)
            dju = -1.0 / (a.u * (1.0 - a.u) * LN2)
            djw = -1.0 / (a.w * (1.0 - a.w) * LN2)
            rows.append([0.0, 1.0, 0.0, ju, 0.0])
            rhs.append(0.5 * ((jw - ju) - (a.u - a.w) * dju))
            rows.append([0.0, 0.0, 1.0, 0.0, jw])
            rhs.append(0.5 * ((a.u - a.w) * djw - (jw - ju)))
    if len(rows) < 5:
        return None
    y, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return y


def _one_restart(q, budget, offset):
    b = q.moments()
    grid = _base_grid(budget, offset)
    uu, ww = np.meshgrid(grid, grid, indexing="ij")
    # the lines u = m_u and w = m_w keep the LP feasible when e is near h2(m)
    cu = np.concatenate([uu.ravel(), [0.0, 1.0, q.m_u], np.full(grid.size, q.m_u), grid])
    cw = np.concatenate([ww.ravel(), [0.0, 1.0, q.m_w], grid, np.full(grid.size, q.m_w)])
    best, best_val, dual_bound, rounds = None, np.inf, -np.inf, 0
    for rounds in range(1, budget.max_rounds + 1):
        lp = _solve_lp(cu, cw, b)
        if lp is None:
            break
        x, y_lp, lp_val = lp
        support = [(x[i], cu[i], cw[i]) for i in np.flatnonzero(x > 1e-13)]
        cand = [_atoms(support)]
        polished = _polish(_merge(support, 1e-3), b)
        if polished is not None:
            cand.append(_atoms(polished, 1e-15))
        for atoms in cand:
            val = _value(atoms)
            if moment_residual(atoms, q) <= 1e-9 and val < best_val:
                best, best_val = atoms, val
        if best is not None:
            y = _kkt_duals(best)
            if y is not None:
                gap, _ = _pricing(y, grid, budget)
                # weak duality: b.y + min reduced cost bounds zeta from below
                dual_bound = max(dual_bound, float(b @ y) + min(gap, 0.0))
                if gap >= -budget.gap_tol:
                    break
        gap, new = _pricing(y_lp, grid, budget)
        dual_bound = max(dual_bound, lp_val + min(gap, 0.0))
        extra = new + [(a.u, a.w) for a in cand[-1] if not a.is_corner]
        cu = np.concatenate([cu, [e[0] for e in extra]])
        cw = np.concatenate([cw, [e[1] for e in extra]])
    return best, best_val, dual_bound, rounds


def _caratheodory(atoms, q):
    """Basic optimal weights on the given atoms: at most five carry mass."""
    u = np.array([a.u for a in atoms])
    w = np.array([a.w for a in atoms])
    lp = _solve_lp(u, w, q.moments())
    if lp is None:
        return atoms
    x = lp[0]
    out = [AtomPair(float(x[i]), a.u, a.w) for i, a in enumerate(atoms) if x[i] > 1e-15]
    if moment_residual(out, q) <= 1e-9 and _value(out) <= _value(atoms) + 1e-13:
        return out
    return atoms


def _degenerate(q, budget):
    # e = 0 forces that coordinate onto {0, 1}; only the corner atoms qualify
    if q.m_u == q.m_w and q.e_u == 0.0 and q.e_w == 0.0:
        atoms = [AtomPair(1.0 - q.m_u, 0.0, 0.0), AtomPair(q.m_u, 1.0, 1.0)]
        atoms = [a for a in atoms if a.p > 0.0]
        return ZetaResult(0.0, atoms, moment_residual(atoms, q), 0, dual_bound=0.0,
                          corner_weight=1.0, query=q.as_tuple())
    return ZetaResult(np.inf, [], np.inf, 0, status="infeasible", query=q.as_tuple())


def zeta_oracle(q, budget=None):
    """Best feasible distribution found for zeta(q); an upper bound on zeta.

    A query with e_u = 0 or e_w = 0 is resolved exactly: it is feasible only
    when carried by the corner atoms, otherwise the status is "infeasible".
    """
    if not isinstance(q, ZetaQuery):
        q = ZetaQuery(*q)
    budget = budget or OracleBudget()
    if q.e_u == 0.0 or q.e_w == 0.0:
        return _degenerate(q, budget)
    best, best_val, dual_bound, rounds = None, np.inf, -np.inf, 0
    for i in range(budget.restarts):
        if i == 0:
            offset = 0.0
        else:
            offset = np.random.default_rng([budget.seed, i]).uniform()
        atoms, val, lb, r = _one_restart(q, budget, offset)
        rounds += r
        dual_bound = max(dual_bound, lb)
        if atoms is not None and val < best_val:
            best, best_val = atoms, val
    if best is None:
        return ZetaResult(np.inf, [], np.inf, budget.restarts, status="infeasible",
                          rounds=rounds, query=q.as_tuple())
    if len(best) > 5:
        best = _caratheodory(best, q)
        best_val = _value(best)
    best = sorted(best, key=lambda a: (a.u, a.w))
    return ZetaResult(
        value=max(best_val, 0.0),
        minimizer=best,
        feasibility_residual=moment_residual(best, q),
        restarts_used=budget.restarts,
        dual_bound=dual_bound,
        rounds=rounds,
        corner_weight=float(sum(a.p for a in best if a.is_corner)),
        query=q.as_tuple(),
    )


def symmetric_structure_distance(result, m, e):
    """Largest distance from a weighted atom to {(0,0), (1,1), (v, 1-v)}.

    ``v`` is the closed-form interior atom for the query (1 - m, m, e, e).
    """
    d = abs(1.0 - 2.0 * m)
    v_small = ks.big_l_inv(2.0 * e / d) if d > 0 else 0.5
    v = 1.0 - v_small if m < 0.5 else v_small
    targets = np.array([[0.0, 0.0], [1.0, 1.0], [v, 1.0 - v]])
    worst = 0.0
    for a in result.minimizer:
        if a.p <= 1e-9:
            continue
        dist = np.sqrt(((targets - [a.u, a.w]) ** 2).sum(axis=1)).min()
        worst = max(worst, float(dist))
    return worst


__all__ = [
    "solve_r", "phi", "zeta_symmetric", "kappa", "zeta_lower_bound", "zeta_lower_bound_batch",
    "zeta_oracle",
    "ZetaQuery", "ZetaResult", "AtomPair", "OracleBudget", "moment_residual",
    "coupling_violations", "symmetric_structure_distance",
]
