"""Hellinger flow r(t) = E sqrt(1 - d_X(t)^2), with d_x = E[F | Y_t = x] = 1 - 2 v_x.

Square roots are taken as sqrt((1 - d)(1 + d)); on a posterior field that
equals 2 sqrt(v (1 - v)), which is how r is evaluated when v is at hand.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from . import extended, kernels
from .candidates import HELLINGER, PsiCandidate
from .flow import _check_time, posterior_field
from .scalar import crossover
from .scan import Check
from .verifier import (LOGIT_CLIP, MAX_SUPPORT, ConstraintInstance, DomainViolation,
                       _softmax, sample_instances)

log = logging.getLogger(__name__)

CLIP = 1e-12


def _root(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt((1.0 - x) * (1.0 + x))


@dataclass(frozen=True)
class HellingerField:
    n: int
    t: float
    d: np.ndarray
    clipped: bool = False
    v: np.ndarray | None = None

    @property
    def mean(self):
        return float(self.d.mean())


def _clip_field(d, v=None, n=0, t=0.0):
    over = np.abs(d) > 1.0 - CLIP
    if over.any():
        log.warning("clipping %d field values with |d| > 1 - %g", int(over.sum()), CLIP)
        d = np.clip(d, -(1.0 - CLIP), 1.0 - CLIP)
        return HellingerField(n, t, d, True, None)
    return HellingerField(n, t, d, False, v)


def hellinger_field(p, t):
    f = posterior_field(p, t)
    return _clip_field(1.0 - 2.0 * f.v, f.v, f.n, f.t)


def field_from_values(d, t=0.0):
    """Hellinger field from raw d-values in (-1, 1), clipping at 1 - 1e-12."""
    d = np.asarray(d, dtype=float).ravel()
    n = d.size.bit_length() - 1
    if d.size < 2 or 1 << n != d.size:
        raise ValueError("field length must be a power of two >= 2")
    if np.isnan(d).any() or (np.abs(d) > 1.0).any():
        raise ValueError("field values must lie in [-1, 1]")
    return _clip_field(d, None, n, t)


def r_value(field):
    if field.v is not None:
        return float((2.0 * np.sqrt(field.v * (1.0 - field.v))).mean())
    return float(_root(field.d).mean())


def r_derivative(field):
    """Exact r'(t) as an edge sum over the hypercube."""
    if field.clipped:
        raise ValueError("r_derivative refuses clipped fields (|d| reached 1 - 1e-12)")
    if (np.abs(field.d) >= 1.0).any():
        raise ValueError("r_derivative needs |d| < 1")
    return float(kernels.hel_edge_sum(field.d[None, :])[0])


def conjecture2_margin(p, t):
    """(1 - sqrt(1 - rho_t^2)) - (sqrt(1 - E[F]^2) - r(t))."""
    t = _check_time(t)
    budget = 1.0 - math.sqrt(-math.expm1(-4.0 * t))
    m = p.mean
    r_inf = 2.0 * math.sqrt(m * (1.0 - m))
    return budget - (r_inf - r_value(hellinger_field(p, t)))


@dataclass
class HellingerSweep:
    times: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    r_inf: np.ndarray
    c2_margin: np.ndarray


def sweep(tables, times):
    """r, r' and the Conjecture-2 margin for every row of soft tables."""
    tables = np.ascontiguousarray(tables, dtype=np.float64)
    times = np.asarray(times, dtype=float)
    m = tables.mean(axis=1)
    r_inf = 2.0 * np.sqrt(m * (1.0 - m))
    shape = (tables.shape[0], times.size)
    r, dr = np.empty(shape), np.empty(shape)
    for k, t in enumerate(times):
        v = kernels.smooth(tables, crossover(_check_time(t)))
        r[:, k] = (2.0 * np.sqrt(v * (1.0 - v))).mean(axis=1)
        dr[:, k] = kernels.hel_edge_sum(1.0 - 2.0 * v)
    budget = 1.0 - np.sqrt(-np.expm1(-4.0 * times))
    return HellingerSweep(times, r, dr, r_inf, budget[None, :] - (r_inf[:, None] - r))


# --------------------------------------------------------------------------
# two-point identity and the averaged bound


def two_point_sides(u, w):
    """Both sides of the exact two-point identity; they agree for all (u, w)."""
    u = float(u)
    w = float(w)
    if not (-1.0 < u < 1.0 and -1.0 < w < 1.0):
        raise ValueError("two-point identity needs u, w in (-1, 1)")
    ru, rw = math.sqrt((1 - u) * (1 + u)), math.sqrt((1 - w) * (1 + w))
    lhs = 0.5 * (u - w) * (u / ru - w / rw)
    rhs = (((u - w) / 2) ** 2 + ((ru - rw) / 2) ** 2) * (1 / ru + 1 / rw)
    return lhs, rhs


class HConstraintInstance(ConstraintInstance):
    """Atom pairs (u_x, w_x) in (-1, 1)^2 with at most five weights."""

    LO = -1.0
    HI = 1.0


def _h_lhs(p, u, w):
    ru, rw = _root(u), _root(w)
    return 0.5 * (p * (u - w) * (u / ru - w / rw)).sum(axis=-1)


def _h_moments(p, u, w):
    return ((p * u).sum(axis=-1), (p * w).sum(axis=-1),
            (p * _root(u)).sum(axis=-1), (p * _root(w)).sum(axis=-1))


def psi_h_margins_batch(psi, p, u, w):
    p, u, w = (np.asarray(a, dtype=float) for a in (p, u, w))
    m_u, m_w, r_u, r_w = _h_moments(p, u, w)
    with np.errstate(all="ignore"):
        rhs = (psi.func(0.5 * (m_u + m_w), 0.5 * (r_u + r_w))
               - 0.5 * psi.func(m_u, r_u) - 0.5 * psi.func(m_w, r_w))
        return _h_lhs(p, u, w) - rhs


def _require_h(psi):
    if psi.domain != HELLINGER:
        raise ValueError(f"{psi.name} is not a Hellinger-domain candidate")


def psi_h_margin(psi, inst):
    """LHS - RHS of the Hellinger-side membership inequality."""
    _require_h(psi)
    p, u, w = inst.weights, inst.u, inst.w
    m_u, m_w, r_u, r_w = (float(x) for x in _h_moments(p, u, w))
    vals = (psi(0.5 * (m_u + m_w), 0.5 * (r_u + r_w)), psi(m_u, r_u), psi(m_w, r_w))
    if not all(math.isfinite(v) for v in vals):
        raise DomainViolation(f"{psi.name} is not finite at the instance's evaluation points")
    return float(_h_lhs(p, u, w)) - (vals[0] - 0.5 * vals[1] - 0.5 * vals[2])


def _quadratic_form(a1, a2, b1, b2):
    return (((a1 - a2) / 2) ** 2 + ((b1 - b2) / 2) ** 2) * (1.0 / b1 + 1.0 / b2)


def psi_hat_h_margin(psi, a1, a2, b1, b2):
    """Two-point quadratic form minus the psi increment at the midpoint."""
    _require_h(psi)
    if not all(-1.0 < a < 1.0 for a in (a1, a2)):
        raise ValueError("a1, a2 must lie in (-1, 1)")
    if not all(0.0 < b < 1.0 for b in (b1, b2)):
        raise ValueError("b1, b2 must lie in (0, 1)")
    inc = psi(0.5 * (a1 + a2), 0.5 * (b1 + b2)) - 0.5 * psi(a1, b1) - 0.5 * psi(a2, b2)
    return _quadratic_form(a1, a2, b1, b2) - inc


def averaged_bound_margin(p, u, w):
    """LHS of the Hellinger inequality minus the quadratic form at the means."""
    p, u, w = (np.asarray(a, dtype=float) for a in (p, u, w))
    m_u, m_w, r_u, r_w = _h_moments(p, u, w)
    return _h_lhs(p, u, w) - _quadratic_form(m_u, m_w, r_u, r_w)


# --------------------------------------------------------------------------
# sampled checks


def _to_pm(x):
    return np.clip(2.0 * x - 1.0, -(1.0 - 2.0**-52), 1.0 - 2.0**-52)


class TwoPointCheck(Check):
    """The exact identity; margin is -|LHS - RHS| / max(1, |LHS|)."""

    check_id = "two-point:identity"
    theorem = True

    def sample(self, rng, size):
        return _to_pm(rng.uniform(0, 1, size)), _to_pm(rng.uniform(0, 1, size))

    def margins(self, batch):
        u, w = batch
        ru, rw = _root(u), _root(w)
        lhs = 0.5 * (u - w) * (u / ru - w / rw)
        rhs = (((u - w) / 2) ** 2 + ((ru - rw) / 2) ** 2) * (1 / ru + 1 / rw)
        return -np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))

    def take(self, batch, i):
        return (float(batch[0][i]), float(batch[1][i]))

    def margin(self, inst):
        lhs, rhs = two_point_sides(*inst)
        return -abs(lhs - rhs) / max(1.0, abs(lhs))

    def serialize(self, inst):
        return {"u": inst[0], "w": inst[1]}


class AveragedBoundCheck(Check):
    check_id = "two-point:averaged"
    theorem = True

    def sample(self, rng, size):
        p, u, w = sample_instances(rng, size)
        return p, _to_pm(u), _to_pm(w)

    def margins(self, batch):
        return averaged_bound_margin(*batch)

    def take(self, batch, i):
        p, u, w = (a[i] for a in batch)
        keep = p > 0
        return HConstraintInstance(p[keep] / p[keep].sum(), u[keep], w[keep])

    def margin(self, inst):
        return float(averaged_bound_margin(inst.weights, inst.u, inst.w))

    def serialize(self, inst):
        return {**inst.as_dict(), "text": inst.to_text()}


class HMembershipCheck(Check):
    """Scan of the Hellinger-side membership inequality for a candidate."""

    def __init__(self, psi: PsiCandidate):
        _require_h(psi)
        self.psi = psi
        self.check_id = f"hellinger:{psi.name}"
        self.theorem = psi.proven

    def params(self):
        return {"candidate": self.psi.name}

    def sample(self, rng, size):
        p, u, w = sample_instances(rng, size)
        return p, _to_pm(u), _to_pm(w)

    def margins(self, batch):
        return psi_h_margins_batch(self.psi, *batch)

    def take(self, batch, i):
        p, u, w = (a[i] for a in batch)
        keep = p > 0
        return HConstraintInstance(p[keep] / p[keep].sum(), u[keep], w[keep])

    def encode(self, inst):
        return np.concatenate([np.log(inst.weights + 1e-300),
                               logit((inst.u + 1) / 2), logit((inst.w + 1) / 2)])

    def decode(self, x):
        k = len(x) // 3
        pts = 2.0 * expit(np.clip(x[k:], -LOGIT_CLIP, LOGIT_CLIP)) - 1.0
        pts = np.clip(pts, -(1.0 - 2.0**-52), 1.0 - 2.0**-52)
        return HConstraintInstance(_softmax(x[:k]), pts[:k], pts[k:])

    def margin(self, inst):
        return psi_h_margin(self.psi, inst)

    def extended(self, inst):
        if not extended.has_candidate(self.psi.name):
            return None
        return float(extended.psi_h_margin(self.psi.name, inst.weights, inst.u, inst.w))

    def serialize(self, inst):
        return {**inst.as_dict(), "text": inst.to_text()}


__all__ = [
    "HellingerField", "HConstraintInstance", "hellinger_field", "field_from_values", "r_value",
    "r_derivative", "conjecture2_margin", "sweep", "two_point_sides", "psi_h_margin",
    "psi_h_margins_batch", "psi_hat_h_margin", "averaged_bound_margin", "TwoPointCheck",
    "AveragedBoundCheck", "HMembershipCheck", "MAX_SUPPORT",
]
