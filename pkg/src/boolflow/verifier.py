"""Margins and scans for the class-membership inequality and the kappa conjectures.

For a finitely supported P_X with atom pairs (u_x, w_x) in (0, 1)^2 the
membership margin of a candidate psi is

    1/2 E[(u - w)(j(w) - j(u))]
      - [psi(E(u + w)/2, E(h2 u + h2 w)/2) - psi(E u, E h2 u)/2 - psi(E w, E h2 w)/2],

and psi belongs to the class exactly when it is nonnegative on every instance.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from . import extended, kernels
from .candidates import BINARY, PsiCandidate
from .kernels import scalar as ks
from .phizeta import OracleBudget, ZetaQuery, zeta_lower_bound_batch, zeta_oracle
from .scan import Check, run_scan

MAX_SUPPORT = 5
LOGIT_SCALE = 3.0
# logits are clipped here so expit stays strictly inside (0, 1) in float64
LOGIT_CLIP = 36.0


class DomainViolation(ValueError):
    """A candidate was evaluated outside the region where it is defined."""

    status = "domain-violation"


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class ConstraintInstance:
    """Weights and atom pairs; text form is three whitespace-separated lines."""

    weights: np.ndarray
    u: np.ndarray
    w: np.ndarray

    LO = 0.0
    HI = 1.0

    def __post_init__(self):
        arrs = []
        for name in ("weights", "u", "w"):
            a = np.array(getattr(self, name), dtype=np.float64).ravel()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrs.append(a)
        p, u, w = arrs
        if not (p.size == u.size == w.size) or not 1 <= p.size <= MAX_SUPPORT:
            raise ValueError(f"need 1..{MAX_SUPPORT} atoms with matching weights, u and w")
        if np.isnan(p).any() or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        for name, a in (("u", u), ("w", w)):
            if np.isnan(a).any() or (a <= self.LO).any() or (a >= self.HI).any():
                raise ValueError(f"{name} entries must lie strictly inside ({self.LO:g}, {self.HI:g})")

    def to_text(self):
        return "".join(" ".join(repr(float(x)) for x in a) + "\n"
                       for a in (self.weights, self.u, self.w))

    @classmethod
    def parse(cls, text):
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if len(rows) != 3:
            raise ValueError("instance file needs exactly three lines: weights, u, w")
        try:
            vals = [[float(x) for x in r] for r in rows]
        except ValueError as exc:
            raise ValueError(f"malformed instance file: {exc}") from None
        return cls(*vals)

    def as_dict(self):
        return {"weights": self.weights.tolist(), "u": self.u.tolist(), "w": self.w.tolist()}


def _pad(inst_rows):
    """Stack instances into (N, 5) arrays; padding atoms carry zero weight."""
    n = len(inst_rows)
    p = np.zeros((n, MAX_SUPPORT))
    u = np.full((n, MAX_SUPPORT), 0.5)
    w = np.full((n, MAX_SUPPORT), 0.5)
    for i, inst in enumerate(inst_rows):
        k = inst.weights.size
        p[i, :k], u[i, :k], w[i, :k] = inst.weights, inst.u, inst.w
    return p, u, w


# --------------------------------------------------------------------------
# margins


def _rhs(psi, m_u, m_w, e_u, e_w):
    top = psi.func(0.5 * (m_u + m_w), 0.5 * (e_u + e_w))
    return np.asarray(top - 0.5 * psi.func(m_u, e_u) - 0.5 * psi.func(m_w, e_w), dtype=float)


def margins_batch(psi, p, u, w):
    """Membership margins for rows of (N, K) weight and atom arrays."""
    p, u, w = (np.asarray(a, dtype=np.float64) for a in (p, u, w))
    lhs = 0.5 * (p * kernels.sym_kl(u, w)).sum(axis=-1)
    m_u = np.clip((p * u).sum(axis=-1), 0.0, 1.0)
    m_w = np.clip((p * w).sum(axis=-1), 0.0, 1.0)
    e_u = np.clip((p * kernels.h2(u)).sum(axis=-1), 0.0, 1.0)
    e_w = np.clip((p * kernels.h2(w)).sum(axis=-1), 0.0, 1.0)
    with np.errstate(all="ignore"):
        return lhs - _rhs(psi, m_u, m_w, e_u, e_w)


def _moments(p, u, w):
    hu = [ks.h2(x) for x in u]
    hw = [ks.h2(x) for x in w]
    m_u = min(max(math.fsum(pi * x for pi, x in zip(p, u)), 0.0), 1.0)
    m_w = min(max(math.fsum(pi * x for pi, x in zip(p, w)), 0.0), 1.0)
    e_u = min(max(math.fsum(pi * x for pi, x in zip(p, hu)), 0.0), 1.0)
    e_w = min(max(math.fsum(pi * x for pi, x in zip(p, hw)), 0.0), 1.0)
    return m_u, m_w, e_u, e_w


def psi_margin(psi, inst):
    """LHS - RHS of the membership inequality at one instance."""
    p, u, w = inst.weights, inst.u, inst.w
    lhs = 0.5 * math.fsum(pi * ks.sym_kl(ui, wi) for pi, ui, wi in zip(p, u, w))
    m_u, m_w, e_u, e_w = _moments(p, u, w)
    vals = (psi(0.5 * (m_u + m_w), 0.5 * (e_u + e_w)), psi(m_u, e_u), psi(m_w, e_w))
    if not all(math.isfinite(v) for v in vals):
        raise DomainViolation(f"{psi.name} is not finite at the instance's evaluation points")
    return lhs - (vals[0] - 0.5 * vals[1] - 0.5 * vals[2])


def induced_query(inst):
    """The four moments (E u, E w, E h2 u, E h2 w) of an instance."""
    return ZetaQuery(*_moments(inst.weights, inst.u, inst.w))


def zeta_chain_check(psi, inst, tol=1e-9, budget=None):
    """Cross-check a violation through the zeta oracle.

    At the induced query any feasible distribution has LHS at least zeta, so
    an oracle value below the RHS confirms a violation that does not hinge
    on the particular float rounding of this instance.
    """
    q = induced_query(inst)
    res = zeta_oracle(q, budget or OracleBudget())
    rhs = float(_rhs(psi, *(np.array(v) for v in q.as_tuple())))
    return {
        "query": list(q.as_tuple()),
        "oracle_status": res.status,
        "oracle_value": res.value,
        "rhs": rhs,
        "oracle_margin": res.value - rhs,
        "confirms": bool(res.value - rhs < -tol),
    }


# --------------------------------------------------------------------------
# sampling helpers


def _coords(rng, shape, hi=1.0):
    """Half uniform, half logit-normal (scale 3) points in (0, hi)."""
    uni = rng.uniform(0.0, 1.0, shape)
    lgt = expit(LOGIT_SCALE * rng.standard_normal(shape))
    pick = rng.random(shape[0]) < 0.5
    if len(shape) > 1:
        pick = pick[:, None]
    out = np.where(pick, lgt, uni)
    return np.clip(out, 1e-300, 1.0 - 2.0**-53) * hi


# per-atom family probabilities: independent, diagonal, anti-diagonal, near-corner
ATOM_FAMILIES = (0.4, 0.15, 0.2, 0.25)


def sample_instances(rng, size):
    """Random instances: support size uniform on 1..5, Dirichlet(1) weights.

    Atoms come from four families: independent (u, w); the diagonal w = u;
    the anti-diagonal w = 1 - u; and near-corner diagonal atoms (d, d) or
    (1 - d, 1 - d) with log10 d uniform on [-12, -2], interior stand-ins for
    the zero-cost corner atoms of zeta minimisers.
    """
    k = rng.integers(1, MAX_SUPPORT + 1, size)
    shape = (size, MAX_SUPPORT)
    mask = np.arange(MAX_SUPPORT)[None, :] < k[:, None]
    g = rng.standard_exponential(shape) * mask
    p = g / g.sum(axis=1, keepdims=True)
    u = _coords(rng, shape)
    w = _coords(rng, shape)
    d = 10.0 ** rng.uniform(-12.0, -2.0, shape)
    corner = np.where(rng.random(shape) < 0.5, d, 1.0 - d)
    kind = np.searchsorted(np.cumsum(ATOM_FAMILIES), rng.random(shape), side="right")
    w = np.select([kind == 1, kind == 2, kind == 3], [u, 1.0 - u, corner], w)
    u = np.where(kind == 3, corner, u)
    u = np.clip(u, 1e-300, 1.0 - 2.0**-53)
    w = np.clip(w, 1e-300, 1.0 - 2.0**-53)
    return p, np.where(mask, u, 0.5), np.where(mask, w, 0.5)


def _softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


class MembershipCheck(Check):
    """Scan of the membership inequality for a binary-domain candidate."""

    instance_type = ConstraintInstance

    def __init__(self, psi: PsiCandidate, oracle_check=True):
        if psi.domain != BINARY:
            raise ValueError("membership scans need a binary-domain candidate")
        self.psi = psi
        self.check_id = f"c3:{psi.name}"
        self.theorem = psi.proven
        self.oracle_check = oracle_check

    def params(self):
        return {"candidate": self.psi.name}

    def sample(self, rng, size):
        return sample_instances(rng, size)

    def margins(self, batch):
        return margins_batch(self.psi, *batch)

    def take(self, batch, i):
        p, u, w = (a[i] for a in batch)
        keep = p > 0
        q = p[keep] / p[keep].sum()
        return self.instance_type(q, u[keep], w[keep])

    def encode(self, inst):
        lo, hi = inst.LO, inst.HI
        return np.concatenate([np.log(inst.weights + 1e-300),
                               logit((inst.u - lo) / (hi - lo)), logit((inst.w - lo) / (hi - lo))])

    def decode(self, x):
        k = len(x) // 3
        lo, hi = self.instance_type.LO, self.instance_type.HI
        z = np.clip(x[k:], -LOGIT_CLIP, LOGIT_CLIP)
        pts = lo + (hi - lo) * expit(z)
        return self.instance_type(_softmax(x[:k]), pts[:k], pts[k:])

    def margin(self, inst):
        return psi_margin(self.psi, inst)

    def extended(self, inst):
        if not extended.has_candidate(self.psi.name):
            return None
        return float(extended.psi_margin(self.psi.name, inst.weights, inst.u, inst.w))

    def serialize(self, inst):
        return {**inst.as_dict(), "text": inst.to_text()}

    def diagnose(self, inst, margin, cfg):
        if not self.oracle_check:
            return {}
        return {"zeta_check": zeta_chain_check(self.psi, inst, cfg.tolerance,
                                               OracleBudget(seed=cfg.seed))}


def scan_membership(psi, cfg, jobs=1):
    return run_scan(MembershipCheck(psi), cfg, jobs)


# --------------------------------------------------------------------------
# the two kappa conjectures


def _phi_kappa(a, b):
    return kernels.kappa(kernels.h2_inv(a), kernels.h2_inv(b))


def kappa_reflection_margin(u, w):
    """kappa(1 - u, w) - kappa(u, w) for u, w in (0, 1/2]."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if ((u <= 0) | (u > 0.5) | (w <= 0) | (w > 0.5)).any() or np.isnan(u + w).any():
        raise ValueError("reflection margin needs u, w in (0, 1/2]")
    out = kernels.kappa(1.0 - u, w) - kernels.kappa(u, w)
    return float(out) if out.ndim == 0 else out


def kappa_midpoint_margin(p1, p2):
    """Midpoint-convexity margin of (a, b) -> kappa(h2_inv(a), h2_inv(b))."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    for p in (p1, p2):
        if np.isnan(p).any() or (p <= 0).any() or (p > 1).any():
            raise ValueError("midpoint points must lie in (0, 1]^2")
    a1, b1 = p1[..., 0], p1[..., 1]
    a2, b2 = p2[..., 0], p2[..., 1]
    out = (0.5 * _phi_kappa(a1, b1) + 0.5 * _phi_kappa(a2, b2)
           - _phi_kappa(0.5 * (a1 + a2), 0.5 * (b1 + b2)))
    return float(out) if out.ndim == 0 else out


def conjecture4_margins(u, w, p1=None, p2=None):
    """(reflection margin at (u, w), midpoint margin at p1, p2).

    The midpoint points default to (h2(u), h2(w)) and its mirror
    (h2(w), h2(u)), which probes convexity across the diagonal.
    """
    first = kappa_reflection_margin(u, w)
    if p1 is None:
        p1 = (ks.h2(float(u)), ks.h2(float(w)))
    if p2 is None:
        p2 = (p1[1], p1[0])
    return first, kappa_midpoint_margin(p1, p2)


HESSIAN_NOISE = 1e-6


def _hessian(a, b, h):
    f0 = _phi_kappa(a, b)
    faa = (_phi_kappa(a + h, b) - 2 * f0 + _phi_kappa(a - h, b)) / h**2
    fbb = (_phi_kappa(a, b + h) - 2 * f0 + _phi_kappa(a, b - h)) / h**2
    fab = (_phi_kappa(a + h, b + h) - _phi_kappa(a + h, b - h)
           - _phi_kappa(a - h, b + h) + _phi_kappa(a - h, b - h)) / (4 * h**2)
    return faa, fbb, fab


def kappa_hessian_scan(points=25, h=1e-4, lo=0.02, hi=0.98):
    """Smallest eigenvalue of the second-difference Hessian of Phi_kappa on a grid.

    Entries are Richardson-extrapolated from steps h and h/2.  On the
    diagonal a = b the exact Hessian is singular, and the raw O(h^2) error
    would otherwise show up as a spurious negative eigenvalue.
    """
    g = np.linspace(lo, hi, points)
    a, b = np.meshgrid(g, g, indexing="ij")
    a, b = a.ravel(), b.ravel()
    coarse = _hessian(a, b, h)
    fine = _hessian(a, b, 0.5 * h)
    faa, fbb, fab = ((4.0 * f - c) / 3.0 for f, c in zip(fine, coarse))
    tr, det = faa + fbb, faa * fbb - fab**2
    lam = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
    i = int(np.argmin(lam))
    return {"min_eigenvalue": float(lam[i]), "argmin": [float(a[i]), float(b[i])],
            "points": points, "h": h, "range": [lo, hi], "noise_floor": HESSIAN_NOISE,
            "passed": bool(lam[i] >= -HESSIAN_NOISE)}


class KappaReflectionCheck(Check):
    check_id = "c4:reflection"

    def sample(self, rng, size):
        return _coords(rng, (size,), 0.5), _coords(rng, (size,), 0.5)

    def margins(self, batch):
        return kappa_reflection_margin(*batch)

    def take(self, batch, i):
        return (float(batch[0][i]), float(batch[1][i]))

    def encode(self, inst):
        return logit(2.0 * np.asarray(inst))

    def decode(self, x):
        u, w = 0.5 * expit(np.clip(x, -LOGIT_CLIP, LOGIT_CLIP))
        return (float(u), float(w))

    def margin(self, inst):
        return kappa_reflection_margin(*inst)

    def extended(self, inst):
        return float(extended.kappa_reflection_margin(*inst))

    def serialize(self, inst):
        return {"u": inst[0], "w": inst[1]}


class KappaMidpointCheck(Check):
    check_id = "c4:midpoint"

    def sample(self, rng, size):
        return _coords(rng, (size, 2)), _coords(rng, (size, 2))

    def margins(self, batch):
        return kappa_midpoint_margin(*batch)

    def take(self, batch, i):
        return (tuple(map(float, batch[0][i])), tuple(map(float, batch[1][i])))

    def encode(self, inst):
        return logit(np.concatenate(inst))

    def decode(self, x):
        v = expit(np.clip(x, -LOGIT_CLIP, LOGIT_CLIP))
        return ((float(v[0]), float(v[1])), (float(v[2]), float(v[3])))

    def margin(self, inst):
        return kappa_midpoint_margin(*inst)

    def extended(self, inst):
        (a1, b1), (a2, b2) = inst
        return float(extended.kappa_midpoint_margin(a1, b1, a2, b2))

    def serialize(self, inst):
        return {"p1": list(inst[0]), "p2": list(inst[1])}


# --------------------------------------------------------------------------
# Conjecture 5


def conjecture5_margin(q):
    """Lower bound on zeta minus the phi increment, for m_u, m_w in [0, 1/2]."""
    if not isinstance(q, ZetaQuery):
        q = ZetaQuery(*q)
    out = conjecture5_margin_batch(*(np.array(v) for v in q.as_tuple()))
    return float(out)


def conjecture5_margin_batch(m_u, m_w, e_u, e_w):
    m_u, m_w, e_u, e_w = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (m_u, m_w, e_u, e_w)))
    if ((m_u > 0.5) | (m_w > 0.5)).any():
        raise ValueError("the Conjecture 5 margin takes m_u, m_w in [0, 1/2]")
    lb = zeta_lower_bound_batch(m_u, m_w, e_u, e_w)
    inc = _rhs(_PHI_ONLY, m_u, m_w, e_u, e_w)
    return np.asarray(lb - inc)


_PHI_ONLY = PsiCandidate("phi", kernels.phi, scalar=ks.phi)


class Conjecture5Check(Check):
    check_id = "c5"

    def sample(self, rng, size):
        m = _coords(rng, (size, 2), 0.5)
        frac = _coords(rng, (size, 2))
        e = np.maximum(frac * kernels.h2(m), 1e-300)
        return m[:, 0], m[:, 1], e[:, 0], e[:, 1]

    def margins(self, batch):
        return conjecture5_margin_batch(*batch)

    def take(self, batch, i):
        return tuple(float(a[i]) for a in batch)

    def encode(self, inst):
        m_u, m_w, e_u, e_w = inst
        fu, fw = e_u / ks.h2(m_u), e_w / ks.h2(m_w)
        x = logit(np.clip([2 * m_u, 2 * m_w, fu, fw], 1e-300, 1 - 2.0**-53))
        return x

    def decode(self, x):
        v = expit(np.clip(x, -LOGIT_CLIP, LOGIT_CLIP))
        m_u, m_w = 0.5 * v[0], 0.5 * v[1]
        return (float(m_u), float(m_w), float(max(v[2] * ks.h2(m_u), 1e-300)),
                float(max(v[3] * ks.h2(m_w), 1e-300)))

    def margin(self, inst):
        return conjecture5_margin(inst)

    def extended(self, inst):
        return float(extended.conjecture5_margin(*inst))

    def serialize(self, inst):
        return dict(zip(("m_u", "m_w", "e_u", "e_w"), inst))
