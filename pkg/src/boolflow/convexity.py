"""Sampled and gridded checks of the analytic facts behind the proofs.

Every check here is of a proven statement, so margins below the tolerance
are defects in the numerics, not findings.
"""

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from . import extended, kernels
from .report import VerificationReport, classify

TOLERANCE = 1e-10
SCALAR_TOLERANCE = 1e-12


@dataclass
class ConvexityReport:
    check_name: str
    grid_spec: dict
    min_margin: float
    argmin: dict
    method: str
    samples: int
    extended_margin: float | None = None
    extra: dict = field(default_factory=dict)
    tolerance: float = TOLERANCE

    def classification(self, tol=None):
        tol = self.tolerance if tol is None else tol
        return classify(self.min_margin, tol, self.extended_margin, theorem=True)

    def to_report(self, tol=None):
        tol = self.tolerance if tol is None else tol
        details = {"method": self.method, "grid": self.grid_spec, **self.extra}
        if self.extended_margin is not None:
            details["extended_margin"] = self.extended_margin
        return VerificationReport(
            check_id=f"convexity:{self.check_name}", config=dict(self.grid_spec),
            samples=self.samples, min_margin=float(self.min_margin), argmin=self.argmin,
            classification=self.classification(tol), tolerance=tol, details=details,
        )


def _rng(seed):
    return np.random.default_rng(seed)


def _ext(fn):
    with mp.workdps(extended.DPS):
        return float(fn())


def t_reduction(u):
    """-ln u - ln(1 - u) - 4u^2 + 4u - 1; decreasing on (0, 1/2] down to 2 ln 2."""
    u = np.asarray(u, dtype=float)
    return -np.log(u) - np.log1p(-u) - 4.0 * u * u + 4.0 * u - 1.0


def check_t_reduction(points=10_000):
    u = np.linspace(0.5 / points, 0.5, points)
    m = t_reduction(u)
    i = int(np.argmin(m))
    return ConvexityReport("t-reduction", {"lo": float(u[0]), "hi": 0.5, "points": points},
                           float(m[i]), {"u": float(u[i])}, "grid", points)


def check_jlinv_convex(samples=100_000, seed=1, hi=50.0):
    """Midpoint convexity of j(big_l_inv(.)) on random pairs in (0, hi]."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = _rng(seed)
    x1 = hi * (1.0 - rng.random(samples))
    x2 = hi * (1.0 - rng.random(samples))
    m = 0.5 * kernels.jl(x1) + 0.5 * kernels.jl(x2) - kernels.jl(0.5 * (x1 + x2))
    i = int(np.argmin(m))
    a, b = float(x1[i]), float(x2[i])
    ext = None
    if m[i] < -TOLERANCE:
        ext = _ext(lambda: extended.jl(a) / 2 + extended.jl(b) / 2
                   - extended.jl((mp.mpf(a) + mp.mpf(b)) / 2))
    return ConvexityReport("jlinv-convex", {"lo": 0.0, "hi": hi, "seed": seed},
                           float(m[i]), {"x1": a, "x2": b}, "midpoint", samples, ext)


def log_grid(lo, hi, points):
    if not (0.0 < lo < hi):
        raise ValueError("grid needs 0 < lo < hi")
    if points < 2:
        raise ValueError("grid needs at least 2 points")
    return np.geomspace(lo, hi, points)


def check_ratio_decreasing(lo=1e-3, hi=100.0, points=10_000):
    """Adjacent-pair margins g(x_k) - g(x_{k+1}) for g(x) = j(big_l_inv(x)) / x."""
    if hi > 100.0:
        raise ValueError("grid must lie within (0, 100]")
    x = log_grid(lo, hi, points)
    g = kernels.jl(x) / x
    m = g[:-1] - g[1:]
    i = int(np.argmin(m))
    return ConvexityReport("ratio-decreasing", {"lo": lo, "hi": hi, "points": points, "spacing": "log"},
                           float(m[i]), {"x1": float(x[i]), "x2": float(x[i + 1])},
                           "second-difference", points)


def check_perspective_convex(samples=100_000, seed=1, x_max=5.0, y_max=10.0):
    """Midpoint convexity of (x, y) -> |x| j(big_l_inv(y / |x|)) on [-x_max, x_max] x (0, y_max]."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = _rng(seed)
    x1, x2 = rng.uniform(-x_max, x_max, (2, samples))
    y1 = y_max * (1.0 - rng.random(samples))
    y2 = y_max * (1.0 - rng.random(samples))
    f = kernels.perspective
    m = 0.5 * f(x1, y1) + 0.5 * f(x2, y2) - f(0.5 * (x1 + x2), 0.5 * (y1 + y2))
    i = int(np.argmin(m))
    pt = {"x1": float(x1[i]), "y1": float(y1[i]), "x2": float(x2[i]), "y2": float(y2[i])}
    ext = None
    if m[i] < -TOLERANCE:
        def ev():
            a1, b1, a2, b2 = (mp.mpf(pt[k]) for k in ("x1", "y1", "x2", "y2"))
            return (extended.perspective(a1, b1) / 2 + extended.perspective(a2, b2) / 2
                    - extended.perspective((a1 + a2) / 2, (b1 + b2) / 2))
        ext = _ext(ev)
    return ConvexityReport("perspective-convex",
                           {"x_max": x_max, "y_max": y_max, "seed": seed},
                           float(m[i]), pt, "midpoint", samples, ext)


def fb(b):
    """(1+b)^2 ln(1+b) - b^2 ln b - b ln b - 2b ln 4, with the b -> 0 limit 0."""
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        blogb = np.where(b > 0, b * np.log(np.where(b > 0, b, 1.0)), 0.0)
    return (1.0 + b) ** 2 * np.log1p(b) - b * blogb - blogb - 2.0 * b * math.log(4.0)


def check_fb_nonneg(lo=1e-4, hi=1.0, points=10_000):
    if not (0.0 < lo < hi <= 1.0):
        raise ValueError("grid must lie in (0, 1]")
    b = np.linspace(lo, hi, points)
    m = fb(b)
    interior = m[:-1] if hi == 1.0 else m
    i = int(np.argmin(m))
    return ConvexityReport("fb-nonneg", {"lo": lo, "hi": hi, "points": points},
                           float(m[i]), {"b": float(b[i])}, "grid", points,
                           extra={"interior_min": float(interior.min())},
                           tolerance=SCALAR_TOLERANCE)


def z_point(u, w):
    a = math.sqrt(w * (1.0 - u))
    return a / (a + math.sqrt(u * (1.0 - w)))


def check_z_identity(u, w):
    """(j(z), (j(w) - j(u)) / 2); the two agree for interior u >= w."""
    u, w = float(u), float(w)
    if not (0.0 < w < 1.0 and 0.0 < u < 1.0):
        raise ValueError("u and w must lie in (0, 1)")
    if u < w:
        raise ValueError("the identity is stated for u >= w")
    return float(kernels.j(z_point(u, w))), 0.5 * (float(kernels.j(w)) - float(kernels.j(u)))


def check_z_identity_scan(samples=10_000, seed=1):
    """Worst relative disagreement of the z identity on random pairs u >= w."""
    rng = _rng(seed)
    a, b = rng.uniform(0.0, 1.0, (2, samples))
    u = np.clip(np.maximum(a, b), 1e-12, 1.0 - 1e-12)
    w = np.clip(np.minimum(a, b), 1e-12, 1.0 - 1e-12)
    r = np.sqrt(w * (1.0 - u))
    z = r / (r + np.sqrt(u * (1.0 - w)))
    lhs, rhs = kernels.j(z), 0.5 * (kernels.j(w) - kernels.j(u))
    m = -np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    i = int(np.argmin(m))
    return ConvexityReport("z-identity", {"seed": seed}, float(m[i]),
                           {"u": float(u[i]), "w": float(w[i])}, "identity", samples,
                           extra={"z_max": float(z.max())}, tolerance=SCALAR_TOLERANCE)


def margin_at(name, pt):
    """Recompute one check's margin at a reported argmin."""
    if name == "jlinv-convex":
        x1, x2 = pt["x1"], pt["x2"]
        return float(0.5 * kernels.jl(x1) + 0.5 * kernels.jl(x2) - kernels.jl(0.5 * (x1 + x2)))
    if name == "ratio-decreasing":
        x1, x2 = pt["x1"], pt["x2"]
        return float(kernels.jl(x1) / x1 - kernels.jl(x2) / x2)
    if name == "perspective-convex":
        f = kernels.perspective
        x1, y1, x2, y2 = (pt[k] for k in ("x1", "y1", "x2", "y2"))
        return float(0.5 * f(x1, y1) + 0.5 * f(x2, y2) - f(0.5 * (x1 + x2), 0.5 * (y1 + y2)))
    if name == "fb-nonneg":
        return float(fb(pt["b"]))
    if name == "t-reduction":
        return float(t_reduction(pt["u"]))
    if name == "z-identity":
        lhs, rhs = check_z_identity(pt["u"], pt["w"])
        return -abs(lhs - rhs) / max(1.0, abs(rhs))
    raise ValueError(f"unknown convexity check {name!r}")


CHECKS = ("jlinv-convex", "t-reduction", "ratio-decreasing", "perspective-convex",
          "fb-nonneg", "z-identity")


def run(name, samples=100_000, seed=1):
    if name == "jlinv-convex":
        return check_jlinv_convex(samples, seed)
    if name == "t-reduction":
        return check_t_reduction()
    if name == "ratio-decreasing":
        return check_ratio_decreasing()
    if name == "perspective-convex":
        return check_perspective_convex(samples, seed)
    if name == "fb-nonneg":
        return check_fb_nonneg()
    if name == "z-identity":
        return check_z_identity_scan(seed=seed)
    raise ValueError(f"unknown convexity check {name!r}; known: {', '.join(CHECKS)}")


def run_all(samples=100_000, seed=1):
    return [run(name, samples, seed) for name in CHECKS]


__all__ = [
    "ConvexityReport", "TOLERANCE", "t_reduction", "check_t_reduction", "check_jlinv_convex",
    "check_ratio_decreasing", "check_perspective_convex", "fb", "check_fb_nonneg",
    "z_point", "check_z_identity", "check_z_identity_scan", "margin_at", "CHECKS", "run",
    "run_all", "log_grid",
]
