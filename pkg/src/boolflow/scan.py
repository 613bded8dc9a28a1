"""Seeded counterexample search shared by every sampled check.

A scan draws ``samples`` instances in fixed-size chunks.  Chunk ``c`` uses
the generator ``default_rng([seed, c])``, so the sampled set, and hence the
report, does not depend on how chunks are spread over workers.  The worst
instances are then refined by Nelder-Mead in the check's unconstrained
coordinates, and a negative result is re-evaluated in extended precision.
"""

import heapq
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .report import VerificationReport, classify, empty_report

CHUNK = 4096


@dataclass(frozen=True)
class ScanConfig:
    seed: int = 0
    samples: int = 100_000
    refinement_steps: int = 200
    tolerance: float = 1e-9
    refine_top: int = 8

    def __post_init__(self):
        if self.samples < 0:
            raise ValueError("samples must be >= 0")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.refinement_steps < 0 or self.refine_top < 0:
            raise ValueError("refinement settings must be >= 0")

    def echo(self):
        return {**asdict(self), "chunk": CHUNK}


class Check:
    """Interface of a sampled check; subclasses fill in the hooks."""

    check_id = "check"
    theorem = False

    def params(self):
        """Check-specific configuration echoed into the report."""
        return {}

    def sample(self, rng, size):
        raise NotImplementedError

    def margins(self, batch):
        raise NotImplementedError

    def take(self, batch, i):
        raise NotImplementedError

    def encode(self, inst):
        """Unconstrained coordinates of an instance, or None to skip refinement."""
        return None

    def decode(self, x):
        raise NotImplementedError

    def margin(self, inst):
        raise NotImplementedError

    def extended(self, inst):
        """Extended-precision margin, or None when unavailable."""
        return None

    def serialize(self, inst):
        return inst

    def diagnose(self, inst, margin, cfg):
        """Extra report details for a violating instance."""
        return {}


def _chunk_worst(check, cfg, c, keep):
    lo = c * CHUNK
    size = min(CHUNK, cfg.samples - lo)
    rng = np.random.default_rng([cfg.seed, c])
    batch = check.sample(rng, size)
    with np.errstate(all="ignore"):
        m = np.asarray(check.margins(batch), dtype=float)
    m = np.where(np.isnan(m), -np.inf, m)
    idx = np.argsort(m, kind="stable")[:keep]
    return [(float(m[i]), lo + int(i), check.take(batch, int(i))) for i in idx]


def _refine(check, inst, steps):
    x0 = check.encode(inst)
    if x0 is None or steps == 0:
        return inst, check.margin(inst)

    def f(x):
        try:
            val = check.margin(check.decode(x))
        except (ValueError, FloatingPointError):
            return math.inf
        return val if math.isfinite(val) else math.inf

    with np.errstate(all="ignore"):
        res = minimize(f, np.asarray(x0, dtype=float), method="Nelder-Mead",
                       options={"maxiter": steps, "xatol": 1e-12, "fatol": 1e-16,
                                "adaptive": len(x0) > 4})
    best = check.decode(res.x)
    val = check.margin(best)
    start = check.margin(inst)
    if not val < start:
        return inst, start
    return best, val


def run_scan(check, cfg, jobs=1):
    """Sample, refine, classify; the result is independent of ``jobs``."""
    t0 = time.perf_counter()
    config = {"check": check.check_id, **check.params(), **cfg.echo()}
    if cfg.samples == 0:
        rep = empty_report(check.check_id, config, cfg.tolerance)
        rep.wall_time = time.perf_counter() - t0
        return rep
    n_chunks = -(-cfg.samples // CHUNK)
    keep = max(cfg.refine_top, 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(lambda c: _chunk_worst(check, cfg, c, keep), range(n_chunks)))
    else:
        parts = [_chunk_worst(check, cfg, c, keep) for c in range(n_chunks)]
    pooled = heapq.nsmallest(keep, (x for part in parts for x in part), key=lambda x: (x[0], x[1]))
    sampled_min = pooled[0][0]

    refined = []
    for margin, gidx, inst in pooled[: cfg.refine_top]:
        new_inst, new_margin = _refine(check, inst, cfg.refinement_steps)
        refined.append((new_margin, gidx, new_inst))
    if not refined:
        refined = [(pooled[0][0], pooled[0][1], pooled[0][2])]
    best_margin, best_idx, best_inst = min(refined, key=lambda x: (x[0], x[1]))

    extended = None
    details = {"sampled_min": sampled_min, "argmin_sample_index": best_idx}
    if not best_margin >= -cfg.tolerance:
        ext = check.extended(best_inst)
        if ext is not None:
            extended = float(ext)
            details["extended_margin"] = extended
    cls = classify(best_margin, cfg.tolerance, extended, check.theorem)
    if cls != "pass":
        details.update(check.diagnose(best_inst, best_margin, cfg))
    rep = VerificationReport(
        check_id=check.check_id, config=config, samples=cfg.samples,
        min_margin=float(best_margin), argmin=check.serialize(best_inst),
        classification=cls, tolerance=cfg.tolerance, details=details,
    )
    rep.wall_time = time.perf_counter() - t0
    return rep
