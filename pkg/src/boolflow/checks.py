"""Check registry, replay files and sweep reports shared by the CLI.

A replay file is the instance text preceded by a ``# check <id>`` line.
Constraint instances keep their three-line form (weights, u, w), so the
file is also a plain instance file; other instances are a single line of
numbers.  Floats are written with ``repr`` and replay bit-exactly.
"""

import math
import time

import numpy as np

from . import candidates, flow, hellinger
from .report import VerificationReport, classify, combine
from .scan import ScanConfig, run_scan
from .verifier import (Conjecture5Check, KappaMidpointCheck,
                       KappaReflectionCheck, MembershipCheck, kappa_hessian_scan)

REPLAY_TOLERANCE = 1e-12


def candidate(spec):
    """Candidate by name; ``max:a,b`` combines two named candidates."""
    if spec.startswith("max:"):
        parts = [s.strip() for s in spec[4:].split(",")]
        if len(parts) != 2:
            raise ValueError("max: needs exactly two candidate names")
        return candidates.max_combine(candidates.get(parts[0]), candidates.get(parts[1]),
                                      name=spec)
    return candidates.get(spec)


def membership_check(psi):
    if psi.domain == candidates.HELLINGER:
        return hellinger.HMembershipCheck(psi)
    return MembershipCheck(psi)


def build_check(check_id):
    fixed = {
        "c4:reflection": KappaReflectionCheck,
        "c4:midpoint": KappaMidpointCheck,
        "c5": Conjecture5Check,
        "two-point:identity": hellinger.TwoPointCheck,
        "two-point:averaged": hellinger.AveragedBoundCheck,
    }
    if check_id in fixed:
        return fixed[check_id]()
    kind, _, name = check_id.partition(":")
    if kind == "c3" and name:
        return MembershipCheck(candidate(name))
    if kind == "hellinger" and name:
        return hellinger.HMembershipCheck(candidate(name))
    raise ValueError(f"unknown check {check_id!r}")


# --------------------------------------------------------------------------
# instance <-> text / report argmin


def _instance_type(check):
    if isinstance(check, (hellinger.HMembershipCheck, hellinger.AveragedBoundCheck)):
        return hellinger.HConstraintInstance
    if isinstance(check, MembershipCheck):
        return check.instance_type
    return None


def _flat(check, inst):
    if isinstance(check, KappaMidpointCheck):
        return [*inst[0], *inst[1]]
    return list(inst)


def _unflat(check, vals):
    sizes = {KappaMidpointCheck: 4, Conjecture5Check: 4}
    want = next((n for k, n in sizes.items() if isinstance(check, k)), 2)
    if len(vals) != want:
        raise ValueError(f"{check.check_id} instances have {want} numbers, got {len(vals)}")
    if isinstance(check, KappaMidpointCheck):
        return ((vals[0], vals[1]), (vals[2], vals[3]))
    return tuple(vals)


def replay_text(check, inst):
    head = f"# check {check.check_id}\n"
    if _instance_type(check) is not None:
        return head + inst.to_text()
    return head + " ".join(repr(float(x)) for x in _flat(check, inst)) + "\n"


def parse_replay(text, check=None):
    """(check, instance) from replay text; ``check`` overrides the header."""
    header = None
    for ln in text.splitlines():
        s = ln.strip()
        if s.startswith("# check "):
            header = s[len("# check "):].strip()
            break
    if check is None:
        if header is None:
            raise ValueError("instance file has no '# check' header; pass --candidate")
        check = build_check(header)
    kind = _instance_type(check)
    if kind is not None:
        return check, kind.parse(text)
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        vals = [float(x) for ln in rows for x in ln.split()]
    except ValueError as exc:
        raise ValueError(f"malformed instance file: {exc}") from None
    return check, _unflat(check, vals)


def instance_from_argmin(check, argmin):
    kind = _instance_type(check)
    if kind is not None:
        return kind.parse(argmin["text"])
    if isinstance(check, KappaMidpointCheck):
        return (tuple(argmin["p1"]), tuple(argmin["p2"]))
    if isinstance(check, Conjecture5Check):
        return tuple(argmin[k] for k in ("m_u", "m_w", "e_u", "e_w"))
    return (argmin["u"], argmin["w"])


def evaluate(check, inst, tol):
    """Margin report for one instance, with extended precision when it fails."""
    t0 = time.perf_counter()
    margin = float(check.margin(inst))
    details = {}
    ext = None
    if not margin >= -tol:
        ext = check.extended(inst)
        if ext is not None:
            details["extended_margin"] = float(ext)
    cls = classify(margin, tol, ext, check.theorem)
    rep = VerificationReport(check.check_id, {"check": check.check_id, "tolerance": tol}, 1,
                             margin, check.serialize(inst), cls, tol, details)
    rep.wall_time = time.perf_counter() - t0
    return rep


def agrees(a, b, tol=REPLAY_TOLERANCE):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(b))


# --------------------------------------------------------------------------
# grouped scans


def scan_c4(cfg, jobs=1, hessian_points=25):
    parts = [run_scan(KappaReflectionCheck(), cfg, jobs), run_scan(KappaMidpointCheck(), cfg, jobs)]
    t0 = time.perf_counter()
    hs = kappa_hessian_scan(points=hessian_points)
    hess = VerificationReport(
        "c4:hessian", {"check": "c4:hessian", "points": hs["points"], "h": hs["h"],
                       "range": hs["range"]},
        hs["points"] ** 2, hs["min_eigenvalue"],
        {"a": hs["argmin"][0], "b": hs["argmin"][1]},
        "pass" if hs["passed"] else "candidate-violation", hs["noise_floor"],
        {"method": "richardson second differences"},
    )
    hess.wall_time = time.perf_counter() - t0
    parts.append(hess)
    return parts, combine("c4", parts, {"check": "c4", **cfg.echo()})


def two_point_reports(cfg, jobs=1):
    return [run_scan(hellinger.TwoPointCheck(), cfg, jobs),
            run_scan(hellinger.AveragedBoundCheck(), cfg, jobs)]


# --------------------------------------------------------------------------
# exhaustive sweeps over Boolean functions


def _tables(n, balanced=False, function=None):
    if function is not None:
        return flow.boolean_function(function, n)[None, :], [function]
    tabs = flow.balanced_boolean_tables(n) if balanced else flow.all_boolean_tables(n)
    return tabs, None


def _grid_echo(times):
    return {"points": int(times.size), "lo": float(times[0]), "hi": float(times[-1])}


def _sweep_report(check_id, margins, tabs, names, times, config, tol, theorem):
    t0 = time.perf_counter()
    flat = int(np.argmin(margins))
    i, k = divmod(flat, margins.shape[1])
    m = float(margins[i, k])
    argmin = {"table_index": i, "function": names[i] if names else None,
              "table": [int(x) for x in tabs[i]], "t": float(times[k])}
    rep = VerificationReport(check_id, config, int(margins.size), m, argmin,
                             classify(m, tol, None, theorem), tol,
                             {"functions": int(tabs.shape[0])})
    rep.wall_time = time.perf_counter() - t0
    return rep


def c1_sweep(n, times, epsilon=flow.DEFAULT_EPSILON, tol=1e-9, balanced=False, function=None,
             psi=None):
    """Conjecture-1 margins, or derivative-bound margins for ``psi``, over Boolean functions."""
    t0 = time.perf_counter()
    times = np.asarray(times, dtype=float)
    tabs, names = _tables(n, balanced, function)
    soft = np.where(tabs < 0, 1.0 - epsilon, epsilon)
    s = flow.sweep(soft, times, psi=psi)
    config = {"check": "c1-sweep" if psi is None else f"derivative-bound:{psi.name}",
              "n": n, "epsilon": epsilon, "balanced": balanced, "function": function,
              "t_grid": _grid_echo(times), "tolerance": tol}
    if psi is None:
        rep = _sweep_report("c1-sweep", s.c1_margin, tabs, names, times, config, tol, False)
    else:
        rep = _sweep_report(f"derivative-bound:{psi.name}", s.bound_margin, tabs, names, times,
                            config, tol, psi.proven)
    rep.wall_time = time.perf_counter() - t0
    return rep


def c2_sweep(n, times, epsilon=flow.DEFAULT_EPSILON, tol=1e-9, balanced=False, function=None):
    t0 = time.perf_counter()
    times = np.asarray(times, dtype=float)
    tabs, names = _tables(n, balanced, function)
    s = hellinger.sweep(np.where(tabs < 0, 1.0 - epsilon, epsilon), times)
    config = {"check": "c2-sweep", "n": n, "epsilon": epsilon, "balanced": balanced,
              "function": function, "t_grid": _grid_echo(times), "tolerance": tol}
    rep = _sweep_report("c2-sweep", s.c2_margin, tabs, names, times, config, tol, False)
    rep.wall_time = time.perf_counter() - t0
    return rep


def sweep_point_margin(config, argmin):
    """Recompute one sweep entry from a report's config echo and argmin."""
    p = flow.soften(np.array(argmin["table"], dtype=float), config["epsilon"])
    t = np.array([argmin["t"]])
    check = config["check"]
    if check == "c1-sweep":
        return float(flow.sweep(p.table[None, :], t).c1_margin[0, 0])
    if check == "c2-sweep":
        return float(hellinger.sweep(p.table[None, :], t).c2_margin[0, 0])
    if check.startswith("derivative-bound:"):
        psi = candidate(check.split(":", 1)[1])
        return float(flow.sweep(p.table[None, :], t, psi=psi).bound_margin[0, 0])
    raise ValueError(f"not a sweep report: {check!r}")


def is_sweep(check_id):
    return check_id in ("c1-sweep", "c2-sweep") or check_id.startswith("derivative-bound:")


def scan_config_from(config):
    keys = ("seed", "samples", "refinement_steps", "tolerance", "refine_top")
    return ScanConfig(**{k: config[k] for k in keys if k in config})


__all__ = [
    "candidate", "membership_check", "build_check", "replay_text", "parse_replay",
    "instance_from_argmin", "evaluate", "agrees", "scan_c4", "two_point_reports", "c1_sweep",
    "c2_sweep", "sweep_point_margin", "is_sweep", "scan_config_from",
]
