"""Command-line front end: ``boolflow <subcommand> [flags]``.

Exit status: 0 pass or noise, 2 candidate violation, 3 theorem violation,
1 usage or I/O error.  Reports go to stdout unless ``--out DIR`` is given,
in which case each report (and a replay file for every scanned argmin) is
written atomically into DIR.
"""

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import checks, convexity, flow, phizeta
from .candidates import HELLINGER, RegistrationError, verify_contract
from .report import (VerificationReport, atomic_write, classify, combine, parse_report,
                     serialize_report, to_json)
from .scan import ScanConfig, run_scan

log = logging.getLogger("boolflow")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def t_grid(text):
    """``N`` (log grid on [1e-3, 3]), ``lo:hi:N`` (log grid) or ``t1,t2,...``."""
    try:
        if "," in text:
            times = np.array([float(x) for x in text.split(",")])
        elif ":" in text:
            lo, hi, n = text.split(":")
            times = flow.default_t_grid(int(n), float(lo), float(hi))
        else:
            times = flow.default_t_grid(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad t-grid {text!r}: {exc}") from None
    if times.size == 0 or not np.isfinite(times).all() or (times < 0).any():
        raise argparse.ArgumentTypeError("t-grid needs finite times >= 0")
    return times


def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=_positive_int, default=100_000)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--tol", type=float, default=None,
                        help="violation tolerance (default 1e-9; 1e-10 for appendix checks)")
    common.add_argument("--out", help="directory for report and replay files")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    pred = _Parser(add_help=False)
    pred.add_argument("--n", type=int, default=3)
    pred.add_argument("--function", choices=flow.BUILTIN_FUNCTIONS)
    pred.add_argument("--predicate-file")
    pred.add_argument("--epsilon", type=float, default=flow.DEFAULT_EPSILON)
    pred.add_argument("--t-grid", type=t_grid, default=flow.default_t_grid())

    p = _Parser(prog="boolflow", description="Numerical checks for entropy and Hellinger "
                "flows of Boolean functions under the BSC semigroup.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("flow", parents=[common, pred], help="trace gamma, gamma', MI over a t-grid")
    s.add_argument("--candidate", help="margin column becomes gamma' - psi(mean, gamma)")

    s = sub.add_parser("mi-sweep", parents=[common, pred],
                       help="exhaustive sweep over Boolean functions on n bits")
    s.add_argument("--balanced", action="store_true")
    s.add_argument("--candidate", help="sweep the derivative bound for this candidate")

    s = sub.add_parser("zeta", parents=[common], help="zeta oracle and bounds for one query")
    s.add_argument("query", nargs=4, type=float, metavar=("M_U", "M_W", "E_U", "E_W"))
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--grid", type=int, default=61)

    s = sub.add_parser("verify-psi", parents=[common],
                       help="candidate contract, or its margin on an instance file")
    s.add_argument("--candidate", required=True)
    s.add_argument("--file", help="instance file (weights, u, w lines)")

    s = sub.add_parser("scan-c3", parents=[common], help="membership scan for a candidate")
    s.add_argument("--candidate", default="phi")
    s.add_argument("--refinement-steps", type=int, default=200)

    s = sub.add_parser("scan-c4", parents=[common], help="both kappa sub-inequalities + Hessian")
    s.add_argument("--hessian-points", type=int, default=25)

    sub.add_parser("scan-c5", parents=[common], help="four-variable phi/zeta inequality")

    s = sub.add_parser("hellinger", parents=[common, pred],
                       help="Hellinger sweep, two-point checks, optional candidate scan")
    s.add_argument("--balanced", action="store_true")
    s.add_argument("--candidate", help="Hellinger-domain candidate to scan")

    s = sub.add_parser("appendix", parents=[common], help="convexity and scalar theorem checks")
    s.add_argument("--all", action="store_true", help="run every check (the default)")
    s.add_argument("--check", action="append", choices=convexity.CHECKS)

    s = sub.add_parser("replay", parents=[common], help="re-evaluate a replay file or report")
    s.add_argument("--file", required=True)
    s.add_argument("--candidate")
    return p


# --------------------------------------------------------------------------
# output


def _write(args, name, data):
    if args.out:
        path = os.path.join(args.out, name)
        try:
            atomic_write(path, data)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc}") from None
        log.info("wrote %s", path)
        return path
    sys.stdout.write(data.decode() if isinstance(data, bytes) else data)
    return None


def _stem(check_id):
    return check_id.replace(":", "-").replace(",", "-").replace("(", "").replace(")", "")


def emit(args, report, replays=()):
    """Write the report (stdout or DIR/<id>.<fmt>) and any replay files; return exit code."""
    _write(args, f"{_stem(report.check_id)}.{args.format}", serialize_report(report, args.format))
    if args.out:
        for check, inst in replays:
            if inst is not None:
                _write(args, f"{_stem(check.check_id)}.replay.txt", checks.replay_text(check, inst))
    return report.exit_code


def _tol(args, default=1e-9):
    return default if args.tol is None else args.tol


def _cfg(args, **extra):
    try:
        return ScanConfig(seed=args.seed, samples=args.samples, tolerance=_tol(args), **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _scan(check, cfg, jobs):
    rep = run_scan(check, cfg, jobs)
    inst = None
    if rep.argmin is not None:
        inst = checks.instance_from_argmin(check, rep.argmin)
    return rep, (check, inst)


def _candidate(name):
    try:
        return checks.candidate(name)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None


def _predicate(args):
    if args.predicate_file:
        try:
            with open(args.predicate_file) as fh:
                return flow.parse_predicate(fh.read(), args.epsilon)
        except OSError as exc:
            raise UsageError(f"cannot read {args.predicate_file}: {exc}") from None
    return flow.named_predicate(args.function or "dictator", args.n, args.epsilon)


# --------------------------------------------------------------------------
# subcommands


def cmd_flow(args):
    p = _predicate(args)
    psi = _candidate(args.candidate) if args.candidate else None
    trace = flow.flow_trace(p, args.t_grid, psi)
    _write(args, "flow.csv", trace.to_csv())
    return 0


def cmd_mi_sweep(args):
    psi = _candidate(args.candidate) if args.candidate else None
    if args.predicate_file:
        raise UsageError("mi-sweep works on built-in functions; use flow for a predicate file")
    rep = checks.c1_sweep(args.n, args.t_grid, args.epsilon, _tol(args), args.balanced,
                          args.function, psi)
    return emit(args, rep)


def cmd_zeta(args):
    try:
        q = phizeta.ZetaQuery(*args.query)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = phizeta.zeta_oracle(q, phizeta.OracleBudget(grid=args.grid, restarts=args.restarts,
                                                      seed=args.seed))
    out = {"query": list(q.as_tuple()), "oracle": res.to_dict()}
    if q.e_u > 0 and q.e_w > 0:
        out["lower_bound"] = phizeta.zeta_lower_bound(q)
    if q.m_u == 1.0 - q.m_w and q.e_u == q.e_w:
        out["closed_form"] = phizeta.zeta_symmetric(q.m_w, q.e_w)
    _write(args, "zeta.json", to_json(out))
    return 0


def cmd_verify_psi(args):
    psi = _candidate(args.candidate)
    tol = _tol(args)
    if args.file is None:
        failures = verify_contract(psi, seed=args.seed)
        rep = VerificationReport(f"contract:{psi.name}", {"candidate": psi.name, "seed": args.seed},
                                 10_000, 0.0 if not failures else -math.inf, None,
                                 "pass" if not failures else "candidate-violation", tol,
                                 {"failures": failures, "domain": psi.domain})
        return emit(args, rep)
    check, inst = checks.parse_replay(_read(args.file), checks.membership_check(psi))
    rep = checks.evaluate(check, inst, tol)
    return emit(args, rep)


def cmd_scan_c3(args):
    psi = _candidate(args.candidate)
    rep, replay = _scan(checks.membership_check(psi),
                        _cfg(args, refinement_steps=args.refinement_steps), args.jobs)
    return emit(args, rep, [replay])


def cmd_scan_c4(args):
    parts, rep = checks.scan_c4(_cfg(args), args.jobs, args.hessian_points)
    replays = []
    for part in parts[:2]:
        check = checks.build_check(part.check_id)
        replays.append((check, checks.instance_from_argmin(check, part.argmin)))
    return emit(args, rep, replays)


def cmd_scan_c5(args):
    rep, replay = _scan(checks.build_check("c5"), _cfg(args), args.jobs)
    return emit(args, rep, [replay])


def cmd_hellinger(args):
    cfg = _cfg(args)
    parts = [checks.c2_sweep(args.n, args.t_grid, args.epsilon, cfg.tolerance, args.balanced,
                             args.function)]
    replays = []
    scans = [checks.build_check("two-point:identity"), checks.build_check("two-point:averaged")]
    if args.candidate:
        psi = _candidate(args.candidate)
        if psi.domain != HELLINGER:
            raise UsageError(f"{args.candidate} is not a Hellinger-domain candidate")
        scans.append(checks.membership_check(psi))
    for check in scans:
        rep, replay = _scan(check, cfg, args.jobs)
        parts.append(rep)
        replays.append(replay)
    return emit(args, combine("hellinger", parts, {"check": "hellinger", **cfg.echo()}), replays)


def cmd_appendix(args):
    names = args.check or convexity.CHECKS
    parts = []
    for name in names:
        r = convexity.run(name, samples=args.samples, seed=args.seed)
        parts.append(r.to_report(args.tol))
    return emit(args, combine("appendix", parts, {"check": "appendix", "seed": args.seed,
                                                  "samples": args.samples}))


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _replay_report(args, old):
    """Recompute a stored argmin; the new report carries both margins."""
    tol = old.tolerance if args.tol is None else args.tol
    cid = old.check_id
    if old.argmin is None:
        return old
    if cid in ("c4", "hellinger", "appendix"):
        parts = []
        for d in old.details.get("parts", []):
            sub = VerificationReport(d["check_id"], d.get("config", {}), d["samples"],
                                     d["min_margin"], d.get("argmin"), d["classification"],
                                     d["tolerance"], d.get("details", {}))
            parts.append(_replay_report(args, sub))
        return combine(cid, parts, old.config)
    if cid == "c4:hessian":
        return old
    if cid.startswith("convexity:"):
        m = convexity.margin_at(cid.split(":", 1)[1], old.argmin)
        rep = VerificationReport(cid, old.config, 1, m, old.argmin,
                                 classify(m, tol, None, True), tol)
    elif checks.is_sweep(cid):
        m = checks.sweep_point_margin(old.config, old.argmin)
        theorem = cid.startswith("derivative-bound:") and _candidate(cid.split(":", 1)[1]).proven
        rep = VerificationReport(cid, old.config, 1, m, old.argmin,
                                 classify(m, tol, None, theorem), tol)
    else:
        check = checks.build_check(cid)
        rep = checks.evaluate(check, checks.instance_from_argmin(check, old.argmin), tol)
        rep.config = old.config
    rep.details = {**rep.details, "reported_margin": old.min_margin,
                   "reproduced": checks.agrees(rep.min_margin, old.min_margin)}
    if not rep.details["reproduced"]:
        log.error("%s: replayed margin %r differs from reported %r", cid, rep.min_margin,
                  old.min_margin)
    return rep


def cmd_replay(args):
    text = _read(args.file)
    if text.lstrip().startswith("{"):
        try:
            old = parse_report(text)
        except (ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed report {args.file}: {exc}") from None
        rep = _replay_report(args, old)
        return emit(args, rep)
    check = checks.membership_check(_candidate(args.candidate)) if args.candidate else None
    check, inst = checks.parse_replay(text, check)
    return emit(args, checks.evaluate(check, inst, _tol(args)))


COMMANDS = {
    "flow": cmd_flow, "mi-sweep": cmd_mi_sweep, "zeta": cmd_zeta, "verify-psi": cmd_verify_psi,
    "scan-c3": cmd_scan_c3, "scan-c4": cmd_scan_c4, "scan-c5": cmd_scan_c5,
    "hellinger": cmd_hellinger, "appendix": cmd_appendix, "replay": cmd_replay,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.jobs < 1:
        print("boolflow: error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args)
    except (UsageError, RegistrationError, ValueError, KeyError) as exc:
        print(f"boolflow: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
