"""Verification reports: classification, stable serialisation, atomic writes.

JSON output keeps field order fixed and prints every float with 17
significant digits, so a report parses back to identical values.  Infinite
and NaN floats are written as the strings ``"+inf"``, ``"-inf"``, ``"nan"``.
"""

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

PASS = "pass"
NOISE = "noise"
CANDIDATE_VIOLATION = "candidate-violation"
THEOREM_VIOLATION = "theorem-violation"
CLASSIFICATIONS = (PASS, NOISE, CANDIDATE_VIOLATION, THEOREM_VIOLATION)

EXIT_CODES = {PASS: 0, NOISE: 0, CANDIDATE_VIOLATION: 2, THEOREM_VIOLATION: 3}
_SEVERITY = {c: i for i, c in enumerate(CLASSIFICATIONS)}

_SENTINELS = {"+inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def classify(margin, tol, extended=None, theorem=False):
    """Tolerance policy shared by every check.

    A margin at or above ``-tol`` passes.  Below it, an extended-precision
    value at or above ``-tol`` downgrades the outcome to float noise;
    otherwise the outcome is a violation, of a theorem or of a conjecture.
    """
    if not math.isnan(margin) and margin >= -tol:
        return PASS
    if extended is not None and not math.isnan(extended) and extended >= -tol:
        return NOISE
    return THEOREM_VIOLATION if theorem else CANDIDATE_VIOLATION


def worst(classifications):
    return max(classifications, key=_SEVERITY.__getitem__, default=PASS)


@dataclass
class VerificationReport:
    check_id: str
    config: dict
    samples: int
    min_margin: float
    argmin: dict | None
    classification: str
    tolerance: float
    details: dict = field(default_factory=dict)
    wall_time: float | None = None

    @property
    def exit_code(self):
        return EXIT_CODES[self.classification]

    def as_dict(self, include_timing=False):
        d = {
            "check_id": self.check_id,
            "classification": self.classification,
            "samples": self.samples,
            "min_margin": self.min_margin,
            "tolerance": self.tolerance,
            "config": self.config,
            "argmin": self.argmin,
            "details": self.details,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def empty_report(check_id, config, tolerance):
    """Vacuous scan: nothing sampled, nothing violated."""
    return VerificationReport(check_id, config, 0, math.inf, None, PASS, tolerance)


def combine(check_id, parts, config=None):
    """One report for several sub-checks: worst classification, smallest margin."""
    if not parts:
        raise ValueError("nothing to combine")
    low = min(parts, key=lambda r: (r.min_margin, r.check_id))
    rep = VerificationReport(
        check_id=check_id, config=config or {}, samples=sum(r.samples for r in parts),
        min_margin=low.min_margin, argmin={"part": low.check_id, "instance": low.argmin},
        classification=worst(r.classification for r in parts), tolerance=low.tolerance,
        details={"parts": [r.as_dict() for r in parts]},
    )
    times = [r.wall_time for r in parts if r.wall_time is not None]
    rep.wall_time = sum(times) if times else None
    return rep


# --------------------------------------------------------------------------
# JSON


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"+inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        return _emit(obj.item(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)) or hasattr(obj, "tolist"):
        seq = obj.tolist() if hasattr(obj, "tolist") else obj
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_emit(v, indent, level) for v in seq) + "]"
        items = [pad + _emit(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(obj, indent=2):
    return _emit(obj, indent, 0) + "\n"


def _revive(obj):
    if isinstance(obj, str) and obj in _SENTINELS:
        return _SENTINELS[obj]
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    return obj


def from_json(text):
    return _revive(json.loads(text))


def serialize_report(report, fmt="json", include_timing=False):
    """Byte stream for a report in ``json`` or ``csv`` form."""
    if fmt == "json":
        return to_json(report.as_dict(include_timing)).encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "classification", "samples", "min_margin", "tolerance",
                    "config", "argmin"])
        w.writerow([report.check_id, report.classification, report.samples,
                    _fmt_float(float(report.min_margin)).strip('"'),
                    _fmt_float(float(report.tolerance)).strip('"'),
                    to_json(report.config, indent=0).replace("\n", ""),
                    to_json(report.argmin, indent=0).replace("\n", "")])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(data):
    d = from_json(data.decode() if isinstance(data, bytes) else data)
    missing = {"check_id", "classification", "samples", "min_margin", "tolerance"} - d.keys()
    if missing:
        raise ValueError(f"report is missing {sorted(missing)}")
    if d["classification"] not in CLASSIFICATIONS:
        raise ValueError(f"unknown classification {d['classification']!r}")
    return VerificationReport(
        check_id=d["check_id"], config=d.get("config", {}), samples=int(d["samples"]),
        min_margin=float(d["min_margin"]), argmin=d.get("argmin"),
        classification=d["classification"], tolerance=float(d["tolerance"]),
        details=d.get("details", {}), wall_time=d.get("wall_time"),
    )


def atomic_write(path, data):
    """Write bytes or text via a temporary file in the same directory, then rename."""
    if isinstance(data, str):
        data = data.encode()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
