import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from boolflow import scalar
from boolflow.cli import main, t_grid
from boolflow.report import parse_report

ETA_TEXT = "0.1 0.45 0.45\n0.99 0.9999 0.0001\n0.01 0.9999 0.0001\n"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_t_grid_forms():
    assert t_grid("5").size == 5
    g = t_grid("0.1:1:10")
    assert g[0] == 0.1 and g[-1] == 1.0 and g.size == 10
    assert t_grid("0.1,0.5").tolist() == [0.1, 0.5]


def test_flow_dictator(capsys):
    code, out, _ = run(["flow", "--function", "dictator", "--n", "4", "--t-grid", "20",
                        "--epsilon", "1e-12"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["t", "p_t", "gamma", "dgamma", "mi", "margin"]
    assert len(rows) == 20
    for r in rows:
        assert abs(float(r["gamma"]) - scalar.h2(float(r["p_t"]))) <= 1e-10


def test_flow_writes_file(tmp_path, capsys):
    code, out, _ = run(["flow", "--function", "majority", "--candidate", "phi", "--out", str(tmp_path)],
                       capsys)
    assert code == 0 and out == ""
    assert len(list(tmp_path.glob("*.csv"))) == 1


def test_predicate_file(tmp_path, capsys):
    f = tmp_path / "and.txt"
    f.write_text("2\n1\n1\n1\n-1\n")
    assert run(["flow", "--predicate-file", str(f)], capsys)[0] == 0
    f.write_text("2\n1\n1\n")
    code, _, err = run(["flow", "--predicate-file", str(f)], capsys)
    assert code == 1 and "expected 4 entries" in err
    code, _, err = run(["flow", "--predicate-file", str(tmp_path / "missing.txt")], capsys)
    assert code == 1 and "cannot read" in err


@pytest.mark.parametrize("argv", [["bogus"], ["flow", "--no-such-flag"], ["scan-c3", "--samples", "-3"],
                                  ["flow", "--jobs", "0"], ["verify-psi", "--candidate", "nope"],
                                  ["flow", "--t-grid", "a:b"]])
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_replay_eta_guess_instance(tmp_path, capsys):
    f = tmp_path / "violating_instance.txt"
    f.write_text(ETA_TEXT)
    code, out, _ = run(["replay", "--file", str(f), "--candidate", "eta-guess"], capsys)
    assert code == 2
    rep = parse_report(out)
    assert rep.min_margin < 0 and rep.classification == "candidate-violation"


def test_replay_without_header_needs_candidate(tmp_path, capsys):
    f = tmp_path / "inst.txt"
    f.write_text(ETA_TEXT)
    assert run(["replay", "--file", str(f)], capsys)[0] == 1


def test_scan_replay_round_trip(tmp_path, capsys):
    code, _, _ = run(["scan-c3", "--candidate", "eta-guess", "--samples", "20000", "--seed", "42",
                      "--out", str(tmp_path)], capsys)
    assert code == 2
    report_file = tmp_path / "c3-eta-guess.json"
    replay_file = tmp_path / "c3-eta-guess.replay.txt"
    assert report_file.exists() and replay_file.exists()
    stored = parse_report(report_file.read_text())

    code, out, _ = run(["replay", "--file", str(replay_file)], capsys)
    assert code == 2
    assert abs(parse_report(out).min_margin - stored.min_margin) <= 1e-12 * max(1, abs(stored.min_margin))

    code, out, _ = run(["replay", "--file", str(report_file)], capsys)
    assert code == 2
    assert parse_report(out).details["reproduced"] is True


def test_appendix(capsys):
    code, out, _ = run(["appendix", "--all", "--samples", "20000"], capsys)
    assert code == 0
    rep = parse_report(out)
    parts = rep.details["parts"]
    assert {p["check_id"] for p in parts} >= {"convexity:jlinv-convex", "convexity:ratio-decreasing",
                                              "convexity:perspective-convex", "convexity:fb-nonneg"}
    assert all(p["min_margin"] >= -1e-10 for p in parts)


def test_zeta(capsys):
    code, out, _ = run(["zeta", "0.75", "0.25", "0.4", "0.4"], capsys)
    assert code == 0
    d = json.loads(out)
    assert abs(d["oracle"]["value"] - d["closed_form"]) <= 1e-3
    assert run(["zeta", "0.05", "0.5", "0.9", "0.5"], capsys)[0] == 1


def test_verify_psi(tmp_path, capsys):
    assert run(["verify-psi", "--candidate", "phi"], capsys)[0] == 0
    f = tmp_path / "inst.txt"
    f.write_text(ETA_TEXT)
    assert run(["verify-psi", "--candidate", "eta-guess", "--file", str(f)], capsys)[0] == 2


def test_mi_sweep(capsys):
    code, out, _ = run(["mi-sweep", "--n", "3", "--epsilon", "1e-6"], capsys)
    assert code == 0
    assert parse_report(out).min_margin >= -1e-5


def test_hellinger_commands(capsys):
    assert run(["hellinger", "--n", "2", "--samples", "3000"], capsys)[0] == 0
    assert run(["hellinger", "--n", "2", "--samples", "3000", "--candidate", "hellinger-natural"], capsys)[0] == 2


def test_csv_format(capsys):
    code, out, _ = run(["scan-c5", "--samples", "2000", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("check_id,classification")


def test_jobs_byte_identical(tmp_path, capsys):
    outs = []
    for jobs in ("1", "4"):
        d = tmp_path / jobs
        assert run(["scan-c4", "--samples", "10000", "--seed", "3", "--jobs", jobs,
                    "--hessian-points", "7", "--out", str(d)], capsys)[0] == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "boolflow.cli", "appendix", "--check", "fb-nonneg"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert np.isfinite(json.loads(out.stdout)["min_margin"])
