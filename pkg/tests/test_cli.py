"""End-to-end command-line workflows, exit codes, and report determinism."""

import csv
import json
import os

import numpy as np
import pytest

from maxbound.cli import (
    EXIT_CONFIG,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_PRECONDITION,
    EXIT_STABILITY,
    EXIT_VERIFY_FAIL,
    main,
)


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


def _cavity_cfg(n=6, nt=13, extra=None):
    doc = {
        "grid": {"nx": n, "ny": n, "nz": n, "lx": 1.0, "ly": 1.0, "lz": 1.0,
                 "nt": nt, "T": 1.0},
        "case": {"name": "cavity_mode"},
    }
    if extra:
        doc.update(extra)
    return doc


def test_solve_then_certify_pipeline(tmp_path, capsys):
    cfg = _write(tmp_path, "run.json", _cavity_cfg())
    out = str(tmp_path / "out")
    snap = os.path.join(out, "snapshot.bin")
    assert main(["solve", "--config", cfg, "--out", out]) == EXIT_OK
    assert os.path.exists(snap)
    assert main(["certify", "--config", cfg, "--snapshot", snap, "--out", out]) == EXIT_OK
    captured = capsys.readouterr().out
    assert "bound_b(T)" in captured

    with open(os.path.join(out, "report.json")) as fh:
        doc = json.load(fh)
    assert doc["metadata"]["tool"] == "maxbound"
    rows = doc["rows"]
    assert len(rows) == 13
    assert all(row["bound_b"] >= row["trueN"] - 1e-12 for row in rows)

    with open(os.path.join(out, "report.csv")) as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 13
    # CSV and JSON carry the same 17-digit values
    for row_c, row_j in zip(table, rows):
        assert float(row_c["bound_b"]) == row_j["bound_b"]
        assert float(row_c["t"]) == row_j["t"]


def test_reports_are_byte_identical_across_runs(tmp_path):
    cfg = _write(tmp_path, "run.json", _cavity_cfg())
    blobs = {}
    for tag in ("a", "b"):
        out = str(tmp_path / tag)
        snap = os.path.join(out, "snapshot.bin")
        assert main(["solve", "--config", cfg, "--out", out]) == EXIT_OK
        assert main(["certify", "--config", cfg, "--snapshot", snap, "--out", out]) == EXIT_OK
        with open(os.path.join(out, "report.json"), "rb") as fh:
            blobs[tag + ".json"] = fh.read()
        with open(os.path.join(out, "report.csv"), "rb") as fh:
            blobs[tag + ".csv"] = fh.read()
        with open(snap, "rb") as fh:
            blobs[tag + ".bin"] = fh.read()
    assert blobs["a.json"] == blobs["b.json"]
    assert blobs["a.csv"] == blobs["b.csv"]
    assert blobs["a.bin"] == blobs["b.bin"]


def test_certify_with_parameter_optimization(tmp_path):
    doc = _cavity_cfg(extra={
        "perturbation": {"bump": "poly_t2", "delta": 0.01},
        "solver": {"method": "exact"},
        "majorant": {"optimize": "params",
                     "optimizeConfig": {"gammaBracket": [0.1, 10.0]}},
    })
    cfg = _write(tmp_path, "run.json", doc)
    out = str(tmp_path / "out")
    snap = os.path.join(out, "snapshot.bin")
    assert main(["solve", "--config", cfg, "--out", out]) == EXIT_OK
    assert main(["certify", "--config", cfg, "--snapshot", snap, "--out", out]) == EXIT_OK
    with open(os.path.join(out, "report.json")) as fh:
        docr = json.load(fh)
    rows = docr["rows"]
    assert all(row["bound_b"] >= row["trueN"] for row in rows)


def test_exit_codes_for_bad_inputs(tmp_path, capsys):
    # schema violation
    bad = _cavity_cfg()
    bad["grid"]["nt"] = 1
    cfg = _write(tmp_path, "bad.json", bad)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG

    # missing config
    assert main(["solve"]) == EXIT_CONFIG

    # unstable time step
    unstable = _cavity_cfg(n=16, nt=5)
    cfg = _write(tmp_path, "unstable.json", unstable)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_STABILITY

    capsys.readouterr()


def test_snapshot_grid_mismatch_exit_code(tmp_path, capsys):
    cfg_a = _write(tmp_path, "a.json", _cavity_cfg(n=6))
    out = str(tmp_path / "out")
    snap = os.path.join(out, "snapshot.bin")
    assert main(["solve", "--config", cfg_a, "--out", out]) == EXIT_OK
    cfg_b = _write(tmp_path, "b.json", _cavity_cfg(n=5))
    assert main(["certify", "--config", cfg_b, "--snapshot", snap, "--out", out]) == EXIT_MISMATCH
    capsys.readouterr()


def test_theorem_precondition_exit_code(tmp_path, capsys):
    doc = _cavity_cfg(nt=4)
    doc["grid"]["T"] = 0.2
    cfg = _write(tmp_path, "short.json", doc)
    out = str(tmp_path / "out")
    snap = os.path.join(out, "snapshot.bin")
    assert main(["solve", "--config", cfg, "--out", out]) == EXIT_OK
    code = main(["certify", "--config", cfg, "--snapshot", snap, "--out", out,
                 "--theorem", "T1"])
    assert code == EXIT_PRECONDITION
    capsys.readouterr()


def test_refinement_study_passes_for_the_leapfrog_cavity(tmp_path, capsys):
    doc = _cavity_cfg(n=6, nt=13, extra={"verify": {"levels": 2}})
    cfg = _write(tmp_path, "verify.json", doc)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    captured = capsys.readouterr().out
    assert "verification passed" in captured
    with open(tmp_path / "verify.json") as fh:
        table = json.load(fh)
    assert all(o >= 1.9 for o in table["orders_bound"] + table["orders_true"])


def test_refinement_study_passes_for_exact_samples(tmp_path, capsys):
    doc = _cavity_cfg(n=4, nt=9)
    doc["case"] = {"name": "polynomial_source"}
    doc["solver"] = {"method": "exact"}
    cfg = _write(tmp_path, "verify.json", doc)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()


def test_gronwall_subcommand_runs_builtin_suite(tmp_path, capsys):
    assert main(["gronwall"]) == EXIT_OK
    captured = capsys.readouterr().out
    assert captured.count("PASS") == 6
    assert "gronwall suite passed" in captured


def test_gronwall_subcommand_detects_injected_violations(tmp_path, capsys):
    spec = {"cases": [{"name": "broken", "phi": {"kind": "constant", "value": 1.0},
                       "psi": {"kind": "constant", "value": 1.0}, "u0": 0.5,
                       "T": 1.0, "nt": 201, "injectViolation": True}]}
    path = _write(tmp_path, "check.json", spec)
    assert main(["gronwall", "--config", path]) == EXIT_VERIFY_FAIL
    captured = capsys.readouterr().out
    assert "FAIL broken" in captured
