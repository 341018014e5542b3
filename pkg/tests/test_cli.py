"""Driver and command-line tests: flag parsing, report formats, exit
codes, byte-identical JSON, and the guarantee that internal errors
surface as failed checks instead of crashes.
"""

import json

import pytest

import chlax.report as report_mod
from chlax.cli import main
from chlax.report import RunConfig, run


SMALL = ["--n", "1", "--case", "I.1"]


def test_passing_run_exits_zero(capsys):
    assert main(SMALL) == 0
    out = capsys.readouterr().out
    assert "result: PASS" in out
    assert "case I.1 (n=1)" in out


def test_json_reports_are_byte_identical(capsys):
    assert main(SMALL + ["--format", "json"]) == 0
    first = capsys.readouterr().out
    assert main(SMALL + ["--format", "json"]) == 0
    second = capsys.readouterr().out
    assert first == second
    payload = json.loads(first)
    assert payload["schema_version"] == 1
    assert payload["passed"] is True
    assert {s["name"] for s in payload["sections"]} == {
        "compatibility closure",
        "transversal symmetry families",
        "reduction cases",
        "plain/dressed equivalences",
        "exact exponential profiles",
    }


def test_json_omits_timings_text_carries_them(capsys):
    assert main(SMALL + ["--format", "json"]) == 0
    assert "seconds" not in capsys.readouterr().out
    assert main(SMALL) == 0
    assert "s)" in capsys.readouterr().out


def test_latex_format(capsys):
    assert main(SMALL + ["--format", "latex"]) == 0
    out = capsys.readouterr().out
    assert r"\section*{Verification report}" in out
    assert r"\textbf{PASS}" in out
    # underscores in case ids and details are escaped
    assert "lam\\_y" in out


def test_seed_and_samples_are_threaded(capsys):
    assert main(SMALL + ["--seed", "42", "--oracle-samples", "17"]) == 0
    out = capsys.readouterr().out
    assert "17 samples, seed 42" in out


def test_case_selection_restricts_reductions(capsys):
    assert main(["--n", "1", "--case", "I.2,II.2"]) == 0
    out = capsys.readouterr().out
    assert "case I.2 (n=1)" in out
    assert "case I.1" not in out
    # both halves of the pair are selected, so their equivalence runs
    assert "equivalence I.2 ~ II.2" in out
    assert "equivalence I.1" not in out


def test_unknown_case_is_rejected_at_parse_time():
    with pytest.raises(SystemExit) as exc:
        main(["--case", "IX.7"])
    assert exc.value.code == 2


def test_bad_order_is_rejected_at_parse_time():
    with pytest.raises(SystemExit):
        main(["--n", "0"])
    with pytest.raises(SystemExit):
        main(["--n", "one"])


def test_export_and_import_actions(tmp_path, capsys):
    path = tmp_path / "registry.json"
    assert main(["--export-cases", str(path)]) == 0
    assert "wrote 14 cases" in capsys.readouterr().out
    assert main(["--import-cases", str(path)]) == 0
    assert "all match" in capsys.readouterr().out


def test_import_of_tampered_registry_fails(tmp_path, capsys):
    path = tmp_path / "registry.json"
    assert main(["--export-cases", str(path)]) == 0
    capsys.readouterr()
    payload = json.loads(path.read_text())
    payload["cases"]["IV.1"]["parameter"] = "42"
    path.write_text(json.dumps(payload))
    assert main(["--import-cases", str(path)]) == 1
    assert "import failed" in capsys.readouterr().err


def test_import_of_missing_file_fails(tmp_path, capsys):
    assert main(["--import-cases", str(tmp_path / "nope.json")]) == 1
    assert "import failed" in capsys.readouterr().err


def test_failing_check_exits_nonzero(monkeypatch, capsys):
    from chlax.reduction import CaseReport, StageResult

    def fake_verify_case(cid, n, oracle=None):
        return CaseReport(
            case_id=cid, n=n, passed=False,
            stages=(StageResult("jacobian closure", False, "forced failure"),),
        )

    monkeypatch.setattr(report_mod, "verify_case", fake_verify_case)
    assert main(SMALL) == 1
    out = capsys.readouterr().out
    assert "result: FAIL" in out
    assert "forced failure" in out


def test_internal_errors_surface_as_failed_checks(monkeypatch, capsys):
    def explode(cid, n, oracle=None):
        raise RuntimeError("synthetic fault")

    monkeypatch.setattr(report_mod, "verify_case", explode)
    assert main(SMALL) == 1
    out = capsys.readouterr().out
    assert "internal error: synthetic fault" in out
    assert "result: FAIL" in out


def test_fail_fast_stops_scheduling(monkeypatch):
    def explode(n):
        raise RuntimeError("synthetic fault")

    monkeypatch.setattr(report_mod, "_check_compatibility", explode)
    rep = run(RunConfig(ns=(1,), cases=("I.1",), fail_fast=True))
    assert not rep.passed
    # only the first item ran; everything after was skipped
    assert sum(len(sec.items) for sec in rep.sections) == 1


def test_driver_defaults():
    cfg = RunConfig()
    assert cfg.ns == (1, 2, 3)
    assert len(cfg.cases) == 14
    assert cfg.oracle_samples == 100
    assert cfg.seed == 0
    assert cfg.fail_fast is False
