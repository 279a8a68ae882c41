import json

import pytest

from lipfree import Mismatch, SuiteConfig, report_diff, run_suite
from lipfree.cli import main
from lipfree.errors import BadSuite
from lipfree.serialization import load_report

ALL_SUITES = ("norm-oracle", "decomposition", "whitney", "retraction",
              "sphere", "commuting-bap", "point-removal", "amenability")


@pytest.mark.parametrize("suite", ALL_SUITES)
def test_suite_runs_and_passes(suite, tmp_path):
    out = tmp_path / f"{suite}.json"
    config = SuiteConfig(suite=suite, seed=7, out=str(out))
    doc, ok = run_suite(config)
    assert ok, [r for r in doc["checks"] if not r["passed"]]
    assert out.exists()
    loaded = load_report(str(out))
    assert loaded["suite"] == suite
    assert loaded["environment"]["timing"] is None


def test_suite_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_suite(SuiteConfig(suite="norm-oracle", seed=3, out=str(a)))
    run_suite(SuiteConfig(suite="norm-oracle", seed=3, out=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_unknown_suite_and_empty_p():
    with pytest.raises(BadSuite):
        run_suite(SuiteConfig(suite="nonsense"))
    with pytest.raises(BadSuite):
        run_suite(SuiteConfig(suite="norm-oracle", p_list=()))
    with pytest.raises(BadSuite):
        run_suite(SuiteConfig(suite="norm-oracle", p_list=(1.5,)))


def test_report_diff_empty_on_identical(tmp_path):
    doc, _ = run_suite(SuiteConfig(suite="sphere", seed=1))
    assert report_diff(doc, doc) == ""


def test_report_diff_seed_change_lists_deltas():
    old, _ = run_suite(SuiteConfig(suite="amenability", seed=1,
                                   p_list=(1.0, 0.5)))
    new, _ = run_suite(SuiteConfig(suite="amenability", seed=2,
                                   p_list=(1.0, 0.5)))
    text = report_diff(old, new)
    # sampled values move with the seed but pass flags stay put
    assert "passed" not in text or "-> False" not in text


def test_report_diff_suite_mismatch():
    a, _ = run_suite(SuiteConfig(suite="sphere", seed=1))
    b, _ = run_suite(SuiteConfig(suite="retraction", seed=1))
    with pytest.raises(Mismatch):
        report_diff(a, b)


def test_report_diff_flags_regression():
    base = {"suite": "s", "checks": [
        {"check": "c", "measured": 1.0, "bound": 5.0, "passed": True}]}
    worse = {"suite": "s", "checks": [
        {"check": "c", "measured": 1.5, "bound": 5.0, "passed": True}]}
    text = report_diff(base, worse)
    assert "regression" in text


def test_cli_generate_and_run(tmp_path):
    space_file = tmp_path / "space.json"
    rc = main(["generate", "--kind", "line", "--param", "n=5",
               "--out", str(space_file)])
    assert rc == 0
    assert space_file.exists()

    report = tmp_path / "report.json"
    rc = main(["run", "--suite", "norm-oracle", "--space", str(space_file),
               "--p", "1,0.5", "--seed", "5", "--out", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["passed"] is True


def test_cli_diff(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", "--suite", "sphere", "--seed", "1", "--out", str(a)])
    main(["run", "--suite", "sphere", "--seed", "1", "--out", str(b)])
    assert main(["diff", str(a), str(b)]) == 0


def test_cli_error_exit_codes(tmp_path):
    # missing space file -> usage/parse error
    rc = main(["run", "--suite", "norm-oracle", "--space",
               str(tmp_path / "missing.json")])
    assert rc == 2
    rc = main(["run", "--suite", "norm-oracle", "--p", "nope"])
    assert rc == 2
    rc = main(["run", "--suite", "norm-oracle", "--p", ""])
    assert rc == 2


def test_cli_tol_override(tmp_path):
    report = tmp_path / "r.json"
    rc = main(["run", "--suite", "norm-oracle", "--seed", "4",
               "--tol-override", "norm_oracle_rel=1e-6",
               "--out", str(report)])
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["config"]["tol_overrides"]["norm_oracle_rel"] == 1e-6


def test_cli_parse_error_line_info(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[0,0],\n  broken\n]}')
    rc = main(["run", "--suite", "norm-oracle", "--space", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "line 2" in err
