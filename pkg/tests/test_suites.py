import pytest

from modules.config import build_config
from modules.errors import UsageError
from modules.suites import SuiteRunner

SMALL_TAUBNUT = {
    "model": "taubnut",
    "box": {"n_max": 1, "lambda_max": 2, "p_max": 1, "nu_pairs": [[0.0, 0.0], [1.0, 0.5]], "eps_values": [1.0]},
}


@pytest.fixture(scope="module")
def runner():
    return SuiteRunner()


def test_catalog_lists_every_suite(runner):
    assert set(runner.suites) == {"spectrum", "algebra", "recurrence", "unirreps", "oracle"}


def test_unknown_suite_and_model_mismatch(runner):
    with pytest.raises(UsageError):
        runner.run("curvature", build_config())
    with pytest.raises(UsageError):
        runner.run("recurrence", build_config())
    with pytest.raises(UsageError):
        runner.run("oracle", build_config())


def test_flat_spectrum(runner):
    cfg = build_config(overrides={"box": {"n_max": 2, "l_max": 2}})
    report = runner.run("spectrum", cfg)
    rows = {(r["n"], r["l"]): r["E"] for r in report.results}
    assert rows[(0, 1.0)] == pytest.approx(2.5)
    assert rows[(2, 2.0)] == pytest.approx(7.5)
    assert len(rows) == 3 * 2
    assert report.passed


def test_flat_limit_spectrum_is_linear(runner):
    report = runner.run("spectrum", build_config(preset="taubnut-flat-limit"))
    assert report.passed
    for row in report.results:
        assert row["E"] == pytest.approx(row["N"] / 2)
        assert row["eps"] == pytest.approx(1.0)


def test_flat_algebra_suite(runner):
    report = runner.run("algebra", build_config(overrides={"box": {"n_max": 2, "l_max": 3}}))
    assert report.passed
    assert report.summary["worst_residual"] < 1e-10
    assert report.findings["printed_d1d2"]["states_mismatched"] > 0


def test_taubnut_algebra_suite(runner):
    report = runner.run("algebra", build_config(overrides=SMALL_TAUBNUT))
    assert report.passed
    assert "d1_composition" in report.findings
    waived = {w["check"] for w in report.summary["waivers"]}
    assert "D1_composition" in waived
    assert all(w["reason"] for w in report.summary["waivers"])
    assert all(c["check"] not in waived for c in report.summary["worst_offenders"])


def test_recurrence_suite_calibrates_first(runner):
    report = runner.run("recurrence", build_config(overrides=SMALL_TAUBNUT))
    assert report.passed, report.summary["worst_offenders"]
    assert report.findings["l3_scalarization"]["form"] == "nu1"
    assert report.findings["j_plus_stated_coefficient"]["rows_differing"] > 0
    assert report.findings["k_plus_printed_form"]["sup_rel_residual"] > 1e-3
    assert report.summary["counts"]["skipped"] > 0
    assert {r["operator"] for r in report.results} == {"K+", "K-", "J+", "J-"}


def test_flat_unirreps_suite(runner):
    cfg = build_config(overrides={"box": {"p_max": 2, "m_values": [1.0, 2.0]}})
    report = runner.run("unirreps", cfg)
    assert report.passed
    assert report.summary["counts"]["catalog_matches"] > 0
    physical = [r for r in report.results if "flat_m(1, 1, 1)" in r["matches"]]
    assert {(r["m"], r["p"]) for r in physical} == {(m, p) for m in (1.0, 2.0) for p in range(3)}
    assert all(r["paper-match"] == r["catalog_match"] for r in report.results)
    assert all(r["paper-match"] for r in physical)
    assert not report.summary["waivers"]


def test_taubnut_unirreps_suite(runner):
    report = runner.run("unirreps", build_config(overrides=SMALL_TAUBNUT))
    assert report.passed
    assert any("taubnut(1, 1)" in r["matches"] for r in report.results)
    assert all(r["paper-match"] for r in report.results if "taubnut(1, 1)" in r["matches"])


def test_taubnut_branch_interior_sign_is_reported(runner):
    box = {"n_max": 1, "lambda_max": 2, "p_max": 2, "nu_pairs": [[0.0, 0.0]], "eps_values": [1.0]}
    report = runner.run("unirreps", build_config(overrides={"model": "taubnut", "box": box}))
    assert report.passed

    positivity = report.findings["taubnut_branch_positivity"]
    assert positivity["cases_checked"] == 3
    assert 2 in {c["p"] for c in positivity["negative"]}
    waived = {w["check"]: w for w in report.summary["waivers"]}
    assert "taubnut_branch_positivity" in waived
    assert waived["taubnut_branch_positivity"]["reason"]

    substituted = report.findings["taubnut_substituted_phi"]
    assert substituted["points_compared"] == 1 + 2
    point = next(s for s in substituted["points"] if s["p"] == 2 and s["x"] == 1)
    assert point["printed"] == pytest.approx(-656916480.0)
    assert point["factored"] == pytest.approx(-537477120.0)
    assert "taubnut_substituted_phi" in waived


def test_oracle_suite(runner):
    report = runner.run("oracle", build_config(overrides=SMALL_TAUBNUT))
    assert report.passed
    assert {r["kind"] for r in report.results} == {"radial", "angular"}
    assert {r["status"] for r in report.results} == {"pass"}
    betas = {r["beta"] for r in report.results if r["kind"] == "radial"}
    assert {0.5, 1.5, 2.5} <= betas
    assert report.summary["counts"] == {"rows": len(report.results), "failing": 0}


def test_parallel_jobs_do_not_change_the_report(runner):
    serial = runner.run("recurrence", build_config(overrides=SMALL_TAUBNUT))
    parallel = runner.run("recurrence", build_config(overrides={**SMALL_TAUBNUT, "jobs": 4}))
    assert serial.results == parallel.results
