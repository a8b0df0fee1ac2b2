import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bislant.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from bislant.errors import SchemaError
from bislant.report import CheckResult, VerificationReport, dumps, format_table
from bislant.runner import RunConfig, expand_suites, run

from conftest import DATA


def call(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestReport:
    def test_make_statuses(self):
        assert CheckResult.make("a", 1, 1, 1e-12, 1e-9).passed
        assert CheckResult.make("a", 1, 2, 1.0, 1e-9).failed
        assert CheckResult.make("a", 1, 2, float("nan"), 1e-9).failed

    def test_informational_failure_keeps_report_ok(self):
        rep = VerificationReport("x", "s")
        rep.add(CheckResult.make("a", 0, 1, 1.0, 0.1, informational=True))
        rep.add(CheckResult.premise("b", 0.1, "no J"))
        assert rep.ok
        assert rep.summary == {"pass": 0, "fail": 1, "premise_not_met": 1, "informational": 1}

    def test_worst_prefers_failures(self):
        rep = VerificationReport("x", "s")
        rep.add(CheckResult.make("a", 0, 0, 0.5, 1.0, sample=0))
        rep.add(CheckResult.make("a", 0, 0, 2.0, 1.0, sample=1))
        rep.add(CheckResult.make("a", 0, 0, 0.9, 1.0, sample=2))
        assert rep.worst("a").sample == 1

    def test_table_marks_premise(self):
        rep = VerificationReport("x", "s")
        rep.add(CheckResult.premise("b", 0.1, "no J"))
        assert "PREMISE NOT MET" in format_table([rep])

    def test_dumps_numbers(self):
        assert dumps([0.1, -0.0, float("nan"), np.float64(2.5), 3]) == "[0.10000000000000001, 0, null, 2.5, 3]"

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=8))
    def test_dumps_round_trips_floats(self, xs):
        assert json.loads(dumps({"x": xs}))["x"] == [x + 0.0 for x in xs]


class TestRunner:
    def test_expand_order(self):
        assert expand_suites(["theorem41", "validation"]) == ["validation", "theorem41"]
        with pytest.raises(SchemaError):
            expand_suites(["bogus"])

    def test_missing_complex_structure_is_premise(self):
        res = run(RunConfig(scenario="hopf-s3", suites=("validation", "integrability"), samples=1))
        rep = {r.suite: r for r in res.reports}
        assert rep["validation"].worst("complex_structure.hermitian").status == "premise_not_met"
        assert rep["integrability"].premise.startswith("MissingComplexStructure")
        assert res.ok

    def test_failed_validation_blocks_and_is_reported(self):
        res = run(RunConfig(scenario="hopf-s3", suites=("oneill",), samples=1, tol=1e-16))
        assert [r.suite for r in res.reports] == ["validation", "oneill"]
        assert res.reports[1].premise.startswith("scenario validation failed")
        assert res.exit_status == 1


class TestCli:
    def test_classify_linear_r8(self):
        code, out = call("classify", "--scenario", "paper-r8", "--format", "json")
        doc = json.loads(out)
        assert code == EXIT_OK
        assert doc["classification"] == "proper_bi_slant"
        assert doc["theta2"] == pytest.approx(math.pi / 6, abs=1e-12)
        assert "note" in doc

    def test_inspect_default_point(self):
        code, out = call("inspect", "--scenario", "torus-fibration")
        assert code == EXIT_OK
        assert "scenario: torus-fibration" in out

    def test_inspect_bad_point(self, capsys):
        code, _ = call("inspect", "--scenario", "torus-fibration", "--point", "1,2")
        assert code == EXIT_CONFIG
        assert "error:" in capsys.readouterr().err

    def test_unknown_scenario(self, capsys):
        assert call("verify", "--scenario", "nope")[0] == EXIT_CONFIG
        assert "UnknownScenario" in capsys.readouterr().err

    def test_missing_source(self):
        assert call("verify")[0] == EXIT_CONFIG

    def test_unknown_suite(self):
        assert call("verify", "--scenario", "paper-r8", "--suite", "nope")[0] == EXIT_CONFIG

    def test_verify_pass(self):
        code, out = call("verify", "--scenario", "paper-r8", "--suite", "lemma3.2,validation", "--samples", "2")
        assert code == EXIT_OK
        assert "slant_algebra.P_squared.D1" in out

    def test_verify_fail_exit_status(self):
        code, _ = call("verify", "--file", str(DATA / "twisted-r4.json"), "--suite", "theorem41", "--samples", "1")
        assert code == EXIT_FAIL

    def test_tolerance_override_can_fail(self):
        code, _ = call("verify", "--scenario", "hopf-s3", "--suite", "oneill", "--samples", "1", "--tol", "1e-16")
        assert code == EXIT_FAIL

    def test_json_is_deterministic(self):
        args = ("verify", "--scenario", "torus-fibration", "--suite", "oneill,foliation", "--samples", "2",
                "--format", "json")
        a, b = call(*args)[1], call(*args)[1]
        assert a == b
        assert json.loads(a)["ok"] is True

    def test_engine_override(self):
        _, out = call("verify", "--scenario", "paper-r8", "--suite", "oneill", "--samples", "1",
                      "--engine", "central_fd_4th", "--format", "json")
        assert json.loads(out)["reports"][0]["engine"] == "central_fd_4th"

    def test_report_rerenders_saved_json(self, tmp_path):
        _, out = call("verify", "--file", str(DATA / "twisted-r4.json"), "--suite", "theorem41", "--samples", "1",
                      "--format", "json")
        path = tmp_path / "r.json"
        path.write_text(out)
        code, text = call("report", "--input", str(path))
        assert code == EXIT_FAIL
        assert "theorem41.horizontal_plane" in text and "FAIL" in text
        code, again = call("report", "--input", str(path), "--format", "json")
        assert again == out

    def test_report_bad_input(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text("{}")
        assert call("report", "--input", str(path))[0] == EXIT_CONFIG
