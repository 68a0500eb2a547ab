import xml.etree.ElementTree as ET

import numpy as np
import pytest

from matorder import choiduality as cd
from matorder import harness


def test_unknown_suite():
    with pytest.raises(harness.UnknownSuite):
        harness.run_suite("nope")


def test_sizes_out_of_bounds():
    with pytest.raises(ValueError):
        harness.run_suite("dual-iso", 0, {"m": 9})


def test_dual_iso_seed_7_small():
    r = harness.run_suite("dual-iso", 7, {"m": 2, "n": 2})
    assert r.passed and r.cases_run == 200


def test_eval_isometry_seed_1():
    r = harness.run_suite("eval-isometry", 1, {"d": 2})
    assert r.passed
    assert r.checks["identity attains ||x||"]["max_error"] <= 1e-12


def test_every_suite_has_an_exact_check():
    for name in harness.SUITES:
        if name == "bonsall":
            continue
        r = harness.run_suite(name, 0, {"cases": 3, "maps": 3, "hermitian": 3, "kraus": 3, "triples": 3,
                                        "cone": 3, "lambda": 3, "samples": 3})
        kinds = {c["kind"] for c in r.checks.values()}
        assert "exact" in kinds, name
        for c in r.checks.values():
            assert c["count"] > 0 and "tolerance" in c


def test_report_digest_excludes_wall_time():
    a = harness.run_suite("gauge-axioms", 2, {"cases": 20, "cone": 5, "lambda": 2})
    b = harness.run_suite("gauge-axioms", 2, {"cases": 20, "cone": 5, "lambda": 2})
    b.wall_time = a.wall_time + 10
    assert a.digest == b.digest
    assert "wall_time" not in a.to_json() and "wall_time" in a.to_json(timing=True)


def test_failures_carry_case_details():
    rec = harness._Recorder()
    rec.error("check", "exact", 2.0, 1.0, "abc", 3.0, 1.0)
    rec.truth("flag", "sampled", False, "def")
    assert rec.failures[0] == {"check": "check", "case": "abc", "observed": 3.0, "expected": 1.0,
                               "tolerance": 1.0}
    assert rec.failures[1]["check"] == "flag"
    r = harness.SuiteReport("x", 0, {}, 1, rec.checks, rec.failures)
    assert not r.passed


def test_upsilon_sign_fault_is_caught(monkeypatch):
    orig = cd.upsilon_functional

    def flipped(phi):
        F = orig(phi)
        return cd.FunctionalModel(F.level, F.dom, -F.values)

    monkeypatch.setattr(cd, "upsilon_functional", flipped)
    small = {"cases": 20, "triples": 5, "maps": 5, "hermitian": 5, "kraus": 5, "cone": 5, "lambda": 3,
             "samples": 5, "instances": 2, "functionals": 3, "cone_elements": 5, "scalar": 3}
    results = {name: harness.run_suite(name, 0, small).passed for name in harness.SUITES}
    assert results.pop("theta-order-iso") is False
    assert all(results.values())


def test_bonsall_instances_satisfy_hypothesis():
    from matorder.hahnbanach import verify_hypothesis

    for label, space, phi in harness.bonsall_instances(0, count=6):
        margin, _, _ = verify_hypothesis(space, phi, harness.GaugeSpec(), None, 0, 32, 20)
        assert margin <= 1e-7, label


def test_junit_xml():
    r = harness.run_suite("separation", 0, {"cases": 1})
    rec = harness._Recorder()
    rec.error("broken", "exact", 1.0, 0.0, "c1")
    bad = harness.SuiteReport("fake", 0, {}, 1, rec.checks, rec.failures)
    root = ET.fromstring(harness.junit_xml([r, bad]))
    suites = root.findall("testsuite")
    assert [s.get("name") for s in suites] == ["separation", "fake"]
    assert suites[1].get("failures") == "1"
    assert suites[1].find("testcase/failure") is not None


def test_case_digest_is_stable():
    a = harness.case_digest("x", 1, np.eye(2))
    assert a == harness.case_digest("x", 1, np.eye(2))
    assert a != harness.case_digest("x", 2, np.eye(2))


def test_empty_sizes_use_defaults():
    assert harness.run_suite("eval-isometry", 0, {}).cases_run == 20
    assert harness.run_suite("eval-isometry", 0).cases_run == 20


def test_bonsall_suite_seed_3():
    r = harness.run_suite("bonsall", 3)
    assert r.passed, r.failures
    assert r.checks["extension certificate VALID"]["count"] == 20
    assert r.checks["sampled CP verdict agrees with the Choi test"]["max_error"] == 0.0
