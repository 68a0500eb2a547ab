"""The twelve acceptance criteria, each printing one PASS/FAIL line."""
import time

import numpy as np
import pytest

from matorder import choiduality as cd
from matorder import harness, randgen
from matorder.hahnbanach import NOT_SEPARATED, VALID, matrix_bonsall_extend, separate_point, verify_extension
from matorder.jsonio import dumps
from matorder.matcore import BlockElement, matrix_unit, op_norm, swap_choi
from matorder.ordspace import GaugeSpec, MatrixConvexModel, full_space, lambda_upper, sample_cone


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def check(report_, name):
    return report_.checks[name]


def test_01_choi_roundtrip(report):
    start = time.perf_counter()
    worst = 0.0
    for i in range(500):
        rng = randgen.rng_for(0, "acceptance-choi", i)
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        phi = harness.random_map(rng, m, n)
        psi = cd.theta_map(cd.choi_of(phi))
        for k in range(m):
            for l in range(m):
                e = matrix_unit(k, l, m)
                worst = max(worst, op_norm(psi(e) - phi(e)))
    elapsed = time.perf_counter() - start
    report(1, "Choi round trip", worst <= 1e-10 and elapsed < 5, f"max error {worst:.2e}, {elapsed:.2f} s")


def test_02_choi_criterion(report):
    r = harness.run_suite("choi-kraus", 0, {"maps": 0, "kraus": 0})
    c = check(r, "tau PSD iff theta_tau x id keeps 200 PSD probes PSD")
    disagreements = sum(f["check"] == "tau PSD iff theta_tau x id keeps 200 PSD probes PSD" for f in r.failures)
    report(2, "Choi criterion", c["count"] == 500 and disagreements == 0,
           f"{c['count']} Hermitian tau, {disagreements} disagreements")


def test_03_kraus(report):
    worst = 0.0
    for i in range(200):
        rng = randgen.rng_for(0, "acceptance-kraus", i)
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        tau = BlockElement(m, n, randgen.random_psd(rng, m * n, int(rng.integers(1, m * n + 1))))
        worst = max(worst, cd.kraus_of(tau).residual)
    try:
        cd.kraus_of(BlockElement(2, 2, swap_choi(2)))
        witness = None
    except cd.ConeViolation as e:
        witness = e.min_eigenvalue
    ok = worst <= 1e-8 and witness is not None and abs(witness + 1) <= 1e-10
    report(3, "Kraus fidelity", ok, f"max residual {worst:.2e}, transpose witness {witness}")


def test_04_trace_duality(report):
    r = harness.run_suite("dual-iso", 0)
    polar = check(r, "polar optimizer attains trace norm")
    pos = check(r, "positive pairs pair positively")
    ok = r.passed and polar["count"] == 200 and pos["count"] == 200
    report(4, "trace duality", ok, f"polar error {polar['max_error']:.2e}, positivity defect {pos['max_error']:.2e}")


def test_05_theta_order_iso(report):
    r = harness.run_suite("theta-order-iso", 0, {"triples": 0})
    eq = check(r, "F positive iff Theta_F CP")
    inv = max(check(r, "Upsilon after Theta is the identity")["max_error"],
              check(r, "Theta after Upsilon is the identity")["max_error"])
    ok = r.passed and eq["count"] == 500 and eq["max_error"] == 0 and inv <= 1e-12
    report(5, "positive functionals <-> CP maps", ok, f"{eq['count']} functionals, inverse error {inv:.2e}")


def test_06_pairing_identity(report):
    r = harness.run_suite("theta-order-iso", 0, {"cases": 0})
    c = check(r, "pairing identity F((theta x id)(w)) = <tau, Theta_F(w)>")
    report(6, "pairing identity", r.passed and c["count"] == 200, f"max error {c['max_error']:.2e}")


def test_07_gauge_axioms(report):
    r = harness.run_suite("gauge-axioms", 0, {"cone": 0, "lambda": 0})
    names = ["rho(v + w) = max(rho(v), rho(w))", "rho(a* v a) <= ||a||^2 rho(v)",
             "offdiag embedding keeps the norm"]
    worst = max(check(r, n)["max_error"] for n in names)
    ok = r.passed and all(check(r, n)["count"] == 500 for n in names) and worst <= 1e-10
    report(7, "gauge axioms", ok, f"max error {worst:.2e}")


def test_08_matrix_bonsall(report):
    start = time.perf_counter()
    bad, zero_margins = [], True
    for i, (label, space, phi) in enumerate(harness.bonsall_instances(0, 20)):
        cert = matrix_bonsall_extend(space, phi, budget=200, seed=i)
        chk = verify_extension(cert, space, phi, fresh_seed=1000 + i)
        if cert.status != VALID or chk.status != VALID or chk.exact_cp_margin < -1e-9:
            bad.append((i, cert.status, chk.exact_cp_margin))
        if label in ("zero", "cp"):
            zero_margins &= cert.cp_margin == 0.0 and chk.exact_cp_margin == 0.0
    elapsed = time.perf_counter() - start
    ok = not bad and zero_margins and elapsed < 120
    report(8, "matrix Bonsall extension", ok, f"{20 - len(bad)}/20 VALID, {elapsed:.1f} s, failures {bad}")


def test_09_separation(report):
    ball = MatrixConvexModel.ball_positive(full_space(2))
    cert = separate_point(ball, 2 * np.eye(2), 1)
    inside = separate_point(ball, np.eye(2) / 2, 1)
    ok = cert.set_margin <= 1e-6 and cert.point_margin >= 0.4 and inside.status == NOT_SEPARATED
    report(9, "separation", ok,
           f"set margin {cert.set_margin:.2e}, point margin {cert.point_margin:.4f}, I/2 {inside.status}")


def test_10_lambda_cross_bound(report):
    space, n, g = full_space(2), 2, GaugeSpec()
    funcs = [cd.upsilon_functional(harness.random_cp_contraction(randgen.rng_for(0, "acc-F", j), 2, n))
             for j in range(20)]
    worst = -np.inf
    for i in range(100):
        rng = randgen.rng_for(0, "acc-u", i)
        u = sample_cone(space, n, rng) * rng.uniform(0.1, 2.0)
        bound = lambda_upper(space, u, g, 64, seed=i)
        worst = max(worst, max(F(u).real for F in funcs) - bound)
    report(10, "lambda cross-bound", worst <= 1e-8, f"max F(u) - lambda(u) = {worst:.3e}")


def test_11_eval_isometry(report):
    r = harness.run_suite("eval-isometry", 0)
    att = check(r, "identity attains ||x||")
    exc = check(r, "no CP contraction exceeds ||x||")
    report(11, "eval isometry", r.passed, f"attain error {att['max_error']:.1e}, excess {exc['max_error']:.1e}")


def test_12_determinism(report):
    a = dumps(harness.run_all(0).to_json())
    b = dumps(harness.run_all(0).to_json())
    report(12, "determinism", a == b, f"{len(a)} bytes, digest {harness._sha(a)[:16]}")
