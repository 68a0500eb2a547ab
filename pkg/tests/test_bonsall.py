import numpy as np
import pytest

from matorder import choiduality as cd
from matorder import randgen
from matorder.hahnbanach import (
    BUDGET_EXCEEDED,
    INVALID,
    VALID,
    BonsallInfeasible,
    ExtensionCertificate,
    HypothesisError,
    bonsall_scalar,
    bonsall_scalar_violation,
    matrix_bonsall_extend,
    verify_extension,
)
from matorder.harness import bonsall_instances, random_cp_contraction
from matorder.ordspace import GaugeSpec, diagonal_space, full_space


def test_scalar_bonsall_interval():
    # on R: p(x) = |x| sampled at +-1, cone generated by 1 with q(1) = -1/2
    # so g(1) >= 1/2 and |g| <= 1
    g = bonsall_scalar(1, [[1.0]], [([1.0], 1.0), ([-1.0], 1.0)], [-0.5])
    assert 0.5 - 1e-9 <= g[0] <= 1 + 1e-9


def test_scalar_bonsall_infeasible():
    with pytest.raises(BonsallInfeasible):
        bonsall_scalar(1, [[1.0]], [([1.0], 1.0), ([-1.0], 1.0)], [-2.0])


def test_scalar_violation_measure():
    assert bonsall_scalar_violation(np.array([2.0]), [], [([1.0], 1.0)], []) == pytest.approx(1.0)


def test_zero_map_certifies_exactly():
    space = full_space(2)
    cert = matrix_bonsall_extend(space, cd.MapModel.zero(space, 2))
    assert cert.status == VALID and cert.rounds == 0
    assert cert.cp_margin == 0.0 and cert.exact_cp_margin == 0.0


def test_cp_contraction_returns_itself():
    space = full_space(2)
    phi = random_cp_contraction(randgen.rng_for(0, "cp"), 2, 3)
    cert = matrix_bonsall_extend(space, phi)
    assert cert.status == VALID
    assert all(np.array_equal(a, b) for a, b in zip(cert.psi.coeffs, phi.coeffs))


def test_negative_identity_needs_a_shift():
    # phi = -id/2 is not CP; psi = 0 works (psi - phi = id/2 is CP, 0 <= rho)
    space = full_space(2)
    phi = cd.MapModel.from_function(space, 2, lambda a: -0.5 * a)
    cert = matrix_bonsall_extend(space, phi, seed=3)
    assert cert.status == VALID
    chk = verify_extension(cert, space, phi, fresh_seed=11)
    assert chk.status == VALID and chk.exact_cp_margin >= -1e-9


def test_hypothesis_violation_raises():
    space = full_space(2)
    transpose = cd.MapModel.from_function(space, 2, lambda a: a.T)
    with pytest.raises(HypothesisError) as exc:
        matrix_bonsall_extend(space, transpose)
    assert exc.value.margin == pytest.approx(0.5, abs=1e-6)
    assert exc.value.level == 2


def test_non_selfadjoint_rejected():
    space = full_space(2)
    phi = cd.MapModel.from_function(space, 2, lambda a: 0.1j * a)
    with pytest.raises(ValueError):
        matrix_bonsall_extend(space, phi)


def test_difference_instances_are_sound():
    # every VALID certificate re-verifies under ten fresh seeds
    for label, space, phi in bonsall_instances(5, count=4)[2:]:
        cert = matrix_bonsall_extend(space, phi, seed=1)
        assert cert.status == VALID, label
        for s in range(10):
            chk = verify_extension(cert, space, phi, fresh_seed=100 + s)
            assert chk.status == VALID
            assert chk.exact_cp_margin >= -1e-9


def test_proper_subspace_instance():
    space = diagonal_space(2)
    # phi itself breaks the gauge bound, so psi has to be found by the cutting-plane loop
    phi = cd.MapModel.from_function(space, 2, lambda x: -np.array([[x[0, 0], 0.9 * x[0, 0]],
                                                                   [0.9 * x[0, 0], x[1, 1]]]))
    cert = matrix_bonsall_extend(space, phi, seed=2)
    assert cert.status == VALID and cert.rounds > 1
    assert cert.exact_cp_margin is None
    assert verify_extension(cert, space, phi, fresh_seed=9).status == VALID


def test_tampered_certificate_fails():
    space = full_space(2)
    phi = random_cp_contraction(randgen.rng_for(1, "tamper"), 2, 2)
    cert = matrix_bonsall_extend(space, phi)
    big = ExtensionCertificate(cert.psi.scale(10.0), cert.levels_checked, 0.0, 0.0)
    chk = verify_extension(big, space, phi)
    assert chk.status == INVALID
    # gauge margin ~ 10 ||phi(1)|| - 1
    assert chk.gauge_margin == pytest.approx(10 * np.linalg.norm(phi(np.eye(2)), 2) - 1, rel=1e-6)


def test_scaled_gauge():
    space = full_space(2)
    phi = cd.MapModel.from_function(space, 2, lambda a: -1.5 * a)
    g = GaugeSpec.scaled(2.0)
    cert = matrix_bonsall_extend(space, phi, g, seed=4)
    assert cert.status in (VALID, BUDGET_EXCEEDED)
    assert cert.status == VALID
    assert verify_extension(cert, space, phi, g, fresh_seed=5).status == VALID
