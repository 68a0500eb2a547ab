import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matorder import choiduality as cd
from matorder import randgen
from matorder.harness import random_cp_contraction, random_map
from matorder.matcore import BlockElement, matrix_unit, op_norm, swap_choi, trace_norm
from matorder.ordspace import diagonal_space, full_space


def identity_map(d):
    return cd.MapModel.from_function(full_space(d), d, lambda a: a)


def transpose_map(d):
    return cd.MapModel.from_function(full_space(d), d, lambda a: a.T)


def test_choi_of_identity_is_rank_one():
    c = cd.choi_of(identity_map(2)).mat
    om = np.eye(2).reshape(-1)
    assert np.allclose(c, np.outer(om, om))


def test_choi_of_transpose_is_swap():
    assert np.allclose(cd.choi_of(transpose_map(3)).mat, swap_choi(3))


def test_cp_check_verdicts():
    assert cd.cp_check(identity_map(2)).is_cp
    chk = cd.cp_check(transpose_map(2))
    assert not chk.is_cp
    assert chk.min_eigenvalue == pytest.approx(-1.0, abs=1e-12)
    # transpose is positive but not 2-positive: its Choi matrix is the witness
    assert chk.witness is not None


def test_cp_check_rejects_non_selfadjoint():
    phi = cd.MapModel.from_function(full_space(2), 2, lambda a: 1j * a)
    assert not cd.cp_check(phi).is_cp


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_theta_inverts_choi(m, n, seed):
    phi = random_map(randgen.rng_for(seed, "rt"), m, n)
    psi = cd.theta_map(cd.choi_of(phi))
    for k in range(m):
        for l in range(m):
            e = matrix_unit(k, l, m)
            assert np.allclose(psi(e), phi(e), atol=1e-12)


def test_theta_tensor_apply_on_products():
    rng = randgen.rng_for(0, "tensor")
    tau = BlockElement(2, 3, randgen.complex_gaussian(rng, 6))
    a, b = randgen.complex_gaussian(rng, 2), randgen.complex_gaussian(rng, 3)
    # (theta x id)(a (x) b) = theta(a) (x) b
    assert np.allclose(cd.theta_tensor_apply(tau, np.kron(a, b)), np.kron(cd.theta_apply(tau, a), b))


def test_kraus_identity_channel():
    cert = cd.kraus_of(cd.choi_of(identity_map(3)))
    assert len(cert.gammas) == 1
    g = cert.gammas[0]
    # a single unitary multiple of the identity
    assert np.allclose(g.conj().T @ g, np.eye(3))
    assert cert.residual < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_kraus_reproduces_map(m, n, seed):
    rng = randgen.rng_for(seed, "kraus")
    tau = BlockElement(m, n, randgen.random_psd(rng, m * n, 2))
    cert = cd.kraus_of(tau)
    assert len(cert.gammas) <= 2
    a = randgen.complex_gaussian(rng, m)
    assert np.allclose(cert.apply(a), cd.theta_apply(tau, a), atol=1e-10)


def test_kraus_rejects_transpose():
    with pytest.raises(cd.ConeViolation) as exc:
        cd.kraus_of(cd.choi_of(transpose_map(2)))
    assert exc.value.min_eigenvalue == pytest.approx(-1.0, abs=1e-10)


def test_polar_optimizer_attains_trace_norm():
    rng = randgen.rng_for(1, "polar")
    tau = BlockElement(2, 2, randgen.complex_gaussian(rng, 4))
    u = cd.polar_optimizer(tau)
    assert op_norm(u) == pytest.approx(1.0)
    assert abs(cd.trace_pair(tau, u)) == pytest.approx(trace_norm(tau))


def test_trace_pair_is_bilinear_not_sesquilinear():
    rng = randgen.rng_for(2, "pair")
    tau = BlockElement(2, 2, randgen.complex_gaussian(rng, 4))
    a = BlockElement(2, 2, randgen.complex_gaussian(rng, 4))
    assert cd.trace_pair(tau, BlockElement(2, 2, 1j * a.mat)) == pytest.approx(1j * cd.trace_pair(tau, a))


def test_upsilon_of_identity_is_omega_state():
    # Upsilon_id(u) = <Omega, u Omega>, the unnormalized maximally entangled functional
    F = cd.upsilon_functional(identity_map(2))
    om = np.eye(2).reshape(-1)
    rng = randgen.rng_for(3, "ups")
    u = randgen.complex_gaussian(rng, 4)
    assert F(u) == pytest.approx(om @ u @ om)


def test_functional_positivity_matches_theta():
    dom = full_space(2)
    F = cd.FunctionalModel.from_representer(dom, 2, np.eye(4))
    assert cd.functional_positive_check(F).is_positive
    assert cd.cp_check(cd.theta_of_functional(F)).is_cp
    G = cd.FunctionalModel.from_representer(dom, 2, np.diag([1.0, -1.0, 1.0, 1.0]))
    assert not cd.functional_positive_check(G).is_positive
    assert not cd.cp_check(cd.theta_of_functional(G)).is_cp


def test_representer_roundtrip():
    rng = randgen.rng_for(4, "rep")
    dom = full_space(2)
    r = randgen.complex_gaussian(rng, 6)
    F = cd.FunctionalModel.from_representer(dom, 3, r)
    assert np.allclose(cd.functional_representer(F), r)


def test_representer_needs_full_domain():
    F = cd.FunctionalModel(2, diagonal_space(2), np.zeros(8))
    with pytest.raises(cd.UnsupportedDomainError):
        cd.functional_representer(F)


def test_choi_needs_full_domain():
    phi = cd.MapModel.zero(diagonal_space(2), 2)
    with pytest.raises(cd.UnsupportedDomainError):
        phi.choi


def test_random_cp_contraction_bounds():
    rng = randgen.rng_for(5, "cpc")
    phi = random_cp_contraction(rng, 3, 2)
    assert cd.cp_check(phi).is_cp
    assert op_norm(phi(np.eye(3))) <= 1 + 1e-12
