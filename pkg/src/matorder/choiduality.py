"""Choi matrices, Kraus forms, the trace pairing and the functional/map correspondence.

Maps ``phi: S -> M_n`` are stored by their values on the basis of ``S``.  For
``tau`` in ``M_m(M_n)`` the map ``theta_tau: M_m -> M_n`` is
``alpha -> sum_kl alpha_kl tau_kl``; it is inverted by :func:`choi_of`.
A functional ``F`` on ``M_n(S)`` corresponds to the map
``Theta_F(x)_kl = F(e^{kl} (x) x)`` and back through
``Upsilon_phi(u) = sum_kl phi(u_kl)_kl``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .matcore import (
    BlockElement,
    ShapeError,
    adjoint,
    as_cmatrix,
    beta_e,
    block_transpose,
    herm_eig,
    inner_partial_trace,
    is_hermitian,
    matrix_unit,
    op_norm,
    psd_check,
)
from .ordspace import SpaceModel, full_space


class UnsupportedDomainError(ValueError):
    """The operation needs the domain to be a full matrix algebra."""


class ConeViolation(ValueError):
    """An input expected in a cone is not; carries the offending eigenpair."""

    def __init__(self, message: str, min_eigenvalue: float, witness):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.witness = witness


def _mat(v) -> np.ndarray:
    return v.mat if isinstance(v, BlockElement) else as_cmatrix(v)


@dataclass(frozen=True, eq=False)
class MapModel:
    """A linear map from ``dom`` into ``M_cod_level``."""

    dom: SpaceModel
    cod_level: int
    coeffs: tuple

    def __post_init__(self):
        n = self.cod_level
        coeffs = tuple(as_cmatrix(c) for c in self.coeffs)
        if len(coeffs) != self.dom.dim:
            raise ShapeError(f"{len(coeffs)} coefficients for a {self.dom.dim}-dimensional domain")
        for c in coeffs:
            if c.shape != (n, n):
                raise ShapeError(f"coefficient of shape {c.shape}, expected {(n, n)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_function(cls, dom: SpaceModel, n: int, f) -> "MapModel":
        return cls(dom, n, tuple(f(b) for b in dom.basis))

    @classmethod
    def from_herm_images(cls, dom: SpaceModel, images) -> "MapModel":
        """Build from the images ``phi(h_j)`` of the Hermitian basis of ``dom``."""
        images = np.asarray(images, dtype=np.complex128)
        coeffs = np.einsum("ij,jab->iab", dom.basis_in_herm, images)
        return cls(dom, images.shape[1], tuple(coeffs))

    @classmethod
    def zero(cls, dom: SpaceModel, n: int) -> "MapModel":
        return cls(dom, n, tuple(np.zeros((n, n)) for _ in dom.basis))

    @cached_property
    def _stack(self) -> np.ndarray:
        return np.array(self.coeffs)

    def apply(self, x) -> np.ndarray:
        c = self.dom.coords(x)
        return np.einsum("i,iab->ab", c, self._stack)

    __call__ = apply

    def amplify(self, w) -> np.ndarray:
        """``phi^(m)`` applied to a level-``m`` element, returned as an ``(m*n, m*n)`` array."""
        b = self.dom.level_blocks(w)
        m, d, n = b.shape[0], self.dom.ambient_dim, self.cod_level
        coords = (self.dom._pinv @ b.reshape(m * m, d * d).T).T.reshape(m, m, -1)
        out = np.einsum("kli,iab->kalb", coords, self._stack)
        return out.reshape(m * n, m * n)

    @cached_property
    def herm_images(self) -> np.ndarray:
        """``phi(h_j)`` for the Hermitian basis ``h_j`` of the domain."""
        return np.array([self.apply(h) for h in self.dom.herm_basis])

    def star(self) -> "MapModel":
        """``phi^*(x) = phi(x^*)^*``."""
        return MapModel(self.dom, self.cod_level,
                        tuple(adjoint(self.apply(adjoint(b))) for b in self.dom.basis))

    @cached_property
    def is_selfadjoint(self) -> bool:
        other = self.star()
        scale = max(1.0, max(op_norm(c) for c in self.coeffs))
        return all(np.max(np.abs(a - b)) <= 1e-10 * scale for a, b in zip(self.coeffs, other.coeffs))

    @cached_property
    def choi(self) -> BlockElement:
        if not self.dom.is_full:
            raise UnsupportedDomainError("Choi matrices need a full matrix algebra as domain")
        d = self.dom.ambient_dim
        blocks = np.array([[self.apply(matrix_unit(k, l, d)) for l in range(d)] for k in range(d)])
        return BlockElement.from_blocks(blocks)

    def _combine(self, other: "MapModel", a: complex, b: complex) -> "MapModel":
        if other.dom is not self.dom and other.dom.basis_matrix.shape != self.dom.basis_matrix.shape:
            raise ShapeError("maps on different domains")
        return MapModel(self.dom, self.cod_level,
                        tuple(a * x + b * y for x, y in zip(self.coeffs, other.coeffs)))

    def __add__(self, other: "MapModel") -> "MapModel":
        return self._combine(other, 1, 1)

    def __sub__(self, other: "MapModel") -> "MapModel":
        return self._combine(other, 1, -1)

    def scale(self, t: complex) -> "MapModel":
        return MapModel(self.dom, self.cod_level, tuple(t * c for c in self.coeffs))


@dataclass(frozen=True, eq=False)
class FunctionalModel:
    """A linear functional on ``M_level(dom)``.

    ``values`` lists ``F(e^{kl} (x) b_i)`` in ``(k, l, i)`` row-major order.
    """

    level: int
    dom: SpaceModel
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if v.size != self.level ** 2 * self.dom.dim:
            raise ShapeError(f"{v.size} values for M_{self.level} over a {self.dom.dim}-dim space")
        object.__setattr__(self, "values", v)

    @property
    def table(self) -> np.ndarray:
        return self.values.reshape(self.level, self.level, self.dom.dim)

    def __call__(self, u) -> complex:
        b = self.dom.level_blocks(u)
        n, d = b.shape[0], self.dom.ambient_dim
        if n != self.level:
            raise ShapeError(f"level {n} element for a level-{self.level} functional")
        coords = (self.dom._pinv @ b.reshape(n * n, d * d).T).T.reshape(n, n, -1)
        return complex(np.sum(coords * self.table))

    @classmethod
    def from_representer(cls, dom: SpaceModel, n: int, r) -> "FunctionalModel":
        """The functional ``u -> Tr(r u)`` on ``M_n(dom)``."""
        r = as_cmatrix(r)
        d = dom.ambient_dim
        vals = np.empty((n, n, dom.dim), dtype=np.complex128)
        for k in range(n):
            for l in range(n):
                for i, b in enumerate(dom.basis):
                    vals[k, l, i] = np.trace(r @ np.kron(matrix_unit(k, l, n), b))
        return cls(n, dom, vals)


# --- theta and the Choi correspondence -------------------------------------------------

def theta_apply(tau: BlockElement, alpha) -> np.ndarray:
    """``theta_tau(alpha) = sum_kl alpha_kl tau_kl``."""
    alpha = as_cmatrix(alpha)
    if alpha.shape != (tau.outer, tau.outer):
        raise ShapeError(f"alpha of shape {alpha.shape} for tau in M_{tau.outer}(M_{tau.inner})")
    return np.einsum("kl,klpq->pq", alpha, tau.blocks())


def theta_map(tau: BlockElement) -> MapModel:
    dom = full_space(tau.outer)
    return MapModel.from_function(dom, tau.inner, lambda a: theta_apply(tau, a))


def choi_of(phi: MapModel) -> BlockElement:
    return phi.choi


class CPCheck(NamedTuple):
    is_cp: bool
    min_eigenvalue: float
    witness: np.ndarray | None

    def __bool__(self) -> bool:
        return self.is_cp


def cp_check(phi: MapModel, tol: float = 1e-9) -> CPCheck:
    """Complete positivity via the Choi matrix; non-self-adjoint maps are never CP."""
    c = choi_of(phi).mat
    if not is_hermitian(c):
        return CPCheck(False, float("nan"), None)
    chk = psd_check(c, tol)
    return CPCheck(chk.is_psd, chk.min_eigenvalue, None if chk.is_psd else chk.witness)


@dataclass(frozen=True, eq=False)
class KrausCertificate:
    gammas: tuple
    residual: float

    def apply(self, alpha) -> np.ndarray:
        alpha = as_cmatrix(alpha)
        if not self.gammas:
            return np.zeros_like(alpha)
        return sum(adjoint(g) @ alpha @ g for g in self.gammas)


def kraus_of(tau: BlockElement, tol: float = 1e-9) -> KrausCertificate:
    """Kraus operators ``gamma_i`` in ``M_{m,n}`` with ``theta_tau(a) = sum gamma_i^* a gamma_i``.

    Eigenvectors are conjugated and then read row-major into ``m x n`` matrices.
    """
    m, n = tau.outer, tau.inner
    if not is_hermitian(tau.mat):
        raise ConeViolation("tau is not Hermitian", float("nan"), None)
    eig = herm_eig(tau.mat)
    if eig.values[0] < -tol:
        raise ConeViolation(f"tau is not positive (eigenvalue {eig.values[0]:.3e})",
                            float(eig.values[0]), eig.vectors[:, 0])
    gammas = tuple(np.sqrt(lam) * np.conj(eig.vectors[:, i]).reshape(m, n)
                   for i, lam in enumerate(eig.values) if lam > tol)
    cert = KrausCertificate(gammas, 0.0)
    residual = max(op_norm(theta_apply(tau, matrix_unit(k, l, m)) - cert.apply(matrix_unit(k, l, m)))
                   for k in range(m) for l in range(m))
    return KrausCertificate(gammas, residual)


def theta_tensor_apply(tau: BlockElement, w) -> np.ndarray:
    """``(theta_tau (x) id)(w) = sum_kl tau_kl (x) w_kl`` for a level-``m`` element ``w``."""
    w = _mat(w)
    m, n = tau.outer, tau.inner
    if w.shape[0] % m or w.shape[0] != w.shape[1]:
        raise ShapeError(f"w of shape {w.shape} is not a level-{m} element")
    d = w.shape[0] // m
    wb = w.reshape(m, d, m, d)
    out = np.einsum("klpq,kalb->paqb", tau.blocks(), wb)
    return out.reshape(n * d, n * d)


# --- trace duality ---------------------------------------------------------------------

def trace_pair(tau: BlockElement, alpha: BlockElement) -> complex:
    """``Tr_m(Tr_n^(m)(tau^t alpha))``."""
    if (tau.outer, tau.inner) != (alpha.outer, alpha.inner):
        raise ShapeError("trace pairing needs equal block shapes")
    prod = BlockElement(tau.outer, tau.inner, block_transpose(tau).mat @ alpha.mat)
    return complex(np.trace(inner_partial_trace(prod)))


def polar_optimizer(tau: BlockElement) -> BlockElement:
    """Unit-norm ``alpha`` with ``trace_pair(tau, alpha) = ||tau||_1``."""
    u, _, vh = np.linalg.svd(tau.mat)
    return BlockElement(tau.outer, tau.inner, np.conj(u @ vh))


# --- Theta / Upsilon -------------------------------------------------------------------

def upsilon_apply(phi: MapModel, u) -> complex:
    """``Upsilon_phi(u) = sum_kl phi(u_kl)_kl``."""
    b = phi.dom.level_blocks(u)
    n = b.shape[0]
    if n != phi.cod_level:
        raise ShapeError(f"level-{n} element for a map into M_{phi.cod_level}")
    return complex(sum(phi.apply(b[k, l])[k, l] for k in range(n) for l in range(n)))


def upsilon_beta_form(phi: MapModel, u) -> complex:
    """``beta_e phi^(n)(u) beta_e^*``, the second expression for ``Upsilon_phi``."""
    n = phi.cod_level
    if phi.dom.level_of(u) != n:
        raise ShapeError("level mismatch")
    b = beta_e(n)
    return complex((b @ phi.amplify(u) @ adjoint(b))[0, 0])


def upsilon_functional(phi: MapModel) -> FunctionalModel:
    n = phi.cod_level
    vals = np.einsum("ikl->kli", phi._stack)
    return FunctionalModel(n, phi.dom, vals)


def theta_of_functional(F: FunctionalModel) -> MapModel:
    """``Theta_F(x)_kl = F(e^{kl} (x) x)``."""
    t = F.table
    return MapModel(F.dom, F.level, tuple(t[:, :, i] for i in range(F.dom.dim)))


def functional_representer(F: FunctionalModel) -> np.ndarray:
    """``R`` with ``F(u) = Tr(R u)``; the domain must be a full matrix algebra."""
    dom = F.dom
    if not dom.is_full:
        raise UnsupportedDomainError("representers need a full matrix algebra as domain")
    n, d = F.level, dom.ambient_dim
    r = np.empty((n * d, n * d), dtype=np.complex128)
    for k in range(n):
        for l in range(n):
            for p in range(d):
                for q in range(d):
                    u = np.kron(matrix_unit(k, l, n), matrix_unit(p, q, d))
                    r[l * d + q, k * d + p] = F(u)
    return r


class FunctionalCheck(NamedTuple):
    is_positive: bool
    selfadjoint: bool
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return self.is_positive


def functional_positive_check(F: FunctionalModel, tol: float = 1e-9) -> FunctionalCheck:
    r = functional_representer(F)
    if not is_hermitian(r):
        return FunctionalCheck(False, False, float("nan"))
    chk = psd_check(r, tol)
    return FunctionalCheck(chk.is_psd, True, chk.min_eigenvalue)
