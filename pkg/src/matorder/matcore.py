"""Dense complex matrices and the block-matrix calculus used everywhere else.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  An element of
``M_m(M_n)`` is stored as an ``(m*n, m*n)`` array whose row index ``(k, p)``
maps to ``k*n + p`` (outer index major), which is the ordering produced by
``np.kron``.  Indices are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

HERM_TOL = 1e-10
PSD_TOL = 1e-9


class ShapeError(ValueError):
    """Raised when matrix shapes do not agree with an operation."""


def as_cmatrix(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def _require_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def unit(k: int, n: int) -> np.ndarray:
    """Row vector ``e_k`` in ``M_{1,n}``."""
    e = np.zeros((1, n), dtype=np.complex128)
    e[0, k] = 1.0
    return e


def matrix_unit(k: int, l: int, n: int) -> np.ndarray:
    """``e^{k,l} = e_k^* e_l``."""
    return adjoint(unit(k, n)) @ unit(l, n)


def beta_e(n: int) -> np.ndarray:
    """The row ``(e_1, ..., e_n)`` in ``M_{1,n}(M_{1,n})``, flattened to ``1 x n^2``."""
    return np.hstack([unit(k, n) for k in range(n)])


@dataclass(frozen=True)
class BlockElement:
    """An element of ``M_outer(M_inner)``."""

    outer: int
    inner: int
    mat: np.ndarray

    def __post_init__(self):
        mat = as_cmatrix(self.mat)
        size = self.outer * self.inner
        if self.outer < 1 or self.inner < 1 or mat.shape != (size, size):
            raise ShapeError(
                f"block element ({self.outer}, {self.inner}) needs a {size}x{size} matrix, "
                f"got {mat.shape}"
            )
        object.__setattr__(self, "mat", mat)

    def block(self, k: int, l: int) -> np.ndarray:
        n = self.inner
        return self.mat[k * n:(k + 1) * n, l * n:(l + 1) * n]

    def blocks(self) -> np.ndarray:
        """View as an ``(m, m, n, n)`` array indexed ``[k, l, p, q]``."""
        m, n = self.outer, self.inner
        return self.mat.reshape(m, n, m, n).transpose(0, 2, 1, 3)

    @classmethod
    def from_blocks(cls, blocks) -> "BlockElement":
        b = np.asarray(blocks, dtype=np.complex128)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3]:
            raise ShapeError(f"blocks must have shape (m, m, n, n), got {b.shape}")
        m, n = b.shape[0], b.shape[2]
        return cls(m, n, b.transpose(0, 2, 1, 3).reshape(m * n, m * n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mat.shape

    def adjoint(self) -> "BlockElement":
        return BlockElement(self.outer, self.inner, adjoint(self.mat))


def kron_embed(alpha, x) -> BlockElement:
    """Identify ``alpha (x) x`` with the block matrix ``[alpha_ij x]``."""
    alpha, x = as_cmatrix(alpha), as_cmatrix(x)
    _require_square(alpha, "alpha")
    _require_square(x, "x")
    return BlockElement(alpha.shape[0], x.shape[0], np.kron(alpha, x))


def beta_pair(alpha, gamma) -> complex:
    """``sum_ij alpha_ij gamma_ij``, computed as ``beta_e (alpha (x) gamma) beta_e^*``."""
    alpha, gamma = as_cmatrix(alpha), as_cmatrix(gamma)
    _require_square(alpha, "alpha")
    if alpha.shape != gamma.shape:
        raise ShapeError(f"shape mismatch {alpha.shape} vs {gamma.shape}")
    b = beta_e(alpha.shape[0])
    return complex((b @ np.kron(alpha, gamma) @ adjoint(b))[0, 0])


def block_transpose(tau: BlockElement) -> BlockElement:
    """``(tau^t)_{k,l} = (tau_{l,k})^t``; coincides with the full transpose."""
    b = tau.blocks()
    return BlockElement.from_blocks(b.transpose(1, 0, 3, 2))


def inner_partial_trace(tau: BlockElement) -> np.ndarray:
    """The ``m x m`` matrix of block traces."""
    m, n = tau.outer, tau.inner
    return np.trace(tau.mat.reshape(m, n, m, n), axis1=1, axis2=3)


def total_trace(tau: BlockElement) -> complex:
    return complex(np.trace(inner_partial_trace(tau)))


def trace_norm(tau) -> float:
    mat = tau.mat if isinstance(tau, BlockElement) else as_cmatrix(tau)
    return float(np.sum(np.linalg.svd(mat, compute_uv=False)))


def op_norm(a) -> float:
    a = a.mat if isinstance(a, BlockElement) else as_cmatrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def upper_left_embed(x, target_dim: int) -> np.ndarray:
    x = as_cmatrix(x)
    r, c = x.shape
    if target_dim < max(r, c):
        raise ShapeError(f"target dimension {target_dim} smaller than {x.shape}")
    out = np.zeros((target_dim, target_dim), dtype=np.complex128)
    out[:r, :c] = x
    return out


def direct_sum(*mats) -> np.ndarray:
    mats = [as_cmatrix(m) for m in mats]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def hermitian_defect(a) -> float:
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        return float("inf")
    return float(np.max(np.abs(a - adjoint(a)), initial=0.0))


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    a = as_cmatrix(a)
    return hermitian_defect(a) <= tol * max(1.0, op_norm(a))


class HermEig(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def herm_eig(a) -> HermEig:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    a = as_cmatrix(a)
    _require_square(a)
    if not is_hermitian(a):
        raise ValueError(f"matrix is not Hermitian (defect {hermitian_defect(a):.3e})")
    h = (a + adjoint(a)) / 2
    w, v = np.linalg.eigh(h)
    return HermEig(w, v)


class PsdCheck(NamedTuple):
    is_psd: bool
    min_eigenvalue: float
    witness: np.ndarray

    def __bool__(self) -> bool:
        return self.is_psd


def psd_check(a, tol: float = PSD_TOL) -> PsdCheck:
    """PSD test; the witness is the eigenvector for the smallest eigenvalue."""
    eig = herm_eig(a)
    lo = float(eig.values[0])
    return PsdCheck(lo >= -tol, lo, eig.vectors[:, 0])


def lambda_max(a) -> float:
    return float(herm_eig(a).values[-1])


def top_eigvec(a) -> tuple[float, np.ndarray]:
    eig = herm_eig(a)
    return float(eig.values[-1]), eig.vectors[:, -1]


def hermitian_sign(a) -> np.ndarray:
    """Unitary ``sign(a)`` for Hermitian ``a`` (zero eigenvalues mapped to +1)."""
    eig = herm_eig(a)
    s = np.where(eig.values >= 0, 1.0, -1.0)
    return (eig.vectors * s) @ adjoint(eig.vectors)


def positive_projector(a) -> np.ndarray:
    """Projection onto the span of eigenvectors with positive eigenvalue."""
    eig = herm_eig(a)
    v = eig.vectors[:, eig.values > 0]
    return v @ adjoint(v)


def positive_part(a) -> np.ndarray:
    eig = herm_eig(a)
    w = np.clip(eig.values, 0, None)
    return (eig.vectors * w) @ adjoint(eig.vectors)


def max_entangled(n: int) -> np.ndarray:
    """``Omega = sum_k e_k (x) e_k`` as a length ``n^2`` vector (unnormalized)."""
    return np.eye(n, dtype=np.complex128).reshape(n * n)


def swap_choi(n: int) -> np.ndarray:
    """``sum_{k,l} e^{k,l} (x) e^{l,k}``: the Choi matrix of the transpose map."""
    out = np.zeros((n * n, n * n), dtype=np.complex128)
    for k in range(n):
        for l in range(n):
            out[k * n + l, l * n + k] = 1.0
    return out


@lru_cache(maxsize=None)
def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of the Hermitian ``n x n`` matrices.

    Returned as an array of shape ``(n*n, n, n)``: diagonal units first, then
    for each ``p < q`` the symmetric and antisymmetric off-diagonal pair.
    """
    out = []
    for p in range(n):
        out.append(matrix_unit(p, p, n))
    r = 1 / np.sqrt(2)
    for p in range(n):
        for q in range(p + 1, n):
            out.append(r * (matrix_unit(p, q, n) + matrix_unit(q, p, n)))
            out.append(1j * r * (matrix_unit(p, q, n) - matrix_unit(q, p, n)))
    basis = np.array(out)
    basis.setflags(write=False)
    return basis


def hermitian_coords(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in :func:`hermitian_basis`."""
    n = a.shape[0]
    return np.real(np.einsum("rpq,qp->r", hermitian_basis(n), a))
