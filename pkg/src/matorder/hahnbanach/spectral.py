"""Spectral cuts and eigen-ascent violation oracles shared by the cutting-plane solvers.

A self-adjoint map ``psi: S -> M_n`` is parametrized by real coordinates ``x`` of
shape ``(k, n*n)``: ``psi(h_j) = sum_r x[j, r] E_r`` where ``h_j`` is the
Hermitian basis of ``S`` and ``E_r`` that of ``M_n``.  For a level-``m`` element
``z`` and a unit vector ``xi`` the number ``xi^* psi^(m)(z) xi`` is linear in ``x``;
:func:`cut_form` returns its coefficient vector.
"""
from __future__ import annotations

import numpy as np

from .. import randgen
from ..choiduality import MapModel
from ..matcore import hermitian_basis, matrix_unit
from ..ordspace import SpaceModel


class MapCoordinates:
    """Real coordinate system for self-adjoint maps ``S -> M_n``."""

    def __init__(self, space: SpaceModel, n: int):
        self.space = space
        self.n = n
        self.k = space.dim
        self.size = self.k * n * n
        self.E = hermitian_basis(n)
        d = space.ambient_dim
        # coordinates of the matrix units e^{pq} in the Hermitian basis of S (projection)
        units = np.array([[matrix_unit(p, q, d) for q in range(d)] for p in range(d)])
        self.unit_coords = np.einsum("jba,pqab->pqj", space.herm_basis, units)

    def to_map(self, x) -> MapModel:
        images = np.einsum("jr,rab->jab", np.asarray(x).reshape(self.k, -1), self.E)
        return MapModel.from_herm_images(self.space, images)

    def from_map(self, phi: MapModel) -> np.ndarray:
        imgs = phi.herm_images
        return np.real(np.einsum("rba,jab->jr", self.E, imgs)).reshape(-1)

    def unit_tensor(self, x) -> np.ndarray:
        """``Psi[p, q] = psi(P_S e^{pq})`` as a ``(d, d, n, n)`` array."""
        images = np.einsum("jr,rab->jab", np.asarray(x).reshape(self.k, -1), self.E)
        return np.einsum("pqj,jab->pqab", self.unit_coords, images)

    def cut_form(self, z, xi) -> np.ndarray:
        """Coefficients ``a`` with ``a . x = Re(xi^* psi^(m)(z) xi)``."""
        alpha = self.space.herm_coords_level(z)
        m = alpha.shape[1]
        X = np.asarray(xi).reshape(m, self.n)
        G = np.einsum("ka,jkl,lb->jab", X.conj(), alpha, X)
        return np.real(np.einsum("jab,rab->jr", G, self.E)).reshape(-1)


def amplify_tensor(psi_t: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Batch ``psi^(m)(z)`` for ``z`` of shape ``(B, m*d, m*d)``."""
    d, n = psi_t.shape[0], psi_t.shape[2]
    B, size = z.shape[0], z.shape[1]
    m = size // d
    z5 = z.reshape(B, m, d, m, d)
    out = np.einsum("bkplq,pqac->bkalc", z5, psi_t)
    return out.reshape(B, m * n, m * n)


def representer(psi_t: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Batch ``R`` with ``xi^* psi^(m)(z) xi = Tr(R z)``; ``xi`` has shape ``(B, m*n)``."""
    d, n = psi_t.shape[0], psi_t.shape[2]
    B = xi.shape[0]
    m = xi.shape[1] // n
    X = xi.reshape(B, m, n)
    Q = np.einsum("bka,pqac,blc->bklpq", X.conj(), psi_t, X)
    return Q.transpose(0, 2, 4, 1, 3).reshape(B, m * d, m * d)


def _herm(a):
    return (a + np.conj(np.swapaxes(a, -1, -2))) / 2


def _best_in_set(R: np.ndarray, kind: str, sign: float) -> np.ndarray:
    """Maximizer of ``sign * Tr(R z)`` over unit-norm ``z`` (self-adjoint ball or PSD ball)."""
    w, v = np.linalg.eigh(_herm(sign * R))
    if kind == "sa_ball":
        s = np.where(w >= 0, 1.0, -1.0)
    else:
        s = (w > 0).astype(float)
    return np.einsum("bij,bj,bkj->bik", v, s, v.conj())


def _project_batch(space: SpaceModel, z: np.ndarray) -> np.ndarray:
    """Blockwise orthogonal projection onto ``M_m(S)`` for a batch ``(B, m*d, m*d)``."""
    d = space.ambient_dim
    B, size = z.shape[0], z.shape[1]
    m = size // d
    blocks = z.reshape(B, m, d, m, d).transpose(0, 1, 3, 2, 4).reshape(B * m * m, d * d)
    proj = (blocks @ space._pinv.T) @ space.basis_matrix.T
    return proj.reshape(B, m, m, d, d).transpose(0, 1, 3, 2, 4).reshape(B, size, size)


def _restrict(space: SpaceModel, z: np.ndarray, kind: str) -> np.ndarray:
    """Push candidates into ``M_m(S)`` (and its cone), renormalized to unit norm."""
    if space.is_full:
        return z
    p = _herm(_project_batch(space, z))
    if kind == "psd_ball":
        # alternate between the PSD cone and the subspace
        for _ in range(50):
            w, v = np.linalg.eigh(p)
            if np.all(w[:, 0] >= -1e-13):
                break
            p = _herm(_project_batch(space, np.einsum("bij,bj,bkj->bik", v, np.maximum(w, 0), v.conj())))
        w = np.linalg.eigvalsh(p)
        bad = (w[:, 0] < -1e-10) | (np.array([space.level_residual(x) for x in p]) > 1e-8)
        p[bad] = 0.0
    nrm = np.linalg.norm(p, 2, axis=(1, 2))
    return p / np.where(nrm > 1e-12, nrm, 1.0)[:, None, None]


def ascent(space: SpaceModel, psi_t: np.ndarray, level: int, kind: str, rng: np.random.Generator,
           restarts: int = 64, iters: int = 40, sign: float = 1.0, warm=None):
    """Alternating eigen-ascent for ``max sign * lambda_max(sign * psi^(m)(z))``.

    ``z`` ranges over unit-norm self-adjoint (``sa_ball``) or positive (``psd_ball``)
    level-``m`` elements of ``space``.  Returns ``(values, z, xi)`` for every restart,
    where ``values[b] = lambda_max(sign * psi^(m)(z_b))`` and ``xi_b`` the top eigenvector.
    """
    n = psi_t.shape[2]
    size = level * n
    xi = randgen.complex_gaussian(rng, restarts, size)
    if warm is not None and len(warm):
        w = np.asarray(warm)[:restarts]
        xi[: len(w)] = w
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    best_val = np.full(restarts, -np.inf)
    best_z = None
    best_xi = xi.copy()
    for _ in range(iters):
        R = representer(psi_t, xi)
        z = _restrict(space, _best_in_set(R, kind, sign), kind)
        out = sign * amplify_tensor(psi_t, z)
        w, v = np.linalg.eigh(_herm(out))
        val = w[:, -1]
        gain = val - best_val
        improved = gain > 1e-15
        if best_z is None:
            best_z = z.copy()
        best_val = np.where(improved, val, best_val)
        best_z[improved] = z[improved]
        best_xi[improved] = v[improved, :, -1]
        xi = v[:, :, -1]
        # ascent values only increase; stop once every restart has settled
        if np.all(gain <= 1e-10 * np.maximum(1.0, np.abs(val))):
            break
    return best_val, best_z, best_xi


def choi_element(d: int) -> np.ndarray:
    """``sum_pq e^{pq} (x) e^{pq}`` as a level-``d`` element over ``M_d``."""
    v = np.eye(d).reshape(-1)
    return np.outer(v, v).astype(np.complex128)
