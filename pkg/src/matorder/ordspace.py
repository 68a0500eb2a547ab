"""Concrete ordered operator spaces living inside a full matrix algebra.

A :class:`SpaceModel` is a subspace ``S`` of ``M_d`` given by a basis.  Level-``m``
elements of ``S`` are ``(m*d, m*d)`` arrays (see :mod:`matorder.matcore`); the
matrix norm and matrix cone are the ones induced from ``M_{m*d}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import randgen
from .matcore import (
    BlockElement,
    ShapeError,
    adjoint,
    as_cmatrix,
    direct_sum,
    hermitian_basis,
    hermitian_coords,
    is_hermitian,
    matrix_unit,
    op_norm,
    positive_part,
    psd_check,
)

SPAN_TOL = 1e-8
INDEP_TOL = 1e-8


def _mat(v) -> np.ndarray:
    return v.mat if isinstance(v, BlockElement) else as_cmatrix(v)


@dataclass(frozen=True, eq=False)
class SpaceModel:
    ambient_dim: int
    basis: tuple
    star_closed: bool = True
    proper_cone: bool = True
    name: str = ""

    def __post_init__(self):
        d = self.ambient_dim
        basis = tuple(as_cmatrix(b) for b in self.basis)
        if not basis:
            raise ValueError("a space needs at least one basis element")
        for b in basis:
            if b.shape != (d, d):
                raise ShapeError(f"basis element of shape {b.shape} in M_{d}")
        object.__setattr__(self, "basis", basis)
        sv = np.linalg.svd(self.basis_matrix, compute_uv=False)
        if sv[-1] < INDEP_TOL * max(1.0, sv[0]):
            raise ValueError(f"basis is linearly dependent (min singular value {sv[-1]:.3e})")
        closed = all(self.residual(adjoint(b)) <= 1e-10 * max(1.0, op_norm(b)) for b in basis)
        if self.star_closed and not closed:
            raise ValueError("basis declared star-closed but b* leaves the span")
        object.__setattr__(self, "star_closed", closed)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim ** 2

    @cached_property
    def basis_matrix(self) -> np.ndarray:
        """``d^2 x k`` matrix whose columns are the row-major flattened basis."""
        return np.stack([b.reshape(-1) for b in self.basis], axis=1)

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.basis_matrix)

    def coords(self, x) -> np.ndarray:
        """Least-squares coordinates of ``x`` in the basis."""
        return self._pinv @ as_cmatrix(x).reshape(-1)

    def residual(self, x) -> float:
        x = as_cmatrix(x)
        proj = self.basis_matrix @ (self._pinv @ x.reshape(-1))
        return float(np.linalg.norm(x.reshape(-1) - proj))

    def element(self, coords) -> np.ndarray:
        d = self.ambient_dim
        return (self.basis_matrix @ np.asarray(coords, dtype=np.complex128)).reshape(d, d)

    def level_blocks(self, w) -> np.ndarray:
        w = _mat(w)
        d = self.ambient_dim
        if w.shape[0] % d or w.shape[0] != w.shape[1]:
            raise ShapeError(f"{w.shape} is not a level element over M_{d}")
        m = w.shape[0] // d
        return w.reshape(m, d, m, d).transpose(0, 2, 1, 3)

    def level_of(self, w) -> int:
        return self.level_blocks(w).shape[0]

    def level_residual(self, w) -> float:
        """Largest distance of a block of ``w`` from the subspace."""
        b = self.level_blocks(w)
        m, d = b.shape[0], self.ambient_dim
        flat = b.reshape(m * m, d * d).T
        res = flat - self.basis_matrix @ (self._pinv @ flat)
        return float(np.max(np.linalg.norm(res, axis=0)))

    def project_level(self, w) -> np.ndarray:
        """Orthogonal projection of every block onto the subspace."""
        b = self.level_blocks(w)
        m, d = b.shape[0], self.ambient_dim
        flat = b.reshape(m * m, d * d).T
        proj = (self.basis_matrix @ (self._pinv @ flat)).T.reshape(m, m, d, d)
        return proj.transpose(0, 2, 1, 3).reshape(m * d, m * d)

    @cached_property
    def herm_basis(self) -> np.ndarray:
        """Hilbert-Schmidt orthonormal Hermitian basis of the subspace, shape ``(k, d, d)``.

        It spans the subspace over the complex numbers, and its real span is the
        self-adjoint part.
        """
        if not self.star_closed:
            raise ValueError("self-adjoint parametrization needs a star-closed space")
        d = self.ambient_dim
        if self.is_full:
            return hermitian_basis(d)
        stack = np.array(self.basis)
        gram = np.einsum("iab,jab->ij", stack.conj(), stack)
        if all(is_hermitian(b) for b in stack) and np.allclose(gram, np.eye(self.dim), atol=1e-12):
            return stack
        rows = []
        for b in self.basis:
            rows.append(hermitian_coords((b + adjoint(b)) / 2))
            rows.append(hermitian_coords((b - adjoint(b)) / 2j))
        _, s, vt = np.linalg.svd(np.array(rows))
        vecs = vt[: self.dim]
        out = np.einsum("kr,rpq->kpq", vecs, hermitian_basis(d))
        out.setflags(write=False)
        return out

    def herm_coords_level(self, w) -> np.ndarray:
        """Complex coefficients ``a_j`` (shape ``(k, m, m)``) with ``w = sum_j a_j (x) h_j``."""
        b = self.level_blocks(w)
        return np.einsum("jqp,klpq->jkl", self.herm_basis, b)

    @cached_property
    def basis_in_herm(self) -> np.ndarray:
        """``T`` with ``basis[i] = sum_j T[i, j] herm_basis[j]``."""
        return np.einsum("jqp,ipq->ij", self.herm_basis, np.array(self.basis))

    def __repr__(self) -> str:
        label = self.name or f"span of {self.dim} matrices"
        return f"SpaceModel({label} in M_{self.ambient_dim})"


def full_space(d: int) -> SpaceModel:
    basis = [matrix_unit(p, q, d) for p in range(d) for q in range(d)]
    return SpaceModel(d, tuple(basis), True, True, f"full:{d}")


def diagonal_space(d: int) -> SpaceModel:
    return SpaceModel(d, tuple(matrix_unit(p, p, d) for p in range(d)), True, True, f"diagonal:{d}")


def hermitian_span(mats, name: str = "hermitian-span") -> SpaceModel:
    mats = [as_cmatrix(m) for m in mats]
    return SpaceModel(mats[0].shape[0], tuple(mats), True, True, name)


def space_from_preset(spec: str) -> SpaceModel:
    kind, _, arg = spec.partition(":")
    if kind == "full":
        return full_space(int(arg))
    if kind == "diagonal":
        return diagonal_space(int(arg))
    raise ValueError(f"unknown space preset {spec!r}")


class ConeCheck(NamedTuple):
    is_member: bool
    min_eigenvalue: float
    residual: float

    def __bool__(self) -> bool:
        return self.is_member


def cone_member(space: SpaceModel, v, tol: float = 1e-9, span_tol: float = SPAN_TOL) -> ConeCheck:
    v = _mat(v)
    res = space.level_residual(v)
    if not is_hermitian(v):
        return ConeCheck(False, float("nan"), res)
    chk = psd_check(v, tol)
    return ConeCheck(bool(chk.is_psd and res <= span_tol), chk.min_eigenvalue, res)


@dataclass(frozen=True)
class GaugeSpec:
    """The operator-norm gauge ``rho_m(v) = c * ||v||``."""

    kind: str = "operator_norm"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("operator_norm", "scaled"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "operator_norm" and self.c != 1.0:
            raise ValueError("use kind='scaled' for c != 1")
        if not self.c > 0:
            raise ValueError("gauge scale must be positive")

    @classmethod
    def scaled(cls, c: float) -> "GaugeSpec":
        return cls("scaled", float(c))

    def __call__(self, v) -> float:
        return gauge_eval(self, v)


def gauge_eval(g: GaugeSpec, v) -> float:
    return g.c * op_norm(_mat(v))


def offdiag_embed(z) -> np.ndarray:
    """``[[0, z], [z^*, 0]]``, a self-adjoint element of twice the level."""
    z = _mat(z)
    r, c = z.shape
    out = np.zeros((r + c, r + c), dtype=np.complex128)
    out[:r, r:] = z
    out[r:, :r] = adjoint(z)
    return out


def compress(v, alpha, d: int) -> np.ndarray:
    """``alpha^* v alpha`` for a level-``m`` element ``v`` over ``M_d`` and scalar ``alpha`` in ``M_{m,k}``."""
    a = np.kron(as_cmatrix(alpha), np.eye(d))
    return adjoint(a) @ _mat(v) @ a


def lambda_betas(n: int, trials: int, seed: int) -> list:
    """Positive invertible ``beta`` candidates: identity, a scalar grid, then Wishart samples."""
    eye = np.eye(n, dtype=np.complex128)
    betas = [eye] + [2.0 ** t * eye for t in range(-8, 9) if t != 0]
    rng = randgen.rng_for(seed, "lambda-beta", n)
    for _ in range(trials):
        g = randgen.complex_gaussian(rng, n)
        w, u = np.linalg.eigh(g @ adjoint(g) / n)
        w = np.maximum(w, 1e-3)
        betas.append((u * w) @ adjoint(u))
    return betas


def lambda_upper(space: SpaceModel, y, g: GaugeSpec, trials: int = 64, seed: int = 0) -> float:
    """Upper bound for the factorization gauge ``inf Tr(beta^2) rho(beta^-1 y beta^-1)``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    y = _mat(y)
    d = space.ambient_dim
    n = space.level_of(y)
    best = float("inf")
    for beta in lambda_betas(n, trials, seed):
        inv = np.kron(np.linalg.inv(beta), np.eye(d))
        w = inv @ y @ inv
        best = min(best, float(np.real(np.trace(beta @ beta))) * gauge_eval(g, w))
    return best


def sample_selfadjoint(space: SpaceModel, level: int, rng: np.random.Generator) -> np.ndarray:
    """Random self-adjoint element of ``M_level(S)`` with unit norm."""
    h = space.herm_basis
    coeffs = [randgen.random_hermitian(rng, level) * rng.standard_normal() for _ in range(len(h))]
    w = sum(np.kron(a, b) for a, b in zip(coeffs, h))
    nrm = op_norm(w)
    return w / nrm if nrm > 0 else w


def sample_cone(space: SpaceModel, level: int, rng: np.random.Generator,
                rank: int | None = None, attempts: int = 5) -> np.ndarray:
    """Random element of the induced cone at ``level``, scaled to unit norm.

    Proper subspaces are handled by alternating projections between the PSD
    cone and ``M_level(S)``; the zero element is returned if no nonzero member
    is reached.
    """
    d = space.ambient_dim
    size = level * d
    if space.is_full:
        return randgen.random_psd(rng, size, rank)
    for _ in range(attempts):
        p = randgen.random_psd(rng, size, rank)
        for _ in range(300):
            p = space.project_level(p)
            p = (p + adjoint(p)) / 2
            lo = np.linalg.eigvalsh(p)[0]
            if lo >= -1e-13:
                break
            p = positive_part(p)
        nrm = op_norm(p)
        if nrm > 1e-6 and cone_member(space, p / nrm):
            return p / nrm
    return np.zeros((size, size), dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class MatrixConvexModel:
    """A matrix convex set, either generated or the positive unit ball.

    ``kind="generated"`` is the smallest matrix convex set containing the
    generators (isometric compressions, direct sums and convex combinations).
    ``kind="ball_positive"`` is the positive part of the unit ball at every level.
    """

    space: SpaceModel
    generators: dict = field(default_factory=dict)
    selfadjoint: bool = True
    kind: str = "generated"

    def __post_init__(self):
        if self.kind not in ("generated", "ball_positive"):
            raise ValueError(f"unknown matrix convex kind {self.kind!r}")
        gens = {int(m): [as_cmatrix(v) for v in vs] for m, vs in self.generators.items() if vs}
        d = self.space.ambient_dim
        for m, vs in gens.items():
            for v in vs:
                if v.shape != (m * d, m * d):
                    raise ShapeError(f"generator of shape {v.shape} at level {m}")
                if self.selfadjoint and not is_hermitian(v):
                    raise ValueError("self-adjoint matrix convex set with non-Hermitian generator")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def ball_positive(cls, space: SpaceModel) -> "MatrixConvexModel":
        return cls(space, {}, True, "ball_positive")

    def all_generators(self) -> list:
        return [(m, v) for m in sorted(self.generators) for v in self.generators[m]]

    def contains_zero(self) -> bool:
        if self.kind == "ball_positive":
            return True
        return any(op_norm(v) <= 1e-12 for _, v in self.all_generators()) or self._zero_in_hull()

    def _zero_in_hull(self) -> bool:
        # 0 lies in K_1 iff some convex combination of compressions vanishes; only the
        # cheap sufficient test (a generator compressing to 0) is attempted here.
        d = self.space.ambient_dim
        for m, v in self.all_generators():
            b = self.space.level_blocks(v)
            for k in range(m):
                if op_norm(b[k, k]) <= 1e-12:
                    return True
        return False

    def contains(self, v, tol: float = 1e-9) -> bool:
        """Exact membership; only available for the positive unit ball."""
        if self.kind != "ball_positive":
            raise NotImplementedError("membership is only decidable for ball_positive sets")
        v = _mat(v)
        return bool(cone_member(self.space, v, tol)) and op_norm(v) <= 1 + tol


def matrix_convex_sample(K: MatrixConvexModel, level: int, count: int, seed: int,
                         with_transcript: bool = False) -> list:
    """Members of ``K_level`` built from the generators by the closure rules."""
    rng = randgen.rng_for(seed, "mcs", level)
    d = K.space.ambient_dim
    out = []
    if K.kind == "ball_positive":
        for i in range(count):
            w = sample_cone(K.space, level, rng) * rng.uniform(0.0, 1.0) if i % 4 else \
                sample_cone(K.space, level, rng)
            out.append((w, ("ball_positive",)) if with_transcript else w)
        return out
    gens = K.all_generators()
    if not gens:
        raise ValueError("matrix convex set has no generators")

    def one():
        picks, total = [], 0
        while total < level or not picks:
            m, v = gens[rng.integers(len(gens))]
            picks.append((m, v))
            total += m
        big = direct_sum(*[v for _, v in picks])
        alpha = randgen.random_isometry(rng, total, level)
        return compress(big, alpha, d), [m for m, _ in picks]

    for _ in range(count):
        w1, t1 = one()
        w2, t2 = one()
        t = rng.uniform()
        w = t * w1 + (1 - t) * w2
        w = (w + adjoint(w)) / 2 if K.selfadjoint else w
        out.append((w, ("convex", float(t), t1, t2)) if with_transcript else w)
    return out
