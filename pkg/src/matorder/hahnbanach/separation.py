"""Separating a point from a matrix convex set by a self-adjoint map into ``M_n``.

The master LP maximizes ``xi0^* phi^(n)(v0) xi0`` over the coordinates of ``phi``
subject to spectral cuts ``xi^* phi^(m)(w) xi <= 1`` collected for members ``w``
of the set.  A final rescaling by the largest sampled ``lambda_max(phi^(m)(w))``
makes the set constraints hold exactly on everything that was checked.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import randgen
from ..choiduality import MapModel
from ..matcore import as_cmatrix, is_hermitian, max_entangled, op_norm
from ..ordspace import MatrixConvexModel, matrix_convex_sample
from .lp import DualSimplex
from .spectral import MapCoordinates, ascent

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-7
SET_TOL = 1e-6
POINT_TOL = 1e-4
GAP_TOL = 1e-4

VALID = "VALID"
NOT_SEPARATED = "NOT_SEPARATED"


@dataclass
class SeparationCertificate:
    phi: MapModel
    set_margin: float
    point_margin: float
    status: str
    levels_checked: list = field(default_factory=list)
    rounds: int = 0
    seed: int = 0
    transcript: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.set_margin <= SET_TOL and self.point_margin > POINT_TOL


def _top(mat) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    return float(w[-1]), v[:, -1]


class _SetOracle:
    def __init__(self, K: MatrixConvexModel, coords: MapCoordinates, m_max: int,
                 restarts: int, iters: int):
        self.K = K
        self.coords = coords
        self.m_max = m_max
        self.restarts = restarts
        self.iters = iters
        self.warm: dict = {}

    @property
    def levels(self) -> list:
        if self.K.kind == "ball_positive":
            return list(range(1, self.m_max + 1))
        return sorted(self.K.generators)

    def cuts(self, x, rng, limit: int = 8):
        """Violated rows ``a . x <= 1`` and the largest ``lambda_max(phi^(m)(w)) - 1`` seen."""
        c = self.coords
        cuts, worst = [], -np.inf
        if self.K.kind == "generated":
            phi = c.to_map(x)
            for m, g in self.K.all_generators():
                lam, xi = _top(phi.amplify(g))
                worst = max(worst, lam - 1)
                if lam - 1 > VIOLATION_TOL:
                    cuts.append((m, c.cut_form(g, xi), lam - 1))
            return cuts, (0.0 if worst == -np.inf else worst)
        psi_t = c.unit_tensor(x)
        for m in self.levels:
            vals, zs, xis = ascent(c.space, psi_t, m, "psd_ball", rng, self.restarts, self.iters,
                                   warm=self.warm.get(m))
            order = np.argsort(-vals)
            self.warm[m] = xis[order[:16]]
            worst = max(worst, float(vals[order[0]]) - 1)
            seen = []
            for i in order:
                gap = vals[i] - 1
                if gap <= VIOLATION_TOL or len(seen) >= limit:
                    break
                if any(abs(vals[i] - vals[j]) <= 1e-9 for j in seen):
                    continue
                seen.append(i)
                cuts.append((m, c.cut_form(zs[i], xis[i]), float(gap)))
        return cuts, worst


def _early_member(K: MatrixConvexModel, v0, n: int) -> bool:
    if K.kind == "ball_positive":
        return K.contains(v0)
    if op_norm(v0) <= 1e-12:
        return True
    return any(np.allclose(v0, g, atol=1e-10) for g in K.generators.get(n, []))


def separate_point(K: MatrixConvexModel, v0, n: int, budget: int = 200, seed: int = 0,
                   m_max: int | None = None, restarts: int = 64, iters: int = 40,
                   bound: float = 100.0) -> SeparationCertificate:
    """Self-adjoint ``phi: V -> M_n`` with ``phi^(m)(K_m) <= I`` but ``phi^(n)(v0)`` not ``<= I``."""
    space = K.space
    d = space.ambient_dim
    v0 = as_cmatrix(v0)
    if v0.shape != (n * d, n * d):
        raise ValueError(f"v0 of shape {v0.shape} is not a level-{n} element")
    if not is_hermitian(v0):
        raise ValueError("v0 must be self-adjoint")
    if space.level_residual(v0) > 1e-8:
        raise ValueError("v0 is not in M_n(V)")
    if not K.contains_zero():
        raise ValueError("the matrix convex set must contain 0 at level 1")
    m_max = max(2, n, d) if m_max is None else m_max
    coords = MapCoordinates(space, n)
    oracle = _SetOracle(K, coords, m_max, restarts, iters)
    zero = MapModel.zero(space, n)
    if _early_member(K, v0, n):
        return SeparationCertificate(zero, -1.0, -1.0, NOT_SEPARATED, oracle.levels, 0, seed)

    rng = randgen.rng_for(seed, "separate")
    N = coords.size
    hnorm = max(op_norm(h) for h in space.herm_basis)
    box = bound / hnorm
    rows: list = []
    transcript: list = []
    # start at the maximally entangled vector (the beta_e pairing of phi^(n)(v0))
    xi0 = max_entangled(n) / np.sqrt(n)
    best_x, best_pm = np.zeros(N), -np.inf
    rounds = 0
    for _ in range(4):
        lp = DualSimplex(N, objective=coords.cut_form(v0, xi0), bound=box)
        for a, b in rows:
            lp.add_rows(a, b)
        # 0 is in K, so the zero map is feasible; keep the best rescaled iterate of the pass
        pass_x, pass_val = np.zeros(N), 0.0
        while rounds < budget:
            rounds += 1
            sol = lp.solve()
            if not sol.feasible:
                break
            cuts, worst = oracle.cuts(sol.x, rng)
            scaled = sol.x / max(1.0, 1.0 + worst)
            val = float(lp.c @ scaled)
            if val > pass_val:
                pass_x, pass_val = scaled, val
            # the LP value bounds the pass optimum from above, rescaled iterates from below
            if not cuts or sol.objective - pass_val <= GAP_TOL * max(1.0, abs(sol.objective)):
                break
            for m, a, gap in cuts:
                nrm = np.linalg.norm(a)
                if nrm < 1e-14:
                    continue
                rows.append((a / nrm, 1.0 / nrm))
                lp.add_rows(a / nrm, 1.0 / nrm)
                transcript.append({"round": rounds, "level": m, "violation": gap})
        x = _rescale(oracle, pass_x, rng)
        lam, xi = _top(coords.to_map(x).amplify(v0))
        log.debug("objective pass: point margin %.3e after %d rounds", lam - 1, rounds)
        gain = lam - 1 - best_pm
        if gain > 0:
            best_x, best_pm = x, lam - 1
        # a new linearization point is only worth a pass while passes still pay off
        if gain <= GAP_TOL * max(1.0, abs(best_pm)) or np.abs(np.vdot(xi, xi0)) > 1 - 1e-9 \
                or rounds >= budget:
            break
        xi0 = xi

    phi = coords.to_map(best_x)
    _, set_margin = oracle.cuts(best_x, randgen.rng_for(seed, "separate-check"))
    point_margin = _top(phi.amplify(v0))[0] - 1
    status = VALID if (set_margin <= SET_TOL and point_margin > POINT_TOL) else NOT_SEPARATED
    return SeparationCertificate(phi, set_margin, point_margin, status, oracle.levels, rounds, seed,
                                 transcript)


def _rescale(oracle: _SetOracle, x, rng) -> np.ndarray:
    _, worst = oracle.cuts(x, rng)
    s = max(1.0, 1.0 + worst)
    return x / s


def verify_separation(cert: SeparationCertificate, K: MatrixConvexModel, v0,
                      fresh_seed: int = 1, samples: int = 32) -> SeparationCertificate:
    """Recompute both margins on fresh members of ``K`` (ascent plus closure samples)."""
    space = K.space
    n = cert.phi.cod_level
    coords = MapCoordinates(space, n)
    m_max = max(cert.levels_checked) if cert.levels_checked else max(2, n, space.ambient_dim)
    oracle = _SetOracle(K, coords, m_max, 64, 40)
    rng = randgen.rng_for(fresh_seed, "separate-verify")
    x = coords.from_map(cert.phi)
    _, set_margin = oracle.cuts(x, rng)
    if K.kind == "generated":
        for m in oracle.levels:
            for w in matrix_convex_sample(K, m, samples, fresh_seed):
                set_margin = max(set_margin, _top(cert.phi.amplify(w))[0] - 1)
    point_margin = _top(cert.phi.amplify(as_cmatrix(v0)))[0] - 1
    ok = set_margin <= SET_TOL and point_margin > POINT_TOL
    return SeparationCertificate(cert.phi, set_margin, point_margin, VALID if ok else NOT_SEPARATED,
                                 cert.levels_checked, cert.rounds, fresh_seed)
