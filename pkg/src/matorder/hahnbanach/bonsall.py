"""Bonsall-type extension: the scalar LP version and the matrix cutting-plane solver.

The matrix solver looks for a self-adjoint ``psi: S -> M_n`` with ``psi - phi``
completely positive and ``psi^(m)(z) <= rho_m(z) I`` for self-adjoint ``z``.  Both
families are semi-infinite linear constraints on the coordinates of ``psi``; the
master problem keeps a finite subset of them and asks for its Chebyshev centre,
and eigen-ascent oracles supply the most violated constraints each round.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import randgen
from ..choiduality import MapModel, theta_map
from ..matcore import BlockElement
from ..matcore import op_norm
from ..ordspace import GaugeSpec, SpaceModel, sample_cone
from .lp import DualSimplex, LPInstance, lp_feasible
from .spectral import MapCoordinates, ascent, choi_element

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-7
VALID_TOL = 1e-6
NEAR_ACTIVE = 0.05

VALID = "VALID"
INVALID = "INVALID"
BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


class HypothesisError(ValueError):
    """``phi^(m)(w) <= rho_m(w) I`` fails for some sampled positive ``w``."""

    def __init__(self, margin: float, level: int, witness):
        super().__init__(f"hypothesis violated by {margin:.3e} at level {level}")
        self.margin = margin
        self.level = level
        self.witness = witness


class ExtensionInfeasible(RuntimeError):
    """The master LP became empty; the level cap is too coarse or the data inconsistent."""

    def __init__(self, message: str, active_rows):
        super().__init__(message)
        self.active_rows = active_rows


class BonsallInfeasible(ValueError):
    def __init__(self, message: str, row):
        super().__init__(message)
        self.row = row


# --- scalar version --------------------------------------------------------------------

def bonsall_scalar(dim: int, cone_generators, p_values, q_values, bound: float = 1e6) -> np.ndarray:
    """Linear ``g`` on ``R^dim`` with ``-q(u_i) <= g(u_i)`` and ``g(x_j) <= p(x_j)``.

    ``p_values`` is a list of ``(x_j, p(x_j))`` pairs sampling the sublinear ``p``;
    ``q_values[i]`` is ``q`` at ``cone_generators[i]``.
    """
    gens = [np.asarray(u, dtype=float).reshape(dim) for u in cone_generators]
    if len(gens) != len(q_values):
        raise ValueError("one q value per cone generator")
    pts = [(np.asarray(x, dtype=float).reshape(dim), float(v)) for x, v in p_values]
    for i, u in enumerate(gens):
        for x, pv in pts:
            if np.allclose(u, x, atol=1e-12) and -q_values[i] > pv + 1e-12:
                raise BonsallInfeasible(f"hypothesis -q(u) <= p(u) fails at generator {i}", ("cone", i))
    inst = LPInstance(dim, bound=bound)
    for x, pv in pts:
        inst.add_row(-x, -pv)
    for u, qv in zip(gens, q_values):
        inst.add_row(u, -float(qv))
    sol = lp_feasible(inst)
    if not sol.feasible:
        row = sol.violating_row
        where = ("p", row) if row is not None and row < len(pts) else ("cone", None if row is None else row - len(pts))
        raise BonsallInfeasible("no linear functional satisfies the sampled inequalities", where)
    return sol.x


def bonsall_scalar_violation(g, cone_generators, p_values, q_values) -> float:
    g = np.asarray(g, dtype=float)
    v = 0.0
    for x, pv in p_values:
        v = max(v, float(g @ np.asarray(x, dtype=float)) - pv)
    for u, qv in zip(cone_generators, q_values):
        v = max(v, -qv - float(g @ np.asarray(u, dtype=float)))
    return v


# --- matrix version --------------------------------------------------------------------

@dataclass
class ExtensionCertificate:
    psi: MapModel
    levels_checked: list
    cp_margin: float
    gauge_margin: float
    transcript: list = field(default_factory=list)
    status: str = VALID
    rounds: int = 0
    seed: int = 0
    exact_cp_margin: float | None = None

    @property
    def valid(self) -> bool:
        return margins_valid(self.cp_margin, self.gauge_margin)


def margins_valid(cp_margin: float, gauge_margin: float) -> bool:
    return cp_margin >= -VALID_TOL and gauge_margin <= VALID_TOL


def default_m_max(space: SpaceModel, n: int) -> int:
    return max(2, n, space.ambient_dim)


class _Oracle:
    """Violation search for the two constraint families of the extension problem."""

    def __init__(self, coords: MapCoordinates, phi: MapModel, g: GaugeSpec, m_max: int,
                 restarts: int, iters: int):
        self.coords = coords
        self.space = coords.space
        self.phi = phi
        self.x_phi = coords.from_map(phi)
        self.g = g
        self.m_max = m_max
        self.restarts = restarts
        self.iters = iters
        self.warm: dict = {}

    def cp_cuts(self, x, rng, limit: int = 64, near: float = 0.0):
        """Rows ``-a . x <= -b`` for ``xi^* (psi - phi)^(m)(u) xi >= 0``; also the margin.

        Cuts are returned for every tested pair whose value falls below ``near``
        (violated ones when ``near = 0``); each is a valid constraint either way.
        """
        below = near if near > 0 else -VIOLATION_TOL
        space, c = self.space, self.coords
        cuts, margin = [], np.inf
        if space.is_full:
            d = space.ambient_dim
            E = choi_element(d)
            choi = c.to_map(x - self.x_phi).amplify(E)
            w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
            margin = float(w[0])
            phi_choi = self.phi.amplify(E)
            for i in np.flatnonzero(w < below)[:limit]:
                xi = v[:, i]
                a = c.cut_form(E, xi)
                b = float(np.real(xi.conj() @ phi_choi @ xi))
                cuts.append(("cp", d, -a, -b, float(-w[i])))
            return cuts, margin
        diff_t = c.unit_tensor(x - self.x_phi)
        for m in range(1, self.m_max + 1):
            vals, zs, xis = ascent(space, diff_t, m, "psd_ball", rng, self.restarts, self.iters,
                                   sign=-1.0, warm=self.warm.get(("cp", m)))
            extra = np.array([sample_cone(space, m, rng) for _ in range(8)])
            amp = np.array([c.to_map(x - self.x_phi).amplify(u) for u in extra])
            ew, ev = np.linalg.eigh((amp + np.conj(np.swapaxes(amp, 1, 2))) / 2)
            vals = np.concatenate([vals, -ew[:, 0]])
            zs = np.concatenate([zs, extra])
            xis = np.concatenate([xis, ev[:, :, 0]])
            keep = [i for i in range(len(vals)) if op_norm(zs[i]) > 1e-9]
            if not keep:
                continue
            lam_min = -vals
            order = sorted(keep, key=lambda i: lam_min[i])
            self.warm[("cp", m)] = xis[order[:16]]
            margin = min(margin, float(lam_min[order[0]]))
            for i in _distinct(order, lam_min, limit=8):
                if lam_min[i] >= below:
                    break
                a = c.cut_form(zs[i], xis[i])
                b = float(np.real(xis[i].conj() @ self.phi.amplify(zs[i]) @ xis[i]))
                cuts.append(("cp", m, -a, -b, float(-lam_min[i])))
        return cuts, (0.0 if margin == np.inf else margin)

    def gauge_cuts(self, x, rng, limit: int = 8, near: float = 0.0):
        """Rows ``a . x <= rho_m(z)`` for ``xi^* psi^(m)(z) xi <= rho_m(z)``; also the margin."""
        above = -near if near > 0 else VIOLATION_TOL
        c = self.coords
        psi_t = c.unit_tensor(x)
        cuts, margin = [], -np.inf
        for m in range(1, self.m_max + 1):
            vals, zs, xis = ascent(self.space, psi_t, m, "sa_ball", rng, self.restarts, self.iters,
                                   warm=self.warm.get(("g", m)))
            rho = np.array([self.g(z) for z in zs])
            gap = vals - rho
            order = list(np.argsort(-gap))
            self.warm[("g", m)] = xis[order[:16]]
            margin = max(margin, float(gap[order[0]]))
            for i in _distinct(order, gap, limit):
                if gap[i] <= above:
                    break
                cuts.append(("gauge", m, c.cut_form(zs[i], xis[i]), float(rho[i]), float(gap[i])))
        return cuts, margin


def _distinct(order, values, limit):
    """Indices from ``order`` skipping near-duplicate values."""
    seen = []
    for i in order:
        if all(abs(values[i] - values[j]) > 1e-9 for j in seen):
            seen.append(i)
            yield i
        if len(seen) >= limit:
            return


def verify_hypothesis(space: SpaceModel, phi: MapModel, g: GaugeSpec, m_max: int | None = None,
                      seed: int = 0, restarts: int = 64, iters: int = 40):
    """Largest sampled value of ``lambda_max(phi^(m)(w)) - rho_m(w)`` over unit positive ``w``.

    Returns ``(margin, level, witness)``.
    """
    m_max = default_m_max(space, phi.cod_level) if m_max is None else m_max
    coords = MapCoordinates(space, phi.cod_level)
    phi_t = coords.unit_tensor(coords.from_map(phi))
    rng = randgen.rng_for(seed, "hypothesis")
    best = (-np.inf, 0, None)
    for m in range(1, m_max + 1):
        vals, zs, _ = ascent(space, phi_t, m, "psd_ball", rng, restarts, iters)
        samples = [sample_cone(space, m, rng) for _ in range(8)]
        for val, z in list(zip(vals, zs)) + [(None, s) for s in samples]:
            if val is None:
                val = float(np.linalg.eigvalsh(phi.amplify(z))[-1])
            gap = float(val) - g(z)
            if gap > best[0]:
                best = (gap, m, z)
    return best


def _cert_from_oracle(oracle: _Oracle, x, rng, transcript, status, rounds, seed):
    _, cp_margin = oracle.cp_cuts(x, rng)
    _, g_margin = oracle.gauge_cuts(x, rng)
    return _certificate(oracle, x, cp_margin, g_margin, transcript, status, rounds, seed)


def _certificate(oracle: _Oracle, x, cp_margin, g_margin, transcript, status, rounds, seed,
                 psi=None):
    psi = oracle.coords.to_map(x) if psi is None else psi
    exact = cp_margin if oracle.space.is_full else None
    if status is None:
        status = VALID if margins_valid(cp_margin, g_margin) else INVALID
    return ExtensionCertificate(psi, list(range(1, oracle.m_max + 1)), cp_margin, g_margin,
                                transcript, status, rounds, seed, exact)


def matrix_bonsall_extend(space: SpaceModel, phi: MapModel, g: GaugeSpec | None = None,
                          m_max: int | None = None, budget: int = 200, seed: int = 0,
                          restarts: int = 64, iters: int = 40,
                          check_hypothesis: bool = True) -> ExtensionCertificate:
    """Find ``psi`` with ``psi - phi`` CP and ``psi^(m)(z) <= rho_m(z) I`` on self-adjoint ``z``."""
    g = GaugeSpec() if g is None else g
    if not phi.is_selfadjoint:
        raise ValueError("phi must be self-adjoint")
    n = phi.cod_level
    m_max = default_m_max(space, n) if m_max is None else m_max
    if check_hypothesis:
        margin, level, witness = verify_hypothesis(space, phi, g, m_max, seed, restarts, iters)
        if margin > VIOLATION_TOL:
            raise HypothesisError(margin, level, witness)

    coords = MapCoordinates(space, n)
    oracle = _Oracle(coords, phi, g, m_max, restarts, iters)
    rng = randgen.rng_for(seed, "extend")
    transcript: list = []

    # psi = phi already works whenever phi is CP (then ||phi||_cb = ||phi(1)||).
    x_phi = oracle.x_phi
    cp0, _ = oracle.cp_cuts(x_phi, rng)
    g0, _ = oracle.gauge_cuts(x_phi, rng)
    if not cp0 and not g0:
        _, cp_margin = oracle.cp_cuts(x_phi, rng)
        _, g_margin = oracle.gauge_cuts(x_phi, rng)
        return _certificate(oracle, x_phi, cp_margin, g_margin, transcript, None, 0, seed, psi=phi)

    master = _Master(coords, g, seed, transcript)
    rounds = 0
    if space.is_full:
        x = _cp_projection(phi, g.c)
        if x is not None:
            x = coords.from_map(x)
            cp, cp_margin = oracle.cp_cuts(x, rng)
            gc, g_margin = oracle.gauge_cuts(x, rng)
            transcript.append({"round": 1, "kind": "projection", "level": space.ambient_dim,
                               "violation": max(-cp_margin, g_margin, 0.0)})
            if not cp and not gc:
                return _certificate(oracle, x, cp_margin, g_margin, transcript, None, 1, seed)
        x, rounds, cp_rows = _cp_phase(oracle, master.fresh(), max(1, budget // 4), transcript)
        if x is not None:
            cp, _ = oracle.cp_cuts(x, rng)
            gc, _ = oracle.gauge_cuts(x, rng)
            if not cp and not gc:
                return _cert_from_oracle(oracle, x, rng, transcript, None, rounds, seed)
        master.seed_rows(cp_rows)
    master.add(cp0 + g0, rounds)
    x = x_phi
    for rnd in range(rounds + 1, budget + 1):
        x, t = master.centre()
        cp, cp_margin = oracle.cp_cuts(x, rng, near=NEAR_ACTIVE)
        gc, g_margin = oracle.gauge_cuts(x, rng, limit=16, near=NEAR_ACTIVE)
        log.debug("round %d: depth %.3e, %d cp cuts, %d gauge cuts", rnd, t, len(cp), len(gc))
        if cp_margin >= -VIOLATION_TOL and g_margin <= VIOLATION_TOL:
            return _certificate(oracle, x, cp_margin, g_margin, transcript, None, rnd, seed)
        master.add(cp + gc, rnd)
    return _cert_from_oracle(oracle, x, rng, transcript, BUDGET_EXCEEDED, budget, seed)


class _Master:
    """Chebyshev-centre LP: maximize the depth ``t`` with ``a . x + t ||a|| <= b`` for every cut."""

    def __init__(self, coords: MapCoordinates, g: GaugeSpec, seed: int, transcript: list):
        self.N = N = coords.size
        space, n = coords.space, coords.n
        hnorm = max(op_norm(h) for h in space.herm_basis)
        self.box = np.full(N + 1, 1.05 * g.c * np.sqrt(n) * hnorm + 1e-9)
        self.box[-1] = g.c
        # a tiny cost on x breaks the dual degeneracy of the pure depth objective
        self.tilt = 1e-7 * randgen.rng_for(seed, "tilt").standard_normal(N)
        self.transcript = transcript
        self.lp = self.fresh()

    def fresh(self) -> DualSimplex:
        return DualSimplex(self.N + 1, objective=np.r_[self.tilt, 1.0], bound=self.box)

    def seed_rows(self, rows):
        for a, b in rows:
            self.lp.add_rows(a, b)

    def add(self, cuts, rnd, lp=None):
        lp = self.lp if lp is None else lp
        added = []
        for kind, level, a, b, viol in cuts:
            nrm = np.linalg.norm(a)
            if nrm < 1e-14:
                continue
            row = (np.r_[a / nrm, 1.0], b / nrm)
            lp.add_rows(*row)
            added.append((kind, row))
            self.transcript.append({"round": rnd, "kind": kind, "level": level, "violation": viol})
        return added

    def centre(self, lp=None):
        lp = self.lp if lp is None else lp
        sol = lp.solve()
        if not sol.feasible:
            raise ExtensionInfeasible("master LP infeasible", [sol.violating_row])
        x, t = sol.x[:self.N], sol.x[self.N]
        if t < -1e-9:
            raw = np.array(lp.raw_rows)
            act = np.flatnonzero(np.abs(raw @ sol.x - np.array(lp.raw_rhs)) < 1e-9)
            raise ExtensionInfeasible(f"constraint set has no common point (centre depth {t:.3e})",
                                      act.tolist())
        return x, t


def _cp_phase(oracle: _Oracle, lp: DualSimplex, budget: int, transcript: list):
    """Look for a CP ``psi`` with ``psi - phi`` CP and ``psi(1) <= c 1`` (full algebras only).

    Such a ``psi`` satisfies the gauge constraints at every level, because
    ``-||z|| 1 <= z <= ||z|| 1`` and ``psi`` is CP.  All three conditions are single
    eigenvalue tests, so the cuts here are exact.  Returns ``(x or None, rounds,
    rows valid for the general problem)``.
    """
    c = oracle.coords
    d = c.space.ambient_dim
    E = choi_element(d)
    eye = np.eye(d, dtype=np.complex128)
    cap = oracle.g.c
    master = _Master.__new__(_Master)
    master.N, master.transcript = c.size, transcript
    general = []
    for rnd in range(1, budget + 1):
        try:
            x, _ = master.centre(lp)
        except ExtensionInfeasible:
            return None, rnd, general
        psi = c.to_map(x)
        cuts, _ = oracle.cp_cuts(x, None)
        violated = bool(cuts)
        # every eigenvector gives a valid cut; nearly active ones steady the centre
        w, v = np.linalg.eigh(_hermitize((psi - oracle.phi).amplify(E)))
        for i in np.flatnonzero((w >= -VIOLATION_TOL) & (w < NEAR_ACTIVE)):
            b = float(np.real(v[:, i].conj() @ oracle.phi.amplify(E) @ v[:, i]))
            cuts.append(("cp", d, -c.cut_form(E, v[:, i]), -b, float(-w[i])))
        w, v = np.linalg.eigh(_hermitize(psi.amplify(E)))
        violated |= bool(np.any(w < -VIOLATION_TOL))
        for i in np.flatnonzero(w < NEAR_ACTIVE):
            cuts.append(("cp-psi", d, -c.cut_form(E, v[:, i]), 0.0, float(-w[i])))
        w, v = np.linalg.eigh(_hermitize(psi.apply(eye)))
        violated |= bool(np.any(w > cap + VIOLATION_TOL))
        for i in np.flatnonzero(w > cap - NEAR_ACTIVE):
            cuts.append(("unit", 1, c.cut_form(eye, v[:, i]), cap, float(w[i] - cap)))
        if not violated:
            return x, rnd, general
        for kind, row in master.add(cuts, rnd, lp):
            if kind == "cp":
                general.append(row)
    return None, budget, general


def _cp_projection(phi: MapModel, cap: float, iters: int = 3000):
    """Alternating projections for a CP ``psi >= phi`` with ``psi(1) <= cap 1`` (full algebras).

    Works on Choi matrices: clip ``C`` and ``C - Choi(phi)`` to be positive and
    pull the partial trace ``sum_k C_kk = psi(1)`` under the cap.  The three sets
    are shrunk by a small margin so that a hit lies in the interior.  Returns the
    map or ``None``.
    """
    d, n = phi.dom.ambient_dim, phi.cod_level
    base = phi.choi.mat
    base = (base + base.conj().T) / 2
    scale = max(1.0, op_norm(base))
    for delta in (1e-3 * cap, 1e-5 * cap):
        C = _clip(base, 0.0)
        for _ in range(iters):
            C = _clip(C, delta)
            C = base + _clip(C - base, delta)
            T = np.einsum("kpkq->pq", C.reshape(d, n, d, n))
            w, v = np.linalg.eigh((T + T.conj().T) / 2)
            excess = (v * np.maximum(w - (cap - delta), 0.0)) @ v.conj().T
            C = C - np.kron(np.eye(d), excess) / d
            ok = (np.linalg.eigvalsh(C)[0] >= 0.0 and np.linalg.eigvalsh(C - base)[0] >= 0.0
                  and w[-1] <= cap + 1e-12 * scale)
            if ok:
                return theta_map(BlockElement(d, n, C))
    return None


def _clip(a, floor: float) -> np.ndarray:
    """Nearest Hermitian matrix with every eigenvalue at least ``floor``."""
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return (v * np.maximum(w, floor)) @ v.conj().T


def _hermitize(a):
    return (a + a.conj().T) / 2


@dataclass
class ExtensionCheck:
    status: str
    cp_margin: float
    gauge_margin: float
    exact_cp_margin: float | None
    levels: list

    @property
    def valid(self) -> bool:
        return self.status == VALID


def verify_extension(cert: ExtensionCertificate, space: SpaceModel, phi: MapModel,
                     g: GaugeSpec | None = None, fresh_seed: int = 1, restarts: int = 64,
                     iters: int = 40) -> ExtensionCheck:
    """Recompute both margins for ``cert.psi`` from fresh samples."""
    g = GaugeSpec() if g is None else g
    psi = cert.psi
    m_max = max(cert.levels_checked) if cert.levels_checked else default_m_max(space, psi.cod_level)
    coords = MapCoordinates(space, psi.cod_level)
    oracle = _Oracle(coords, phi, g, m_max, restarts, iters)
    rng = randgen.rng_for(fresh_seed, "verify")
    x = coords.from_map(psi)
    if not psi.is_selfadjoint:
        return ExtensionCheck(INVALID, -np.inf, np.inf, None, list(range(1, m_max + 1)))
    _, cp_margin = oracle.cp_cuts(x, rng)
    _, g_margin = oracle.gauge_cuts(x, rng)
    exact = None
    if space.is_full:
        diff = psi - phi
        c = diff.choi.mat
        exact = float(np.linalg.eigvalsh((c + c.conj().T) / 2)[0])
        cp_margin = min(cp_margin, exact)
    status = VALID if margins_valid(cp_margin, g_margin) else INVALID
    return ExtensionCheck(status, cp_margin, g_margin, exact, list(range(1, m_max + 1)))


def sampled_cp_margin(space: SpaceModel, diff: MapModel, levels, seed: int = 0,
                      restarts: int = 64, iters: int = 40) -> float:
    """Smallest ``lambda_min(diff^(m)(u))`` found by ascent over unit positive ``u``.

    This is the sampled route used on proper subspaces; on full algebras it is
    compared against the exact Choi test.
    """
    coords = MapCoordinates(space, diff.cod_level)
    t = coords.unit_tensor(coords.from_map(diff))
    rng = randgen.rng_for(seed, "sampled-cp")
    best = np.inf
    for m in levels:
        vals, _, _ = ascent(space, t, m, "psd_ball", rng, restarts, iters, sign=-1.0)
        best = min(best, float(-vals.max()))
    return best
