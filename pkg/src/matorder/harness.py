"""Seeded property suites, one per result, with reproducible reports.

Every case draws its generator from ``(seed, suite, case index)`` so a suite's
report depends only on the seed and the sizes.  Reports list each check with
its kind (``exact`` or ``sampled``), how often it ran, its tolerance and the
largest error seen; the digest covers everything except wall time.
"""
from __future__ import annotations

import hashlib
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from . import choiduality as cd
from . import randgen
from .jsonio import SCHEMA_VERSION, dumps
from .matcore import (
    BlockElement,
    ShapeError,
    adjoint,
    direct_sum,
    inner_partial_trace,
    matrix_unit,
    op_norm,
    psd_check,
    trace_norm,
)
from .ordspace import (
    GaugeSpec,
    MatrixConvexModel,
    SpaceModel,
    compress,
    cone_member,
    diagonal_space,
    full_space,
    lambda_upper,
    matrix_convex_sample,
    offdiag_embed,
    sample_cone,
)

SUITES = ("dual-iso", "theta-order-iso", "choi-kraus", "gauge-axioms", "bonsall", "separation",
          "density-finite", "eval-isometry")
MAX_DIM = 5


class UnknownSuite(ValueError):
    pass


@dataclass
class SuiteReport:
    suite_name: str
    seed: int
    sizes: dict
    cases_run: int
    checks: dict
    failures: list
    wall_time: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite_name,
            "seed": self.seed,
            "sizes": self.sizes,
            "cases_run": self.cases_run,
            "passed": self.passed,
            "checks": self.checks,
            "failures": self.failures,
            "notes": self.notes,
        }
        out["digest"] = _sha(dumps(out))
        if timing:
            out["wall_time"] = self.wall_time
        return out

    @property
    def digest(self) -> str:
        return self.to_json()["digest"]


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def case_digest(*parts) -> str:
    """Short hash of a case's inputs (arrays, numbers or strings)."""
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p, dtype=np.complex128).tobytes())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


class _Recorder:
    def __init__(self):
        self.checks: dict = {}
        self.failures: list = []
        self.cases = 0

    def error(self, name, kind, err, tol, case, observed=None, expected=None):
        """Record ``err <= tol``."""
        entry = self.checks.setdefault(name, {"kind": kind, "count": 0, "tolerance": tol,
                                              "max_error": 0.0})
        entry["count"] += 1
        err = float(err)
        if not np.isfinite(err) or err > entry["max_error"]:
            entry["max_error"] = err if np.isfinite(err) else None
        if not (err <= tol):
            self.failures.append({"check": name, "case": case,
                                  "observed": _plain(observed if observed is not None else err),
                                  "expected": _plain(expected if expected is not None else 0.0),
                                  "tolerance": tol})

    def truth(self, name, kind, ok, case, observed=None, expected=None):
        """Record a boolean verdict (tolerance 0 on the disagreement count)."""
        self.error(name, kind, 0.0 if ok else 1.0, 0.0, case,
                   observed if observed is not None else bool(ok),
                   expected if expected is not None else True)


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


class _Sizes:
    def __init__(self, sizes: dict | None):
        self.raw = dict(sizes or {})
        for key in ("m", "n", "d"):
            if key in self.raw and not 1 <= int(self.raw[key]) <= MAX_DIM:
                raise ValueError(f"size {key}={self.raw[key]} outside 1..{MAX_DIM}")

    def dim(self, rng, key: str, hi: int, lo: int = 1) -> int:
        if key in self.raw:
            return int(self.raw[key])
        return int(rng.integers(lo, hi + 1))

    def count(self, key: str, default: int) -> int:
        return int(self.raw.get(key, default))


# --- generators --------------------------------------------------------------------------

def random_map(rng, m: int, n: int) -> cd.MapModel:
    """Arbitrary linear map ``M_m -> M_n`` with Gaussian coefficients."""
    dom = full_space(m)
    coeffs = tuple(randgen.complex_gaussian(rng, n) / np.sqrt(n) for _ in range(m * m))
    return cd.MapModel(dom, n, coeffs)


def random_cp_contraction(rng, m: int, n: int, scale: float | None = None) -> cd.MapModel:
    """CP map ``M_m -> M_n`` from a random PSD Choi matrix with ``||phi(1)|| = scale``."""
    tau = randgen.random_psd(rng, m * n, int(rng.integers(1, m * n + 1)))
    blocks = tau.reshape(m, n, m, n)
    unit_image = np.einsum("kpkq->pq", blocks)
    s = rng.uniform(0.5, 1.0) if scale is None else scale
    return cd.theta_map(BlockElement(m, n, tau * (s / op_norm(unit_image))))


def _hermitian_near_boundary(rng, size: int) -> np.ndarray:
    """Unit-norm Hermitian matrix whose smallest eigenvalue is spread around zero."""
    h = randgen.random_hermitian(rng, size)
    lo = np.linalg.eigvalsh(h)[0]
    h = h + (rng.uniform(-0.2, 0.2) - lo) * np.eye(size)
    return h / op_norm(h)


def bonsall_instances(seed: int, count: int = 20) -> list:
    """``(label, space, phi)`` triples over full ``M_d`` satisfying the extension hypothesis.

    The first two are ``phi = 0`` and a CP contraction; the rest are
    ``s (A - B)`` for CP contractions ``A, B`` and ``s`` in ``[1/2, 1]``, for
    which ``phi^(m)(w) <= s A^(m)(w) <= ||w||`` on positive ``w``.
    """
    dims = [(2, 2), (2, 3), (3, 2), (3, 3)]
    out = []
    for i in range(count):
        rng = randgen.rng_for(seed, "bonsall-instance", i)
        d, n = dims[i % len(dims)]
        space = full_space(d)
        if i == 0:
            out.append(("zero", space, cd.MapModel.zero(space, n)))
            continue
        a = random_cp_contraction(rng, d, n)
        if i == 1:
            out.append(("cp", space, a))
            continue
        b = random_cp_contraction(rng, d, n)
        out.append(("difference", space, (a - b).scale(rng.uniform(0.5, 1.0))))
    return out


# --- suites ------------------------------------------------------------------------------

def _suite_dual_iso(rec: _Recorder, seed: int, sz: _Sizes):
    for i in range(sz.count("cases", 200)):
        rng = randgen.rng_for(seed, "dual-iso", i)
        m = sz.dim(rng, "m", 3)
        n = int(sz.raw.get("n", m))
        size = m * n
        t = randgen.complex_gaussian(rng, size)
        tau = BlockElement(m, n, t / op_norm(t))
        case = case_digest("dual-iso", i, tau.mat)
        norm1 = trace_norm(tau)
        u = cd.polar_optimizer(tau)
        rec.error("polar optimizer attains trace norm", "exact",
                  abs(norm1 - abs(cd.trace_pair(tau, u))), 1e-9, case)
        rec.error("polar optimizer has unit norm", "exact", abs(op_norm(u.mat) - 1), 1e-12, case)
        # trace norm through |tau| and the two partial traces
        w, v = np.linalg.eigh(adjoint(tau.mat) @ tau.mat)
        absolute = (v * np.sqrt(np.maximum(w, 0))) @ adjoint(v)
        via_traces = np.real(np.trace(inner_partial_trace(BlockElement(m, n, absolute))))
        rec.error("trace norm equals Tr_m Tr_n |tau|", "exact", abs(norm1 - via_traces), 1e-9, case)
        best = 0.0
        for _ in range(20):
            a = randgen.complex_gaussian(rng, size)
            best = max(best, abs(cd.trace_pair(tau, BlockElement(m, n, a / op_norm(a)))))
        rec.error("pairing bounded by trace norm", "sampled", max(0.0, best - norm1), 1e-9, case)
        p = BlockElement(m, n, randgen.random_psd(rng, size))
        q = BlockElement(m, n, randgen.random_psd(rng, size))
        val = cd.trace_pair(p, q)
        rec.error("positive pairs pair positively", "sampled",
                  max(0.0, -val.real) + abs(val.imag), 1e-10, case, val, ">= 0")
        rec.cases += 1


def _suite_theta_order_iso(rec: _Recorder, seed: int, sz: _Sizes):
    for i in range(sz.count("cases", 500)):
        rng = randgen.rng_for(seed, "theta-order-iso", i)
        n, d = sz.dim(rng, "n", 3), sz.dim(rng, "d", 3)
        dom = full_space(d)
        r = _hermitian_near_boundary(rng, n * d)
        F = cd.FunctionalModel.from_representer(dom, n, r)
        case = case_digest("theta-order-iso", i, r)
        fpos = cd.functional_positive_check(F).is_positive
        theta_F = cd.theta_of_functional(F)
        cp = cd.cp_check(theta_F).is_cp
        rec.truth("F positive iff Theta_F CP", "exact", fpos == cp, case, [fpos, cp], "equal")
        rec.truth("Theta preserves self-adjointness", "exact", theta_F.is_selfadjoint, case)
        back = cd.upsilon_functional(theta_F)
        rec.error("Upsilon after Theta is the identity", "exact",
                  np.max(np.abs(back.values - F.values)), 1e-12, case)
        phi = random_map(rng, d, n)
        again = cd.theta_of_functional(cd.upsilon_functional(phi))
        rec.error("Theta after Upsilon is the identity", "exact",
                  max(op_norm(a - b) for a, b in zip(again.coeffs, phi.coeffs)), 1e-12, case)
        u = randgen.complex_gaussian(rng, n * d)
        vals = [cd.upsilon_apply(phi, u), cd.upsilon_beta_form(phi, u), cd.upsilon_functional(phi)(u)]
        rec.error("Upsilon formulas agree", "exact", max(abs(vals[0] - vals[1]), abs(vals[0] - vals[2])),
                  1e-10, case)
        rec.cases += 1
    for i in range(sz.count("triples", 200)):
        rng = randgen.rng_for(seed, "pairing-identity", i)
        m, n, d = sz.dim(rng, "m", 3), sz.dim(rng, "n", 3), sz.dim(rng, "d", 3)
        dom = full_space(d)
        r = randgen.complex_gaussian(rng, n * d)
        F = cd.FunctionalModel.from_representer(dom, n, r / op_norm(r))
        t = randgen.complex_gaussian(rng, m * n)
        tau = BlockElement(m, n, t / op_norm(t))
        w = randgen.complex_gaussian(rng, m * d)
        w /= op_norm(w)
        lhs = F(cd.theta_tensor_apply(tau, w))
        rhs = cd.trace_pair(tau, BlockElement(m, n, cd.theta_of_functional(F).amplify(w)))
        rec.error("pairing identity F((theta x id)(w)) = <tau, Theta_F(w)>", "exact",
                  abs(lhs - rhs), 1e-9, case_digest("pairing", i, r, t, w), lhs, rhs)
        rec.cases += 1


def _suite_choi_kraus(rec: _Recorder, seed: int, sz: _Sizes):
    for i in range(sz.count("maps", 500)):
        rng = randgen.rng_for(seed, "choi-roundtrip", i)
        m, n = sz.dim(rng, "m", 5), sz.dim(rng, "n", 5)
        phi = random_map(rng, m, n)
        tau = cd.choi_of(phi)
        err = max(op_norm(cd.theta_apply(tau, matrix_unit(k, l, m)) - phi(matrix_unit(k, l, m)))
                  for k in range(m) for l in range(m))
        rec.error("theta(choi(phi)) = phi on matrix units", "exact", err, 1e-10,
                  case_digest("roundtrip", i, *phi.coeffs))
        rec.cases += 1
    for i in range(sz.count("hermitian", 500)):
        rng = randgen.rng_for(seed, "choi-criterion", i)
        m, n = sz.dim(rng, "m", 4), sz.dim(rng, "n", 4)
        tau = BlockElement(m, n, _hermitian_near_boundary(rng, m * n))
        psd = psd_check(tau.mat, 1e-8).is_psd
        probes = [np.outer(np.eye(m).reshape(-1), np.eye(m).reshape(-1))]
        probes += [randgen.random_psd(rng, m * m, int(rng.integers(1, m * m + 1))) for _ in range(199)]
        lows = np.linalg.eigvalsh(_theta_tensor_batch(tau, np.array(probes)))[:, 0]
        preserves = bool(lows.min() >= -1e-8)
        rec.truth("tau PSD iff theta_tau x id keeps 200 PSD probes PSD", "sampled", psd == preserves,
                  case_digest("criterion", i, tau.mat), [psd, preserves], "equal")
        rec.cases += 1
    for i in range(sz.count("kraus", 200)):
        rng = randgen.rng_for(seed, "kraus", i)
        m, n = sz.dim(rng, "m", 5), sz.dim(rng, "n", 5)
        tau = BlockElement(m, n, randgen.random_psd(rng, m * n, int(rng.integers(1, m * n + 1))))
        cert = cd.kraus_of(tau)
        case = case_digest("kraus", i, tau.mat)
        rec.error("Kraus residual", "exact", cert.residual, 1e-8, case)
        w = randgen.random_psd(rng, m * 2)
        lhs = cd.theta_tensor_apply(tau, w)
        rhs = sum(adjoint(np.kron(g, np.eye(2))) @ w @ np.kron(g, np.eye(2)) for g in cert.gammas)
        rec.error("Kraus form of theta x id", "exact", op_norm(lhs - rhs), 1e-8, case)
        rec.cases += 1
    swap = cd.choi_of(cd.MapModel.from_function(full_space(2), 2, lambda a: a.T))
    try:
        cd.kraus_of(swap)
        rec.truth("transpose rejected by kraus_of", "exact", False, "transpose")
    except cd.ConeViolation as e:
        rec.error("transpose rejected with witness -1", "exact", abs(e.min_eigenvalue + 1), 1e-10,
                  "transpose", e.min_eigenvalue, -1.0)
    rec.cases += 1


def _theta_tensor_batch(tau: BlockElement, w: np.ndarray) -> np.ndarray:
    """``sum_kl tau_kl (x) w_kl`` for a batch of level-``m`` elements over ``M_d``."""
    m, n = tau.outer, tau.inner
    d = w.shape[1] // m
    wb = w.reshape(len(w), m, d, m, d)
    out = np.einsum("klpq,ikalb->ipaqb", tau.blocks(), wb)
    return out.reshape(len(w), n * d, n * d)


def _suite_gauge_axioms(rec: _Recorder, seed: int, sz: _Sizes):
    for i in range(sz.count("cases", 500)):
        rng = randgen.rng_for(seed, "gauge", i)
        d = sz.dim(rng, "d", 3)
        m, k = sz.dim(rng, "m", 3), sz.dim(rng, "n", 3)
        g = GaugeSpec() if i % 2 == 0 else GaugeSpec.scaled(rng.uniform(0.5, 2.0))
        v = randgen.complex_gaussian(rng, m * d)
        w = randgen.complex_gaussian(rng, k * d)
        case = case_digest("gauge", i, v, w)
        rec.error("rho(v + w) = max(rho(v), rho(w))", "exact",
                  abs(g(direct_sum(v, w)) - max(g(v), g(w))), 1e-10, case)
        alpha = randgen.complex_gaussian(rng, m, k)
        bound = op_norm(alpha) ** 2 * g(v)
        rec.error("rho(a* v a) <= ||a||^2 rho(v)", "exact", max(0.0, g(compress(v, alpha, d)) - bound),
                  1e-10, case)
        z = randgen.complex_gaussian(rng, m * d, k * d)
        e = offdiag_embed(z)
        rec.error("offdiag embedding keeps the norm", "exact", abs(op_norm(e) - op_norm(z)), 1e-10, case)
        rec.error("offdiag embedding is self-adjoint", "exact", op_norm(e - adjoint(e)), 0.0, case)
        rec.cases += 1
    for i in range(sz.count("cone", 100)):
        rng = randgen.rng_for(seed, "cone-axioms", i)
        space = full_space(2) if i % 2 == 0 else diagonal_space(3)
        d = space.ambient_dim
        m, k = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        v = sample_cone(space, m, rng)
        u = sample_cone(space, k, rng)
        gamma = randgen.complex_gaussian(rng, m, k)
        case = case_digest("cone", i, v, u, gamma)
        rec.truth("cone closed under compression", "sampled",
                  bool(cone_member(space, compress(v, gamma, d))), case)
        rec.truth("cone closed under direct sums", "sampled",
                  bool(cone_member(space, direct_sum(v, u))), case)
        rec.cases += 1
    for i in range(sz.count("lambda", 20)):
        rng = randgen.rng_for(seed, "lambda", i)
        n = sz.dim(rng, "n", 3)
        space = full_space(2)
        g = GaugeSpec()
        y = sample_cone(space, n, rng)
        t = rng.uniform(0.1, 10.0)
        case = case_digest("lambda", i, y)
        base = lambda_upper(space, y, g, 16, seed=i)
        rec.error("lambda_upper is positively homogeneous", "exact",
                  abs(lambda_upper(space, t * y, g, 16, seed=i) - t * base), 1e-10 * t * max(1, base), case)
        rec.error("lambda_upper(I) <= n", "exact",
                  max(0.0, lambda_upper(space, np.eye(2 * n), g, 16, seed=i) - n), 1e-12, case)
        rec.error("lambda_upper(0) = 0", "exact",
                  lambda_upper(space, np.zeros((2 * n, 2 * n)), g, 4, seed=i), 0.0, case)
        rec.cases += 1


def _suite_bonsall(rec: _Recorder, seed: int, sz: _Sizes):
    from .hahnbanach import (
        VALID,
        bonsall_scalar,
        bonsall_scalar_violation,
        matrix_bonsall_extend,
        sampled_cp_margin,
        verify_extension,
    )

    for i, (label, space, phi) in enumerate(bonsall_instances(seed, sz.count("instances", 20))):
        sub = int(randgen.rng_for(seed, "bonsall-seed", i).integers(2**31))
        cert = matrix_bonsall_extend(space, phi, seed=sub)
        case = case_digest("bonsall", i, *phi.coeffs)
        rec.truth("extension certificate VALID", "sampled", cert.status == VALID, case, cert.status, VALID)
        check = verify_extension(cert, space, phi, fresh_seed=sub + 1)
        rec.truth("certificate re-verifies on a fresh seed", "sampled", check.status == VALID, case,
                  check.status, VALID)
        rec.error("exact Choi margin of psi - phi", "exact", max(0.0, -check.exact_cp_margin), 1e-9,
                  case, check.exact_cp_margin, ">= 0")
        diff = cert.psi - phi
        sampled = sampled_cp_margin(space, diff, cert.levels_checked, seed=sub + 2)
        rec.truth("sampled CP verdict agrees with the Choi test", "sampled",
                  (sampled >= -1e-6) == (check.exact_cp_margin >= -1e-6), case,
                  [sampled, check.exact_cp_margin], "same sign")
        if label in ("zero", "cp"):
            rec.error("psi = phi certifies with zero CP margin", "exact",
                      abs(cert.cp_margin) + abs(check.exact_cp_margin), 0.0, case)
        rec.cases += 1
    # F(u) <= lambda(u) for F = Upsilon_phi, phi a CP contraction
    space = full_space(2)
    n = 2
    g = GaugeSpec()
    funcs = [cd.upsilon_functional(random_cp_contraction(randgen.rng_for(seed, "lambda-F", j), 2, n))
             for j in range(sz.count("functionals", 20))]
    for i in range(sz.count("cone_elements", 100)):
        rng = randgen.rng_for(seed, "lambda-u", i)
        u = sample_cone(space, n, rng) * rng.uniform(0.1, 2.0)
        bound = lambda_upper(space, u, g, 64, seed=i)
        worst = max(F(u).real for F in funcs)
        rec.error("F(u) <= lambda_upper(u)", "sampled", max(0.0, worst - bound), 1e-8,
                  case_digest("lambda-cross", i, u), worst, bound)
        rec.cases += 1
    # scalar version
    for i in range(sz.count("scalar", 20)):
        rng = randgen.rng_for(seed, "bonsall-scalar", i)
        dim = int(rng.integers(1, 5))
        support = rng.standard_normal((4, dim))
        pts = rng.standard_normal((12, dim))
        p_values = [(x, float(np.max(support @ x))) for x in pts]
        g0 = rng.dirichlet(np.ones(4)) @ support
        gens = rng.standard_normal((int(rng.integers(0, 4)), dim))
        q_values = [-float(g0 @ u) + rng.uniform(0, 1) for u in gens]
        gsol = bonsall_scalar(dim, gens, p_values, q_values)
        rec.error("scalar Bonsall functional satisfies both families", "exact",
                  bonsall_scalar_violation(gsol, gens, p_values, q_values), 1e-8,
                  case_digest("scalar", i, support, pts))
        rec.cases += 1


def _suite_separation(rec: _Recorder, seed: int, sz: _Sizes):
    from .hahnbanach import NOT_SEPARATED, VALID, separate_point, verify_separation

    space = full_space(2)
    ball = MatrixConvexModel.ball_positive(space)
    sub = int(randgen.rng_for(seed, "separation").integers(2**31))
    cert = separate_point(ball, 2 * np.eye(2), 1, seed=sub)
    rec.truth("2I separated from the positive unit ball", "sampled", cert.status == VALID, "ball/2I",
              cert.status, VALID)
    rec.error("set margin", "sampled", max(0.0, cert.set_margin), 1e-6, "ball/2I")
    rec.error("point margin at least 0.4", "sampled", max(0.0, 0.4 - cert.point_margin), 0.0, "ball/2I",
              cert.point_margin, ">= 0.4")
    again = verify_separation(cert, ball, 2 * np.eye(2), fresh_seed=sub + 1)
    rec.truth("separation re-verifies on a fresh seed", "sampled", again.status == VALID, "ball/2I")
    inside = separate_point(ball, np.eye(2) / 2, 1, seed=sub)
    rec.truth("I/2 is not separated", "exact", inside.status == NOT_SEPARATED, "ball/I2", inside.status)
    zero = MatrixConvexModel(space, {1: [np.zeros((2, 2))]})
    cz = separate_point(zero, np.eye(2), 1, seed=sub)
    rec.truth("I separated from {0}", "exact", cz.status == VALID, "zero/I", cz.status)
    for i in range(sz.count("cases", 4)):
        rng = randgen.rng_for(seed, "separation-generated", i)
        gen = randgen.random_hermitian(rng, 2)
        K = MatrixConvexModel(space, {1: [np.zeros((2, 2)), gen]})
        member = matrix_convex_sample(K, 1, 1, seed=sub + i)[0]
        c_in = separate_point(K, member, 1, seed=sub + i)
        case = case_digest("sep-generated", i, gen)
        rec.truth("member of a generated set is not separated", "exact", c_in.status == NOT_SEPARATED,
                  case, c_in.status)
        c_out = separate_point(K, 3 * gen, 1, seed=sub + i)
        rec.truth("3 x generator is separated", "exact", c_out.status == VALID, case, c_out.status)
        rec.truth("VALID certificate separates by its own margins", "exact",
                  c_out.set_margin <= 1e-6 < c_out.point_margin, case)
        rec.cases += 1
    rec.cases += 3


def _suite_density_finite(rec: _Recorder, seed: int, sz: _Sizes):
    spaces = [full_space(2), diagonal_space(3)]
    for si, space in enumerate(spaces):
        ball = MatrixConvexModel.ball_positive(space)
        dual_basis = np.linalg.pinv(space.basis_matrix)  # rows evaluate coordinates
        for level in (1, 2):
            members = matrix_convex_sample(ball, level, sz.count("samples", 50), seed=seed + 31 * si)
            for j, x in enumerate(members):
                case = case_digest("density", si, level, j, x)
                bidual = _to_bidual(space, dual_basis, x)
                back = _from_bidual(space, bidual)
                rec.error("identification round trip", "exact", op_norm(back - x), 1e-9, case)
                rec.truth("B+ maps into B+ of the bidual", "exact", ball.contains(back), case)
                top = _norm_by_evaluation(back)
                rec.error("bidual norm equals norm", "exact", abs(top - op_norm(x)), 1e-12, case)
                rec.cases += 1
            rng = randgen.rng_for(seed, "density-converse", si, level)
            for j in range(sz.count("samples", 50)):
                coeffs = rng.standard_normal((level, level, space.dim))
                coeffs = coeffs + coeffs.transpose(1, 0, 2)
                x = _from_bidual(space, coeffs.astype(np.complex128))
                x = (x + adjoint(x)) / 2
                x = x / op_norm(x) if op_norm(x) > 0 else x
                if j % 2 == 0:
                    # push half of the samples into the cone
                    x = x + (1e-3 - np.linalg.eigvalsh(x)[0]) * np.eye(len(x))
                    x = x / op_norm(x)
                case = case_digest("density-converse", si, level, j, x)
                lo = np.linalg.eigvalsh(x)
                # positivity in the bidual: Tr(R x) >= 0 for every rank-one positive R
                by_functionals = lo[0] >= -1e-9 and op_norm(x) <= 1 + 1e-9
                rec.truth("bidual B+ membership matches B+", "exact",
                          by_functionals == bool(ball.contains(x)), case)
                rec.cases += 1


def _to_bidual(space: SpaceModel, dual_basis, x) -> np.ndarray:
    """Values of ``x`` on the dual basis, block by block."""
    b = space.level_blocks(x)
    m = b.shape[0]
    d = space.ambient_dim
    return (dual_basis @ b.reshape(m * m, d * d).T).T.reshape(m, m, -1)


def _from_bidual(space: SpaceModel, c) -> np.ndarray:
    m = c.shape[0]
    d = space.ambient_dim
    blocks = np.einsum("kli,iab->kalb", c, np.array(space.basis))
    return blocks.reshape(m * d, m * d)


def _norm_by_evaluation(x) -> float:
    """``sup |<rho, x>|`` over trace-norm-one rank-one ``rho``, attained at the top singular pair."""
    u, s, vh = np.linalg.svd(x)
    rho = np.outer(vh[0].conj(), u[:, 0].conj())
    return abs(np.trace(rho @ x))


def _suite_eval_isometry(rec: _Recorder, seed: int, sz: _Sizes):
    for i in range(sz.count("cases", 20)):
        rng = randgen.rng_for(seed, "eval-isometry", i)
        d = int(sz.raw.get("d", 2))
        m = int(sz.raw.get("m", 2))
        space = full_space(d)
        x = randgen.complex_gaussian(rng, m * d)
        x /= op_norm(x)
        norm = op_norm(x)
        identity = cd.MapModel.from_function(space, d, lambda a: a)
        values = [op_norm(identity.amplify(x))]
        for _ in range(20):
            values.append(op_norm(random_cp_contraction(rng, d, d).amplify(x)))
        case = case_digest("eval", i, x)
        rec.error("identity attains ||x||", "exact", abs(values[0] - norm), 1e-12, case)
        rec.error("no CP contraction exceeds ||x||", "sampled", max(0.0, max(values) - norm), 1e-10, case)
        rec.cases += 1


_RUNNERS = {
    "dual-iso": _suite_dual_iso,
    "theta-order-iso": _suite_theta_order_iso,
    "choi-kraus": _suite_choi_kraus,
    "gauge-axioms": _suite_gauge_axioms,
    "bonsall": _suite_bonsall,
    "separation": _suite_separation,
    "density-finite": _suite_density_finite,
    "eval-isometry": _suite_eval_isometry,
}

_NOTES = {
    "density-finite": ["V equals its bidual in finite dimension; the suite checks the identification only."],
    "choi-kraus": ["probes live in M_m(M_m) and include the Choi element of the identity"],
}


def run_suite(name: str, seed: int = 0, sizes: dict | None = None) -> SuiteReport:
    if name not in _RUNNERS:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    sz = _Sizes(sizes)
    rec = _Recorder()
    start = time.perf_counter()
    _RUNNERS[name](rec, seed, sz)
    elapsed = time.perf_counter() - start
    return SuiteReport(name, seed, sz.raw, rec.cases, rec.checks, rec.failures, elapsed,
                       list(_NOTES.get(name, [])))


@dataclass
class AggregateReport:
    seed: int
    reports: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_json(self, timing: bool = False) -> dict:
        suites = [r.to_json(timing) for r in self.reports]
        body = {"version": SCHEMA_VERSION, "seed": self.seed, "passed": self.passed,
                "suites": [{k: v for k, v in s.items() if k != "wall_time"} for s in suites]}
        body["digest"] = _sha(dumps(body))
        if timing:
            body["suites"] = suites
        return body

    @property
    def digest(self) -> str:
        return self.to_json()["digest"]


def run_all(seed: int = 0, sizes: dict | None = None) -> AggregateReport:
    return AggregateReport(seed, [run_suite(name, seed, sizes) for name in SUITES])


def junit_xml(reports) -> str:
    """A JUnit-style XML document with one test case per check."""
    root = ET.Element("testsuites")
    for r in reports:
        fails = {}
        for f in r.failures:
            fails.setdefault(f["check"], []).append(f)
        suite = ET.SubElement(root, "testsuite", name=r.suite_name, tests=str(len(r.checks)),
                              failures=str(len(fails)), time=f"{r.wall_time:.3f}")
        for check, info in r.checks.items():
            case = ET.SubElement(suite, "testcase", classname=r.suite_name, name=check)
            if check in fails:
                first = fails[check][0]
                msg = f"{len(fails[check])} of {info['count']} cases failed; first case {first['case']}"
                ET.SubElement(case, "failure", message=msg).text = dumps(first)
    return ET.tostring(root, encoding="unicode")
