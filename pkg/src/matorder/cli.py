"""Batch command-line front end: JSON files in, JSON on standard output.

Exit codes: 0 success or VALID, 2 negative verdict, 3 budget exceeded,
64 usage error, 65 malformed input.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from . import choiduality as cd
from . import harness, jsonio
from .jsonio import FormatError
from .matcore import BlockElement, ShapeError, trace_norm

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64
EXIT_DATA = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj, out) -> None:
    out.write(jsonio.dumps(obj))
    out.write("\n")


# --- input helpers -----------------------------------------------------------------------

def _load_map(path: str) -> cd.MapModel:
    """A map file holds either ``coeffs`` (images of the basis) or a ``choi`` block."""
    d = jsonio.load_path(path)
    if isinstance(d, dict) and "choi" in d:
        tau = jsonio.block_from_json(d["choi"])
        phi = cd.theta_map(tau)
        if "dom" in d:
            dom = jsonio.space_from_json(d["dom"])
            if not dom.is_full or dom.ambient_dim != tau.outer:
                raise FormatError("a choi block needs the full matrix algebra of its outer size")
        return phi
    return jsonio.map_from_json(d)


def _load_block(path: str) -> BlockElement:
    return jsonio.block_from_json(jsonio.load_path(path))


def _load_matrix(path: str) -> np.ndarray:
    return jsonio.matrix_from_json(jsonio.load_path(path))


def _load_gauge(path: str | None):
    return jsonio.gauge_from_json(None if path is None else jsonio.load_path(path))


def _parse_sizes(items) -> dict:
    sizes = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not val.lstrip("-").isdigit():
            raise UsageError(f"--size expects key=integer, got {item!r}")
        sizes[key] = int(val)
    return sizes


# --- subcommands -------------------------------------------------------------------------

def cmd_choi(args, out):
    _emit(jsonio.block_to_json(cd.choi_of(_load_map(args.map))), out)
    return EXIT_OK


def cmd_theta(args, out):
    _emit(jsonio.map_to_json(cd.theta_map(_load_block(args.tau))), out)
    return EXIT_OK


def cmd_kraus(args, out):
    tau = _load_block(args.tau) if args.tau else cd.choi_of(_load_map(args.map))
    try:
        cert = cd.kraus_of(tau)
    except cd.ConeViolation as e:
        _emit({"psd": False, "witness_eig": e.min_eigenvalue,
               "witness": jsonio.matrix_to_json(np.asarray(e.witness).reshape(-1, 1))}, out)
        return EXIT_NEGATIVE
    _emit(dict(psd=True, **jsonio.kraus_to_json(cert)), out)
    return EXIT_OK


def cmd_cpcheck(args, out):
    phi = _load_map(args.map)
    chk = cd.cp_check(phi)
    if chk.is_cp:
        _emit({"cp": True}, out)
        return EXIT_OK
    _emit({"cp": False, "witness_eig": chk.min_eigenvalue}, out)
    return EXIT_NEGATIVE


def cmd_pair(args, out):
    val = cd.trace_pair(_load_block(args.tau), _load_block(args.alpha))
    _emit({"re": val.real, "im": val.imag}, out)
    return EXIT_OK


def cmd_tracenorm(args, out):
    tau = _load_block(args.tau)
    res = {"trace_norm": trace_norm(tau)}
    if args.optimizer:
        res["optimizer"] = jsonio.block_to_json(cd.polar_optimizer(tau))
    _emit(res, out)
    return EXIT_OK


def cmd_gauge(args, out):
    g = _load_gauge(args.gauge)
    _emit({"kind": g.kind, "c": g.c, "value": g(_load_matrix(args.element))}, out)
    return EXIT_OK


def cmd_lambda(args, out):
    from .ordspace import lambda_upper

    space = jsonio.space_from_json(jsonio.load_path(args.space))
    y = _load_matrix(args.element)
    val = lambda_upper(space, y, _load_gauge(args.gauge), args.trials, seed=args.seed)
    _emit({"lambda_upper": val, "trials": args.trials, "seed": args.seed}, out)
    return EXIT_OK


def cmd_extend(args, out):
    from .hahnbanach import (
        BUDGET_EXCEEDED,
        VALID,
        ExtensionInfeasible,
        HypothesisError,
        matrix_bonsall_extend,
    )

    phi = _load_map(args.map)
    space = jsonio.space_from_json(jsonio.load_path(args.space)) if args.space else phi.dom
    try:
        cert = matrix_bonsall_extend(space, phi, _load_gauge(args.gauge), args.m_max, args.budget,
                                     args.seed)
    except HypothesisError as e:
        _emit({"type": "extension", "status": "HYPOTHESIS_FAILED", "margin": e.margin,
               "level": e.level}, out)
        return EXIT_NEGATIVE
    except ExtensionInfeasible as e:
        _emit({"type": "extension", "status": "INFEASIBLE", "message": str(e),
               "active_rows": list(e.active_rows)}, out)
        return EXIT_NEGATIVE
    _emit(jsonio.extension_to_json(cert), out)
    if cert.status == VALID:
        return EXIT_OK
    return EXIT_BUDGET if cert.status == BUDGET_EXCEEDED else EXIT_NEGATIVE


def cmd_separate(args, out):
    from .hahnbanach import VALID, separate_point

    K = jsonio.convex_from_json(jsonio.load_path(args.set))
    v0 = _load_matrix(args.point)
    n = args.level if args.level else v0.shape[0] // K.space.ambient_dim
    cert = separate_point(K, v0, n, budget=args.budget, seed=args.seed, m_max=args.m_max)
    _emit(jsonio.separation_to_json(cert), out)
    return EXIT_OK if cert.status == VALID else EXIT_NEGATIVE


def cmd_verify(args, out):
    from .hahnbanach import VALID, verify_extension, verify_separation

    doc = jsonio.load_path(args.cert)
    kind = doc.get("type") if isinstance(doc, dict) else None
    if kind == "extension":
        if not args.map:
            raise UsageError("verify: an extension certificate needs --map")
        cert = jsonio.extension_from_json(doc)
        phi = _load_map(args.map)
        space = jsonio.space_from_json(jsonio.load_path(args.space)) if args.space else phi.dom
        chk = verify_extension(cert, space, phi, _load_gauge(args.gauge), fresh_seed=args.seed)
        _emit({"type": "extension", "status": chk.status, "fresh_seed": args.seed,
               "cp_margin": chk.cp_margin, "gauge_margin": chk.gauge_margin,
               "exact_cp_margin": chk.exact_cp_margin, "levels_checked": chk.levels}, out)
        return EXIT_OK if chk.status == VALID else EXIT_NEGATIVE
    if kind == "separation":
        if not (args.set and args.point):
            raise UsageError("verify: a separation certificate needs --set and --point")
        cert = jsonio.separation_from_json(doc)
        K = jsonio.convex_from_json(jsonio.load_path(args.set))
        chk = verify_separation(cert, K, _load_matrix(args.point), fresh_seed=args.seed)
        _emit({"type": "separation", "status": chk.status, "fresh_seed": args.seed,
               "set_margin": chk.set_margin, "point_margin": chk.point_margin}, out)
        return EXIT_OK if chk.status == VALID else EXIT_NEGATIVE
    raise FormatError("certificate field 'type' must be 'extension' or 'separation'")


def cmd_suite(args, out):
    sizes = _parse_sizes(args.size)
    try:
        if args.name == "all":
            agg = harness.run_all(args.seed, sizes)
            reports, doc, passed = agg.reports, agg.to_json(args.timing), agg.passed
        else:
            rep = harness.run_suite(args.name, args.seed, sizes)
            reports, doc, passed = [rep], rep.to_json(args.timing), rep.passed
    except ValueError as e:
        raise UsageError(f"suite: {e}") from None
    if args.junit:
        with open(args.junit, "w", encoding="utf-8") as fh:
            fh.write(harness.junit_xml(reports))
    _emit(doc, out)
    return EXIT_OK if passed else EXIT_NEGATIVE


# --- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matorder", description="Certified computations on matrix-ordered spaces.")
    p.add_argument("--version", action="version", version=f"matorder {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("choi", cmd_choi, "Choi matrix of a map")
    sp.add_argument("--map", required=True)
    sp = add("theta", cmd_theta, "map theta_tau of a block element")
    sp.add_argument("--tau", required=True)
    sp = add("kraus", cmd_kraus, "Kraus operators of a PSD Choi matrix")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--tau")
    src.add_argument("--map")
    sp = add("cpcheck", cmd_cpcheck, "exact complete positivity test")
    sp.add_argument("--map", required=True)
    sp = add("pair", cmd_pair, "trace pairing of two block elements")
    sp.add_argument("--tau", required=True)
    sp.add_argument("--alpha", required=True)
    sp = add("tracenorm", cmd_tracenorm, "trace norm of a block element")
    sp.add_argument("--tau", required=True)
    sp.add_argument("--optimizer", action="store_true", help="also print the polar optimizer")
    sp = add("gauge", cmd_gauge, "evaluate a gauge")
    sp.add_argument("--element", required=True)
    sp.add_argument("--gauge")
    sp = add("lambda", cmd_lambda, "upper bound for the factorization gauge")
    sp.add_argument("--space", required=True)
    sp.add_argument("--element", required=True)
    sp.add_argument("--gauge")
    sp.add_argument("--trials", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("extend", cmd_extend, "matrix Bonsall extension")
    sp.add_argument("--map", required=True)
    sp.add_argument("--space")
    sp.add_argument("--gauge")
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--m-max", type=int, dest="m_max")
    sp.add_argument("--seed", type=int, default=0)
    sp = add("separate", cmd_separate, "separate a point from a matrix convex set")
    sp.add_argument("--set", required=True)
    sp.add_argument("--point", required=True)
    sp.add_argument("--level", type=int)
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--m-max", type=int, dest="m_max")
    sp.add_argument("--seed", type=int, default=0)
    sp = add("verify", cmd_verify, "re-verify a certificate on a fresh seed")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--map")
    sp.add_argument("--space")
    sp.add_argument("--gauge")
    sp.add_argument("--set")
    sp.add_argument("--point")
    sp.add_argument("--seed", type=int, default=1)
    sp = add("suite", cmd_suite, "run a property suite (or 'all')")
    sp.add_argument("--name", required=True, choices=list(harness.SUITES) + ["all"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--size", action="append", metavar="KEY=N")
    sp.add_argument("--junit", metavar="PATH")
    sp.add_argument("--timing", action="store_true", help="include wall times")
    return p


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as e:
        err.write(f"{e}\n")
        return EXIT_USAGE
    except FormatError as e:
        _emit(e.to_json(), out)
        return EXIT_DATA
    except (ShapeError, cd.UnsupportedDomainError, ValueError) as e:
        # inputs that parse but do not describe a valid object
        _emit({"error": "input", "message": str(e)}, out)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
