"""JSON encoding of matrices, spaces, maps and certificates.

Floats are written with 17 significant digits so every value round-trips
exactly; non-finite floats become ``null``.  Readers raise :class:`FormatError`
on anything that does not match the schema.
"""
from __future__ import annotations

import json
import math
import sys

import numpy as np

from .choiduality import KrausCertificate, MapModel
from .matcore import BlockElement
from .ordspace import GaugeSpec, MatrixConvexModel, SpaceModel, hermitian_span, space_from_preset

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Input is not valid JSON or does not follow the schema."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 pos: int | None = None):
        super().__init__(message)
        self.line, self.column, self.pos = line, column, pos

    def to_json(self) -> dict:
        out = {"error": "format", "message": str(self)}
        if self.line is not None:
            out.update(line=self.line, column=self.column, pos=self.pos)
        return out


# --- writer ----------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int | None = 2) -> str:
    """Deterministic JSON: keys in insertion order, floats at 17 significant digits."""
    out: list[str] = []
    _write(obj, out, indent, 0)
    return "".join(out)


def _write(obj, out, indent, depth):
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        items = list(obj.items())
        if not items:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(items):
            if i:
                out.append(",")
            _newline(out, indent, depth + 1)
            out.append(json.dumps(str(k)))
            out.append(": " if indent is not None else ":")
            _write(v, out, indent, depth + 1)
        _newline(out, indent, depth)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        # numeric rows stay on one line
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq)
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(", " if flat and indent is not None else ",")
            if not flat:
                _newline(out, indent, depth + 1)
            _write(v, out, indent, depth + 1)
        if not flat and seq:
            _newline(out, indent, depth)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _newline(out, indent, depth):
    if indent is not None:
        out.append("\n" + " " * (indent * depth))


# --- reader ----------------------------------------------------------------------------

def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed JSON: {e.msg}", e.lineno, e.colno, e.pos) from None


def load_path(path: str):
    """Read JSON from a file, or from standard input when ``path`` is ``-``."""
    if path == "-":
        return loads(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None


def _need(d, key, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"missing field {key!r}")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise FormatError(f"field {key!r} has the wrong type")
    return v


# --- matrices --------------------------------------------------------------------------

def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-dimensional")
    return {"rows": a.shape[0], "cols": a.shape[1],
            "re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def matrix_from_json(d) -> np.ndarray:
    rows, cols = _need(d, "rows", int), _need(d, "cols", int)
    if rows < 1 or cols < 1:
        raise FormatError("rows and cols must be positive")
    try:
        re = np.array(_need(d, "re", list), dtype=float)
        im = np.array(d.get("im", np.zeros((rows, cols)).tolist()), dtype=float)
    except (TypeError, ValueError):
        raise FormatError("matrix entries must be numbers") from None
    if re.shape != (rows, cols) or im.shape != (rows, cols):
        raise FormatError(f"entries do not match declared shape {rows}x{cols}")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise FormatError("matrix entries must be finite")
    return re + 1j * im


def block_to_json(b: BlockElement) -> dict:
    out = matrix_to_json(b.mat)
    out.update(outer=b.outer, inner=b.inner)
    return out


def block_from_json(d) -> BlockElement:
    mat = matrix_from_json(d)
    outer, inner = _need(d, "outer", int), _need(d, "inner", int)
    try:
        return BlockElement(outer, inner, mat)
    except ValueError as e:
        raise FormatError(str(e)) from None


# --- spaces and maps -------------------------------------------------------------------

def space_to_json(s: SpaceModel):
    if s.name and (s.name.startswith("full:") or s.name.startswith("diagonal:")):
        return s.name
    return {"ambient_dim": s.ambient_dim, "basis": [matrix_to_json(b) for b in s.basis],
            "star_closed": s.star_closed}


def space_from_json(d) -> SpaceModel:
    if isinstance(d, str):
        try:
            return space_from_preset(d)
        except ValueError as e:
            raise FormatError(str(e)) from None
    if isinstance(d, dict) and "hermitian_span" in d:
        mats = [matrix_from_json(m) for m in _need(d, "hermitian_span", list)]
        try:
            return hermitian_span(mats)
        except ValueError as e:
            raise FormatError(str(e)) from None
    dim = _need(d, "ambient_dim", int)
    basis = [matrix_from_json(b) for b in _need(d, "basis", list)]
    try:
        return SpaceModel(dim, tuple(basis), bool(d.get("star_closed", True)),
                          bool(d.get("proper_cone", True)), d.get("name", ""))
    except ValueError as e:
        raise FormatError(str(e)) from None


def map_to_json(phi: MapModel) -> dict:
    return {"dom": space_to_json(phi.dom), "cod_level": phi.cod_level,
            "coeffs": [matrix_to_json(c) for c in phi.coeffs]}


def map_from_json(d) -> MapModel:
    dom = space_from_json(_need(d, "dom"))
    n = _need(d, "cod_level", int)
    coeffs = [matrix_from_json(c) for c in _need(d, "coeffs", list)]
    try:
        return MapModel(dom, n, tuple(coeffs))
    except ValueError as e:
        raise FormatError(str(e)) from None


def gauge_to_json(g: GaugeSpec) -> dict:
    return {"kind": g.kind, "c": g.c}


def gauge_from_json(d) -> GaugeSpec:
    if d is None:
        return GaugeSpec()
    try:
        return GaugeSpec(d.get("kind", "operator_norm"), float(d.get("c", 1.0)))
    except (AttributeError, ValueError, TypeError) as e:
        raise FormatError(f"bad gauge: {e}") from None


def convex_to_json(K: MatrixConvexModel) -> dict:
    return {"space": space_to_json(K.space), "kind": K.kind, "selfadjoint": K.selfadjoint,
            "generators": {str(m): [matrix_to_json(v) for v in vs] for m, vs in K.generators.items()}}


def convex_from_json(d) -> MatrixConvexModel:
    space = space_from_json(_need(d, "space"))
    kind = d.get("kind", "generated")
    gens = d.get("generators", {})
    if not isinstance(gens, dict):
        raise FormatError("generators must map levels to matrix lists")
    try:
        parsed = {int(m): [matrix_from_json(v) for v in vs] for m, vs in gens.items()}
        return MatrixConvexModel(space, parsed, bool(d.get("selfadjoint", True)), kind)
    except ValueError as e:
        raise FormatError(str(e)) from None


# --- certificates ----------------------------------------------------------------------

def kraus_to_json(k: KrausCertificate) -> dict:
    return {"gammas": [matrix_to_json(g) for g in k.gammas], "residual": k.residual}


def kraus_from_json(d) -> KrausCertificate:
    return KrausCertificate(tuple(matrix_from_json(g) for g in _need(d, "gammas", list)),
                            float(_need(d, "residual")))


def extension_to_json(cert) -> dict:
    return {
        "type": "extension",
        "version": SCHEMA_VERSION,
        "status": cert.status,
        "seed": cert.seed,
        "rounds": cert.rounds,
        "levels_checked": list(cert.levels_checked),
        "cp_margin": cert.cp_margin,
        "gauge_margin": cert.gauge_margin,
        "exact_cp_margin": cert.exact_cp_margin,
        "psi": map_to_json(cert.psi),
        "transcript": cert.transcript,
    }


def extension_from_json(d):
    from .hahnbanach.bonsall import ExtensionCertificate

    def num(key):
        v = d.get(key)
        return float("nan") if v is None else float(v)

    return ExtensionCertificate(
        map_from_json(_need(d, "psi")), list(_need(d, "levels_checked", list)),
        num("cp_margin"), num("gauge_margin"), list(d.get("transcript", [])),
        str(d.get("status", "VALID")), int(d.get("rounds", 0)), int(d.get("seed", 0)),
        None if d.get("exact_cp_margin") is None else float(d["exact_cp_margin"]))


def separation_to_json(cert) -> dict:
    return {
        "type": "separation",
        "version": SCHEMA_VERSION,
        "status": cert.status,
        "seed": cert.seed,
        "rounds": cert.rounds,
        "levels_checked": list(cert.levels_checked),
        "set_margin": cert.set_margin,
        "point_margin": cert.point_margin,
        "phi": map_to_json(cert.phi),
        "transcript": cert.transcript,
    }


def separation_from_json(d):
    from .hahnbanach.separation import SeparationCertificate

    return SeparationCertificate(
        map_from_json(_need(d, "phi")), float(_need(d, "set_margin")),
        float(_need(d, "point_margin")), str(d.get("status", "VALID")),
        list(d.get("levels_checked", [])), int(d.get("rounds", 0)), int(d.get("seed", 0)),
        list(d.get("transcript", [])))
