"""Seeded random instances: Hermitian, PSD, isometries, maps."""
from __future__ import annotations

import zlib

import numpy as np

from .matcore import adjoint, op_norm


def rng_for(seed: int, *labels) -> np.random.Generator:
    """Generator keyed by ``seed`` and a tuple of string/int labels."""
    keys = [int(seed) & 0xFFFFFFFF]
    for lab in labels:
        if isinstance(lab, str):
            keys.append(zlib.crc32(lab.encode()))
        else:
            keys.append(int(lab) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(keys))


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    """GUE-style sample scaled to unit operator norm."""
    g = complex_gaussian(rng, n)
    h = (g + adjoint(g)) / 2
    return h / op_norm(h)


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Wishart-style PSD sample scaled to unit operator norm."""
    g = complex_gaussian(rng, n, n if rank is None else rank)
    p = g @ adjoint(g)
    return p / op_norm(p)


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """``rows x cols`` matrix with orthonormal columns (``a^* a = I``)."""
    if cols > rows:
        raise ValueError("an isometry needs rows >= cols")
    q, r = np.linalg.qr(complex_gaussian(rng, rows, cols))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    return random_isometry(rng, n, n)


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = complex_gaussian(rng, n, 1)[:, 0]
    return v / np.linalg.norm(v)
