"""Plain-text matrix exchange format.

A file holds the dimension ``d`` followed by ``d * d`` entries in row-major
order, one ``re im`` pair per entry::

    2
    1 0
    0 0
    0 0
    0 0

Any whitespace separates tokens. A file with exactly ``d`` pairs after the
dimension is read as a state vector.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FormatError


def format_matrix(M: np.ndarray) -> str:
    M = np.asarray(M, dtype=complex)
    lines = [str(M.shape[0])]
    lines += ["%.17g %.17g" % (z.real, z.imag) for z in M.reshape(-1)]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    tokens = text.split()
    if not tokens:
        raise FormatError("empty matrix file")
    try:
        d = int(tokens[0])
        values = np.array([float(t) for t in tokens[1:]])
    except ValueError as exc:
        raise FormatError(f"bad matrix file: {exc}") from None
    if d < 1 or values.size % 2:
        raise FormatError("bad matrix file: odd number of values or bad dimension")
    z = values[0::2] + 1j * values[1::2]
    if z.size == d * d:
        return z.reshape(d, d)
    if z.size == d:
        return z
    raise FormatError(f"expected {d * d} entries for dimension {d}, found {z.size}")


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(M: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_matrix(M))
