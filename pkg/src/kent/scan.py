"""Onset thresholds and measure curves for noisy state families.

For ``rho(p) = p |psi><psi| + (1 - p) I / d`` every record expectation is
affine in ``p``, so both are precomputed once per family and each probe costs
one multiply-add per record.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .database import Database
from .errors import BracketError, EmptyDatabase, InvalidParameter
from .linalg import projector
from .measures import DETECT_TOL, MeasureResult, e_w_k, e_w_subpartition
from .partitions import PartitionLike, as_partition
from .states import NoisyFamily

DEFAULT_P_TOL = 1e-7


@dataclass(frozen=True)
class MeasureSpec:
    """A measure ``k`` on the full register or relative to ``partition``."""

    k: int
    partition: str | None = None

    @property
    def label(self) -> str:
        return f"k{self.k}" if self.partition is None else f"k{self.k}@{self.partition}"

    @classmethod
    def of(cls, k: int, partition: PartitionLike | None = None) -> "MeasureSpec":
        return cls(int(k), None if partition is None else as_partition(partition).key)


@dataclass(frozen=True)
class ScanSpec:
    family: NoisyFamily
    db: Database
    k: int
    partition: str | None = None
    bracket: tuple[float, float] = (0.0, 1.0)
    p_tol: float = DEFAULT_P_TOL

    def __post_init__(self):
        lo, hi = self.bracket
        if not 0.0 <= lo < hi <= 1.0:
            raise InvalidParameter(f"bracket {self.bracket} must satisfy 0 <= lo < hi <= 1")
        if not self.p_tol > 0:
            raise InvalidParameter("p_tol must be positive")

    @property
    def measure(self) -> MeasureSpec:
        return MeasureSpec.of(self.k, self.partition)


class FamilyProbe:
    """Evaluate measures of one family at any ``p`` against a fixed database."""

    def __init__(self, family: NoisyFamily, db: Database):
        if len(db) == 0:
            raise EmptyDatabase("database has no records")
        if 2**family.n != db.dim:
            raise InvalidParameter(f"family on {family.n} qubits, database on {db.n}")
        self.family, self.db = family, db
        psi = projector(family.pure())
        self._pure = np.einsum("nij,ji->n", db.matrices, psi, optimize=True).real
        self._mixed = np.einsum("nii->n", db.matrices).real / db.dim

    def expectations(self, p: float) -> np.ndarray:
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"mixing weight p={p} outside [0, 1]")
        return p * self._pure + (1 - p) * self._mixed

    def measure(self, m: MeasureSpec, p: float) -> MeasureResult:
        tr = self.expectations(p)
        if m.partition is None:
            return e_w_k(None, self.db, m.k, tr=tr)
        return e_w_subpartition(None, self.db, m.partition, m.k, tr=tr)

    def detected(self, m: MeasureSpec, p: float) -> bool:
        return self.measure(m, p).margin > DETECT_TOL


def threshold_bisect(spec: ScanSpec) -> tuple[tuple[float, float], int]:
    """Bracket the detection onset of ``spec.family`` to width ``spec.p_tol``.

    Returns ``((low, high), iterations)`` with no detection at ``low`` and
    detection at ``high``. The measure is convex in ``p`` and vanishes at
    ``p = 0``, so its detected set is an interval ending at 1 and bisection
    is exact up to the bracket width.
    """
    probe = FamilyProbe(spec.family, spec.db)
    m = spec.measure
    lo, hi = spec.bracket
    if probe.detected(m, lo):
        raise BracketError(f"{spec.family.label} already detected at p={lo} for {m.label}")
    if not probe.detected(m, hi):
        raise BracketError(f"{spec.family.label} not detected at p={hi} for {m.label}")
    iterations = 0
    while hi - lo > spec.p_tol:
        mid = 0.5 * (lo + hi)
        if probe.detected(m, mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    return (lo, hi), iterations


def parse_grid(text: str) -> list[float]:
    """``"start:stop:step"`` (inclusive of ``stop``) or a comma list of values."""
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise InvalidParameter(f"bad grid {text!r}") from None
        if step <= 0 or stop < start:
            raise InvalidParameter(f"bad grid {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = [min(stop, start + i * step) for i in range(count)]
        # round away representation noise such as 0.30000000000000004
        grid = [float(np.round(p, 12)) for p in grid]
    else:
        try:
            grid = [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise InvalidParameter(f"bad grid {text!r}") from None
    return grid


def curve(
    family: NoisyFamily, measures: Sequence[MeasureSpec], db: Database, p_grid: Sequence[float]
) -> list[list[float]]:
    """Rows ``[p, value_1, ..., value_m]`` over an ascending grid in ``[0, 1]``."""
    grid = [float(p) for p in p_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("grid must be sorted ascending")
    if grid and not (0.0 <= grid[0] and grid[-1] <= 1.0):
        raise InvalidParameter("grid must lie within [0, 1]")
    probe = FamilyProbe(family, db)
    return [[p] + [probe.measure(m, p).value for m in measures] for p in grid]


def curve_csv(rows: Sequence[Sequence[float]], measures: Sequence[MeasureSpec]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p"] + [m.label for m in measures])
    for row in rows:
        writer.writerow(["%.17g" % v for v in row])
    return buf.getvalue()
