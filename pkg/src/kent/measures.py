"""Witness-induced k-entanglement measures evaluated against a witness database.

Each record ``L`` of a database induces the witness ``g^(k)(L) I - L``, where
``g^(k)(L)`` is the largest stored separability eigenvalue over the k-block
partitions in play. The measure of a state is the best clipped margin
``Tr(L rho) - g^(k)(L)`` over the records.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .database import Database
from .errors import DimensionError, EmptyDatabase, InvalidK, InvalidParameter, NotAPartition, NotHermitian, NotPositive
from .linalg import partial_transpose, trace_norm
from .partitions import Partition, PartitionLike, as_partition, coarsenings_b, enumerate_valid

DETECT_TOL = 1e-12
DENSITY_TOL = 1e-8


@dataclass(frozen=True)
class MeasureResult:
    """Value of one measure; ``margin`` is the unclipped best ``Tr(L rho) - g``."""

    value: float
    best_witness_id: int | None
    best_partition: str | None
    k: int
    partition_context: str
    margin: float

    @property
    def detected(self) -> bool:
        return self.best_witness_id is not None

    def to_dict(self) -> dict:
        return asdict(self)


def as_density(rho: np.ndarray, dim: int | None = None, tol: float = DENSITY_TOL) -> np.ndarray:
    """Symmetrize and trace-normalize ``rho``, rejecting inputs more than ``tol`` from valid."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square density matrix, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NotHermitian("density matrix is not Hermitian")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise InvalidParameter(f"density matrix has trace {tr}")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise NotPositive("density matrix is not positive semidefinite")
    return rho / tr


def expectations(db: Database, rho: np.ndarray) -> np.ndarray:
    """``Tr(L_i rho)`` for every record, as a real vector."""
    if len(db) == 0:
        raise EmptyDatabase("database has no records")
    rho = as_density(rho, db.dim)
    # Tr(L rho) = sum_ij L_ij rho_ji
    return np.einsum("nij,ji->n", db.matrices, rho, optimize=True).real


def _columns(db: Database, partitions: Sequence[Partition]) -> np.ndarray:
    return np.array([db.column(P.key) for P in partitions])


def _best(db: Database, tr: np.ndarray, cols: np.ndarray, k: int, context: str) -> MeasureResult:
    block = db.profiles[:, cols]
    arg = np.argmax(block, axis=1)
    g = block[np.arange(len(db)), arg]
    margins = tr - g
    top = margins.max()
    # ties go to the lowest record id
    i = int(np.flatnonzero(margins == top)[np.argmin(db.ids[margins == top])])
    key = db.keys[cols[arg[i]]]
    if top > DETECT_TOL:
        return MeasureResult(float(top), int(db.ids[i]), key, k, context, float(top))
    return MeasureResult(0.0, None, None, k, context, float(top))


def e_w_k(rho: np.ndarray, db: Database, k: int, *, tr: np.ndarray | None = None) -> MeasureResult:
    """k-entanglement measure on the full register of ``db``.

    ``tr`` may carry precomputed `expectations` to avoid recomputing them.
    """
    if len(db) == 0:
        raise EmptyDatabase("database has no records")
    if not 2 <= k <= db.n:
        raise InvalidK(f"k={k} outside 2..{db.n}")
    tr = expectations(db, rho) if tr is None else tr
    return _best(db, tr, _columns(db, enumerate_valid(db.n, k)), k, "full")


def e_w_subpartition(
    rho: np.ndarray, db: Database, P: PartitionLike, k: int, *, tr: np.ndarray | None = None
) -> MeasureResult:
    """k-entanglement measure relative to a partition ``P`` of the register.

    Only the profile entries of k-block coarsenings of ``P`` enter the bound.
    """
    if len(db) == 0:
        raise EmptyDatabase("database has no records")
    P = as_partition(P)
    if P.n != db.n:
        raise NotAPartition(f"partition {P.key} does not cover the {db.n}-qubit register")
    tr = expectations(db, rho) if tr is None else tr
    return _best(db, tr, _columns(db, coarsenings_b(P, k)), k, P.key)


def measure_tuple(rho: np.ndarray, db: Database, partition: PartitionLike | None = None) -> list[MeasureResult]:
    """Measures for k from the finest block count down to 2."""
    tr = expectations(db, rho)
    if partition is None:
        return [e_w_k(rho, db, k, tr=tr) for k in range(db.n, 1, -1)]
    P = as_partition(partition, db.n)
    return [e_w_subpartition(rho, db, P, k, tr=tr) for k in range(P.k, 1, -1)]


def _split_parts(split, n: int) -> Partition:
    if isinstance(split, Partition) or isinstance(split, str):
        P = as_partition(split)
    else:
        split = [list(b) for b in split]
        if len(split) == 1:
            rest = [q for q in range(1, n + 1) if q not in split[0]]
            split = [rest, split[0]]
        P = as_partition(split, n)
    if P.k != 2 or P.n != n:
        raise NotAPartition(f"{split!r} is not a bipartition of 1..{n}")
    return P


def negativity(rho: np.ndarray, split: PartitionLike | Sequence[int] = "1|2") -> float:
    """``(||rho^T_B||_1 - 1) / 2`` with ``B`` the second block of ``split``.

    ``split`` is a bipartition such as ``"12|3"``, or a single block of
    subsystems taken as ``B``.
    """
    rho = np.asarray(rho)
    d = rho.shape[0] if rho.ndim == 2 else 0
    n = int(round(np.log2(d))) if d > 0 else 0
    if d < 4 or 2**n != d or rho.shape != (d, d):
        raise DimensionError(f"negativity needs a multi-qubit density matrix, got shape {rho.shape}")
    if not isinstance(split, (str, Partition)) and all(isinstance(x, (int, np.integer)) for x in split):
        split = [list(split)]
    P = _split_parts(split, n)
    value = (trace_norm(partial_transpose(rho, n, P.blocks[1]), hermitian=True) - 1) / 2
    if value < -DETECT_TOL:
        raise NotPositive(f"negative negativity {value}; input is not a density matrix")
    return max(0.0, value)


@dataclass(frozen=True)
class BenchmarkRow:
    """Detection counts for one sample, laid out as a negativity comparison table."""

    samples: int
    negativity_entangled: int
    negativity_separable: int
    measure_entangled: int
    measure_separable: int
    mismatches: int

    @property
    def detection_error(self) -> float:
        """Signed rate ``(N_ent - E_ent) / samples``."""
        return (self.negativity_entangled - self.measure_entangled) / self.samples

    @property
    def disagreement(self) -> float:
        """Fraction of states classified differently by the two tests."""
        return self.mismatches / self.samples


def negativity_benchmark(states: Sequence[np.ndarray], db: Database) -> BenchmarkRow:
    """Compare 2-block detection by ``db`` with the negativity verdict on 2-qubit ``states``."""
    if db.n != 2:
        raise DimensionError("the negativity benchmark runs on 2-qubit databases")
    by_neg, by_ew = [], []
    for rho in states:
        by_neg.append(negativity(rho) > DETECT_TOL)
        by_ew.append(e_w_k(rho, db, 2).margin > DETECT_TOL)
    by_neg, by_ew = np.array(by_neg), np.array(by_ew)
    m = len(by_neg)
    return BenchmarkRow(
        samples=m,
        negativity_entangled=int(by_neg.sum()),
        negativity_separable=int(m - by_neg.sum()),
        measure_entangled=int(by_ew.sum()),
        measure_separable=int(m - by_ew.sum()),
        mismatches=int(np.sum(by_neg != by_ew)),
    )
