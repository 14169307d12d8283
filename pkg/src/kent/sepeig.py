"""Separability eigenvalues g(L, P).

``g(L, P)`` is the largest expectation ``<b|L|b>`` over unit vectors ``b``
that factor across the blocks of the partition ``P``.  The maximisation is
done by alternating block updates: with every block but one frozen, the
objective is a Hermitian form in the free block, so the free block is set
to the dominant eigenvector of the effective block operator.  Each update
can only raise the objective, and a full sweep visits every block once.

All routines are vectorised over a leading batch axis so that many
operators (database records) and many restarts run in one numpy pass.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidParameter, NotPositive
from .linalg import RegisterLayout, as_layout, hermitize, permute_subsystems, schmidt_decompose
from .partitions import Partition, PartitionLike, all_valid, as_partition

PSD_TOL = 1e-8
NORM_TOL = 1e-9
DEGENERATE_VALUE = 1e-14
MAX_REINITS = 8
POWER_SQUARINGS = 5


@dataclass(frozen=True)
class GConfig:
    """Stopping rule and restart policy for the alternating maximisation.

    ``restarts`` applies to 2-block partitions of registers with at most
    three qubits.  Every other partition (three or more blocks, or four or
    more qubits) uses ``restarts_hard``: local maxima are common there and
    10 starts miss the global maximum on a few records per thousand.
    """

    tol: float = 1e-9
    max_sweeps: int = 500
    restarts: int = 10
    restarts_hard: int = 24
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if self.max_sweeps < 1:
            raise InvalidParameter("max_sweeps must be at least 1")
        if self.restarts < 1 or self.restarts_hard < 1:
            raise InvalidParameter("restarts must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameter("seed must fit in an unsigned 64-bit integer")

    def restarts_for(self, partition: Partition) -> int:
        if partition.k <= 2 and partition.n <= 3:
            return self.restarts
        return self.restarts_hard

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class GResult:
    value: float
    optimizer: list[np.ndarray]
    sweeps_used: int
    restarts_used: int
    partition: Partition
    residual: float = 0.0
    history: list[float] = field(default_factory=list)

    def product_state(self) -> np.ndarray:
        """The optimal product vector in the register's own qubit order."""
        vec = self.optimizer[0]
        for v in self.optimizer[1:]:
            vec = np.kron(vec, v)
        order = self.partition.order
        inverse = [order.index(q) + 1 for q in range(1, len(order) + 1)]
        return permute_subsystems(vec, RegisterLayout.qubits(len(order)), inverse)


def check_contraction(L: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Symmetrise ``L`` and check it is PSD with spectral norm at most one."""
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {L.shape}")
    if dim is not None and L.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {L.shape[0]}")
    L = hermitize(L)
    ev = np.linalg.eigvalsh(L)
    if ev[0] < -PSD_TOL:
        raise NotPositive(f"operator has eigenvalue {ev[0]:.3e} < 0")
    if ev[-1] > 1 + NORM_TOL:
        raise InvalidParameter(f"operator norm {ev[-1]:.12g} exceeds 1")
    return L


def _haar_blocks(seed: int, stream: Sequence[int], dims: Sequence[int]) -> list[np.ndarray]:
    rng = np.random.default_rng([int(seed), *map(int, stream)])
    out = []
    for d in dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        out.append(v / np.linalg.norm(v))
    return out


def _batched_kron(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = vectors[0]
    for v in vectors[1:]:
        out = (out[:, :, None] * v[:, None, :]).reshape(out.shape[0], -1)
    return out


class _BlockOperators:
    """Per-block reshapes of a batch of operators whose blocks are contiguous.

    ``self.mats[j]`` has shape ``(B, Dj*Rj*Dj, Rj)`` where ``Rj`` is the
    product of the other block dimensions; contracting its last axis with the
    frozen product vector and then the ``Rj`` axis with its conjugate yields
    the effective operator on block ``j``.
    """

    def __init__(self, Lp: np.ndarray, dims: Sequence[int]):
        B = Lp.shape[0]
        k = len(dims)
        t = Lp.reshape((B, *dims, *dims))
        self.dims = tuple(dims)
        self.mats = []
        for j in range(k):
            others = [i for i in range(k) if i != j]
            axes = [0, 1 + j, *[1 + i for i in others], 1 + k + j, *[1 + k + i for i in others]]
            R = int(np.prod([dims[i] for i in others])) if others else 1
            self.mats.append(np.ascontiguousarray(t.transpose(axes)).reshape(B, dims[j] * R * dims[j], R))

    def take(self, idx: np.ndarray) -> "_BlockOperators":
        new = object.__new__(_BlockOperators)
        new.dims = self.dims
        new.mats = [m[idx] for m in self.mats]
        return new

    def effective(self, j: int, vecs: Sequence[np.ndarray]) -> np.ndarray:
        D = self.dims[j]
        others = [vecs[i] for i in range(len(self.dims)) if i != j]
        mat = self.mats[j]
        B = mat.shape[0]
        if not others:
            return mat.reshape(B, D, D)
        w = _batched_kron(others)
        R = w.shape[1]
        Lw = np.matmul(mat, w[:, :, None]).reshape(B, D, R, D)
        M = np.matmul(Lw.transpose(0, 1, 3, 2), w.conj()[:, None, :, None]).reshape(B, D, D)
        return (M + M.conj().transpose(0, 2, 1)) / 2


def _top_eig(M: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Block update: dominant eigenpair for qubit blocks, a deep power step otherwise.

    For larger blocks ``v <- M^32 v`` (five squarings of the trace-normalised
    operator) replaces a full eigensolve.  For PSD ``M`` the Rayleigh
    quotient of ``M^m v`` is never below that of ``v``, so sweeps stay
    monotone and the fixed points are the same dominant eigenvectors.
    """
    if M.shape[1] == 2:
        return _top_eig2(M)
    tr = np.einsum("bii->b", M).real
    scale = np.where(tr > 1e-300, tr, 1.0)
    A = M / scale[:, None, None]
    for _ in range(POWER_SQUARINGS):
        A = np.matmul(A, A)
        # renormalise so tiny spectra do not underflow
        t = np.einsum("bii->b", A).real
        A /= np.where(t > 1e-300, t, 1.0)[:, None, None]
    w = np.matmul(A, v[:, :, None])[:, :, 0]
    nw = np.linalg.norm(w, axis=1)
    bad = nw <= 1e-150
    w = np.where(bad[:, None], v, w / np.where(bad, 1.0, nw)[:, None])
    lam = np.einsum("bi,bij,bj->b", w.conj(), M, w).real
    return lam, w


def _top_eig2(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form dominant eigenpair of a stack of Hermitian 2x2 matrices."""
    a = M[:, 0, 0].real
    c = M[:, 1, 1].real
    b = M[:, 0, 1]
    half = (a - c) / 2
    rad = np.sqrt(half * half + (b * b.conj()).real)
    lam = (a + c) / 2 + rad
    # (b, lam - a) and (lam - c, conj b) both solve the eigen equation; use the
    # better conditioned one
    u = np.stack([b, (lam - a).astype(complex)], axis=1)
    v = np.stack([(lam - c).astype(complex), b.conj()], axis=1)
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    use_u = nu >= nv
    vec = np.where(use_u[:, None], u, v)
    norm = np.where(use_u, nu, nv)
    flat = norm <= 1e-300
    vec = np.where(flat[:, None], np.array([1.0 + 0j, 0.0]), vec / np.where(flat, 1.0, norm)[:, None])
    return lam, vec


def alternate(
    Lp: np.ndarray,
    dims: Sequence[int],
    init: Sequence[np.ndarray],
    tol: float,
    max_sweeps: int,
    reseed: tuple[int, ...] = (0,),
    history: list | None = None,
):
    """Run alternating block maximisation on a batch.

    Parameters
    ----------
    Lp : (B, d, d) complex array
        Operators with partition blocks contiguous and in block order.
    dims : block dimensions, product ``d``.
    init : one ``(B, Dj)`` array of starting unit vectors per block.
    tol, max_sweeps : stop once the relative change over a sweep is below
        ``tol`` or after ``max_sweeps`` sweeps.
    reseed : RNG stream used to redraw runs stuck at a zero objective.
    history : if given, receives the per-sweep objective of every element.

    Returns
    -------
    values (B,), block vectors (list of (B, Dj)), sweeps used (B,),
    final relative change (B,).
    """
    B = Lp.shape[0]
    k = len(dims)
    ops = _BlockOperators(Lp, dims)
    vecs = [np.array(v, dtype=complex, copy=True) for v in init]
    if k == 1:
        M = ops.effective(0, vecs)
        vals, eig = np.linalg.eigh(M)
        return vals[:, -1], [eig[:, :, -1]], np.ones(B, dtype=int), np.zeros(B)

    out_val = np.zeros(B)
    out_vecs = [np.zeros((B, d), dtype=complex) for d in dims]
    out_sweeps = np.zeros(B, dtype=int)
    out_resid = np.zeros(B)
    # rows still held in the working arrays; finished rows linger until the
    # next compaction but their results are already recorded
    rows = np.arange(B)
    live = np.ones(B, dtype=bool)
    prev = np.full(B, -np.inf)
    reinits = np.zeros(B, dtype=int)
    cur_ops = ops
    for sweep in range(1, max_sweeps + 1):
        for j in range(k):
            val, vecs[j] = _top_eig(cur_ops.effective(j, vecs), vecs[j])
        if history is not None:
            full = np.full(B, np.nan)
            full[rows[live]] = val[live]
            history.append(full)
        with np.errstate(invalid="ignore"):
            resid = np.where(np.isfinite(prev), np.abs(val - prev) / np.maximum(np.abs(val), 1e-300), np.inf)
        done = live & (resid < tol)
        stuck = live & (val < DEGENERATE_VALUE) & (reinits[rows] < MAX_REINITS)
        if stuck.any():
            # a zero objective gives no ascent direction; redraw those runs
            for pos in np.flatnonzero(stuck):
                fresh = _haar_blocks(reseed[0], (*reseed[1:], 7919, int(reinits[rows[pos]])), dims)
                for b in range(k):
                    vecs[b][pos] = fresh[b]
            reinits[rows[stuck]] += 1
            done &= ~stuck
        if sweep == max_sweeps:
            done = live.copy()
        prev = np.where(stuck, -np.inf, val)
        if done.any():
            idx = rows[done]
            out_val[idx] = val[done]
            for b in range(k):
                out_vecs[b][idx] = vecs[b][done]
            out_sweeps[idx] = sweep
            out_resid[idx] = np.where(np.isfinite(resid[done]), resid[done], 0.0)
            live &= ~done
            n_live = int(live.sum())
            if n_live == 0:
                break
            if n_live < 0.7 * live.size:
                keep = np.flatnonzero(live)
                rows, prev, live = rows[keep], prev[keep], live[keep]
                vecs = [v[keep] for v in vecs]
                cur_ops = cur_ops.take(keep)
    return out_val, out_vecs, out_sweeps, out_resid


def _permuted(L: np.ndarray, n: int, P: Partition) -> np.ndarray:
    """Batch of operators with the blocks of ``P`` made contiguous."""
    order = [q - 1 for q in P.order]
    B = L.shape[0]
    axes = [0, *[1 + q for q in order], *[1 + n + q for q in order]]
    return L.reshape((B,) + (2,) * (2 * n)).transpose(axes).reshape(B, 2**n, 2**n)


def _restart_inits(cfg: GConfig, P: Partition, restarts: int) -> list[list[np.ndarray]]:
    return [_haar_blocks(cfg.seed, (r,), P.block_dims()) for r in range(restarts)]


def _best_of_runs(Lp: np.ndarray, P: Partition, cfg: GConfig, inits: list[list[np.ndarray]], history=None):
    """Run every start for every operator; return the best per operator.

    ``inits[r][j]`` is either a ``(Dj,)`` vector shared by the batch or a
    ``(N, Dj)`` array of per-operator starts.
    """
    N = Lp.shape[0]
    R = len(inits)
    dims = P.block_dims()
    stacked = np.repeat(Lp, R, axis=0)
    start = []
    for j, d in enumerate(dims):
        cols = [np.broadcast_to(inits[r][j], (N, d)) for r in range(R)]
        start.append(np.stack(cols, axis=1).reshape(N * R, d))
    vals, vecs, sweeps, resid = alternate(
        stacked, dims, start, cfg.tol, cfg.max_sweeps, reseed=(cfg.seed, P.k), history=history
    )
    vals = vals.reshape(N, R)
    best = np.argmax(vals, axis=1)
    rows = np.arange(N)
    blocks = [v.reshape(N, R, -1)[rows, best] for v in vecs]
    return vals[rows, best], blocks, sweeps.reshape(N, R), resid.reshape(N, R)[rows, best]


def g_partition(L: np.ndarray, layout: RegisterLayout | int, P: PartitionLike, cfg: GConfig | None = None) -> GResult:
    """Separability eigenvalue of one operator for one partition.

    The value is the best over ``cfg.restarts_for(P)`` runs from independent
    Haar-random product starts seeded by ``(cfg.seed, restart index)``.
    """
    cfg = cfg or GConfig()
    layout = as_layout(layout)
    if any(d != 2 for d in layout.dims):
        raise DimensionError("only qubit registers are supported")
    L = check_contraction(L, layout.dim)
    P = as_partition(P, layout.n)
    R = cfg.restarts_for(P)
    Lp = _permuted(L[None], layout.n, P)
    hist: list = []
    val, blocks, sweeps, resid = _best_of_runs(Lp, P, cfg, _restart_inits(cfg, P, R), history=hist)
    # (sweeps, R); a run's column turns nan once it has stopped
    per_run = np.array(hist)
    trace = []
    if per_run.size:
        best_run = _best_run_index(per_run)
        trace = [float(x) for x in per_run[:, best_run] if np.isfinite(x)]
    return GResult(
        value=float(val[0]),
        optimizer=[b[0] for b in blocks],
        sweeps_used=int(sweeps[0].max()),
        restarts_used=R,
        partition=P,
        residual=float(resid[0]),
        history=trace,
    )


def _best_run_index(per_run: np.ndarray) -> int:
    last = np.array([col[np.isfinite(col)][-1] if np.isfinite(col).any() else -np.inf for col in per_run.T])
    return int(np.argmax(last))


def _merge_blocks(T: Partition, vecs: Sequence[np.ndarray], P: Partition) -> list[np.ndarray]:
    """Turn T-block vectors into P-block vectors, for T refining P."""
    out = []
    N = vecs[0].shape[0]
    for pb in P.blocks:
        members = [i for i, tb in enumerate(T.blocks) if set(tb) <= set(pb)]
        v = _batched_kron([vecs[i] for i in members])
        order = [q for i in members for q in T.blocks[i]]
        m = len(order)
        axes = [0, *[1 + order.index(q) for q in sorted(order)]]
        out.append(v.reshape((N,) + (2,) * m).transpose(axes).reshape(N, 2**m))
    return out


@dataclass
class ProfileBatch:
    keys: tuple[str, ...]
    values: np.ndarray        # (N, K)
    restarts_used: np.ndarray  # (N,)
    residual: np.ndarray       # (N,)
    optimizers: dict = field(default_factory=dict, repr=False)


def g_profile_batch(Ls: np.ndarray, n: int, cfg: GConfig | None = None, keep_optimizers: bool = False) -> ProfileBatch:
    """Profiles of a batch of already validated contractions of shape (N, 2^n, 2^n).

    Partitions are processed from finest to coarsest.  Each coarser
    partition gets one extra start built from the best optimizer of the
    partitions one level finer that refine it, and its stored value is never
    below theirs, so merging blocks never lowers a profile entry.
    """
    cfg = cfg or GConfig()
    Ls = np.asarray(Ls, dtype=complex)
    N = Ls.shape[0]
    parts = all_valid(n)
    values: dict[str, np.ndarray] = {}
    optim: dict[str, list[np.ndarray]] = {}
    restarts = np.zeros(N, dtype=int)
    residual = np.zeros(N)
    for P in parts:
        R = cfg.restarts_for(P)
        inits = _restart_inits(cfg, P, R)
        finer = [T for T in parts if T.k == P.k + 1 and T.refines(P)]
        floor = None
        if finer:
            fvals = np.stack([values[T.key] for T in finer], axis=1)
            pick = np.argmax(fvals, axis=1)
            floor = fvals[np.arange(N), pick]
            warm = [np.zeros((N, d), dtype=complex) for d in P.block_dims()]
            for t, T in enumerate(finer):
                sel = pick == t
                if sel.any():
                    merged = _merge_blocks(T, [v[sel] for v in optim[T.key]], P)
                    for j in range(P.k):
                        warm[j][sel] = merged[j]
            inits = inits + [warm]
        Lp = _permuted(Ls, n, P)
        val, blocks, _, resid = _best_of_runs(Lp, P, cfg, inits)
        if floor is not None:
            val = np.maximum(val, floor)
        values[P.key] = val
        optim[P.key] = blocks
        restarts += len(inits)
        residual = np.maximum(residual, resid)
    keys = tuple(P.key for P in parts)
    return ProfileBatch(
        keys=keys,
        values=np.stack([values[k] for k in keys], axis=1),
        restarts_used=restarts,
        residual=residual,
        optimizers=optim if keep_optimizers else {},
    )


def g_profile(L: np.ndarray, layout: RegisterLayout | int, cfg: GConfig | None = None) -> dict[str, float]:
    """Map from every valid partition key to ``g(L, P)``."""
    layout = as_layout(layout)
    if any(d != 2 for d in layout.dims):
        raise DimensionError("only qubit registers are supported")
    L = check_contraction(L, layout.dim)
    batch = g_profile_batch(L[None], layout.n, cfg)
    return {k: float(v) for k, v in zip(batch.keys, batch.values[0])}


def g_aggregate(profile: dict[str, float], k: int) -> float:
    """``g_n^(k)``: the largest profile entry over partitions with ``k`` blocks."""
    vals = [v for key, v in profile.items() if key.count("|") + 1 == k]
    if not vals:
        raise InvalidParameter(f"profile has no {k}-block entries")
    return max(vals)


def g_pure_bipartite_oracle(psi: np.ndarray, split: PartitionLike) -> float:
    """Exact ``g(|psi><psi|, A|B)``: the largest squared Schmidt coefficient."""
    psi = np.asarray(psi, dtype=complex)
    n = int(round(np.log2(psi.shape[0]))) if psi.ndim == 1 and psi.shape[0] > 0 else -1
    if psi.ndim != 1 or 2**n != psi.shape[0]:
        raise DimensionError("state length must be a power of two")
    P = as_partition(split, n)
    if P.k != 2:
        raise DimensionError(f"{P.key} is not a bipartition")
    perm = permute_subsystems(psi, n, P.order)
    dl, dr = P.block_dims()
    coeffs, _, _ = schmidt_decompose(perm / np.linalg.norm(perm), dl, dr)
    return float(coeffs[0] ** 2)
