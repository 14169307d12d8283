"""Dense linear algebra on multi-qubit registers.

Conventions: subsystems are numbered from 1, and subsystem 1 is the most
significant factor of the Kronecker index, so ``|0011>`` is basis index 3
of a 4-qubit register. Operators are plain ``numpy`` complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidPermutation, InvalidSubsystem, NotHermitian

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered local dimensions of a composite register."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"invalid subsystem dimensions {self.dims!r}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "RegisterLayout":
        return cls((2,) * int(n))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def block_dim(self, block: Iterable[int]) -> int:
        return int(np.prod([self.dims[i - 1] for i in block]))


def as_layout(layout: RegisterLayout | int) -> RegisterLayout:
    if isinstance(layout, RegisterLayout):
        return layout
    return RegisterLayout.qubits(layout)


def _check_subsystems(layout: RegisterLayout, subsystems: Iterable[int]) -> list[int]:
    subs = sorted(set(int(s) for s in subsystems))
    for s in subs:
        if not 1 <= s <= layout.n:
            raise InvalidSubsystem(f"subsystem {s} outside 1..{layout.n}")
    return subs


def _check_square(M: np.ndarray, layout: RegisterLayout) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape != (layout.dim, layout.dim):
        raise DimensionError(f"expected a {layout.dim}x{layout.dim} matrix, got shape {M.shape}")
    return M


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; the subsystems of earlier factors come first."""
    if not ops:
        raise DimensionError("tensor_product needs at least one factor")
    return reduce(np.kron, (np.asarray(op) for op in ops))


def partial_trace(M: np.ndarray, layout: RegisterLayout | int, traced: Iterable[int]) -> np.ndarray:
    """Trace out the subsystems in ``traced``; the kept ones stay in ascending order."""
    layout = as_layout(layout)
    M = _check_square(M, layout)
    traced = _check_subsystems(layout, traced)
    if len(traced) == layout.n:
        raise InvalidSubsystem("cannot trace out every subsystem")
    if not traced:
        return M.copy()
    t = M.reshape(layout.dims * 2)
    # trace axes from the highest index down so earlier axis numbers stay valid
    for s in sorted(traced, reverse=True):
        remaining = t.ndim // 2
        t = np.trace(t, axis1=s - 1, axis2=s - 1 + remaining)
    kept_dim = layout.dim // layout.block_dim(traced)
    return t.reshape(kept_dim, kept_dim)


def partial_transpose(M: np.ndarray, layout: RegisterLayout | int, transposed: Iterable[int]) -> np.ndarray:
    layout = as_layout(layout)
    M = _check_square(M, layout)
    subs = _check_subsystems(layout, transposed)
    if not subs or len(subs) == layout.n:
        raise InvalidSubsystem("partial transpose needs a nonempty proper subset of subsystems")
    n = layout.n
    axes = list(range(2 * n))
    for s in subs:
        axes[s - 1], axes[n + s - 1] = axes[n + s - 1], axes[s - 1]
    return M.reshape(layout.dims * 2).transpose(axes).reshape(layout.dim, layout.dim)


def inverse_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for pos, src in enumerate(perm, start=1):
        inv[src - 1] = pos
    return tuple(inv)


def _check_perm(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, n + 1)):
        raise InvalidPermutation(f"{perm!r} is not a permutation of 1..{n}")
    return perm


def permute_subsystems(x: np.ndarray, layout: RegisterLayout | int, perm: Sequence[int]) -> np.ndarray:
    """Reorder the subsystems of a state vector or operator.

    Position ``i`` of the result holds subsystem ``perm[i]`` of the input, so
    ``perm=(2, 1)`` swaps a pair: ``|01> -> |10>``.  The returned layout is
    ``[layout.dims[p - 1] for p in perm]``.
    """
    layout = as_layout(layout)
    perm = _check_perm(perm, layout.n)
    x = np.asarray(x)
    axes = [p - 1 for p in perm]
    if x.ndim == 1:
        if x.shape[0] != layout.dim:
            raise DimensionError(f"expected a vector of length {layout.dim}, got {x.shape[0]}")
        return x.reshape(layout.dims).transpose(axes).reshape(-1)
    x = _check_square(x, layout)
    n = layout.n
    return x.reshape(layout.dims * 2).transpose(axes + [a + n for a in axes]).reshape(layout.dim, layout.dim)


def schmidt_decompose(psi: np.ndarray, left_dim: int, right_dim: int):
    """Schmidt decomposition of a bipartite vector via SVD.

    Returns ``(coefficients, left_vectors, right_vectors)`` with coefficients
    sorted in descending order and ``psi = sum_j c_j left[:, j] (x) right[:, j]``.
    Coefficients are singular values; their squares sum to ``||psi||^2``.
    """
    psi = np.asarray(psi)
    if psi.ndim != 1 or left_dim * right_dim != psi.shape[0]:
        raise DimensionError(f"cannot split a vector of length {psi.shape[0]} as {left_dim}x{right_dim}")
    u, s, vh = np.linalg.svd(psi.reshape(left_dim, right_dim), full_matrices=False)
    return s, u, vh.T


def hermitize(H: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(H + H^dagger)/2`` after checking ``H`` is Hermitian within ``tol``."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if H.size and np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise NotHermitian("matrix is not Hermitian")
    return (H + H.conj().T) / 2


def dominant_eigpair(H: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a Hermitian matrix and a unit eigenvector for it."""
    H = hermitize(H)
    vals, vecs = np.linalg.eigh(H)
    return float(vals[-1]), vecs[:, -1]


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def trace_norm(M: np.ndarray, hermitian: bool | None = None) -> float:
    """Sum of singular values; uses the eigenvalues when ``M`` is Hermitian."""
    M = np.asarray(M)
    if hermitian is None:
        scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
        hermitian = bool(np.max(np.abs(M - M.conj().T)) <= HERMITIAN_TOL * scale)
    if hermitian:
        return float(np.sum(np.abs(np.linalg.eigvalsh((M + M.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def min_eigenvalue(H: np.ndarray) -> float:
    H = np.asarray(H)
    return float(np.linalg.eigvalsh((H + H.conj().T) / 2)[0])
