"""Set partitions of qubit labels.

A `Partition` is stored in canonical form: every block sorted ascending and
blocks ordered by their least element. Its key is the familiar notation
``"12|3|4"``; two groupings that differ only in block order share a key.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence, Union

from .errors import InvalidK, NotAPartition

MAX_QUBITS = 12


def _set_partitions(items: Sequence, k: int) -> Iterator[list[list]]:
    """Yield every partition of ``items`` into exactly ``k`` nonempty groups.

    Restricted-growth enumeration: item ``i`` joins one of the groups opened so
    far or opens the next one; each set partition is produced once.
    """
    m = len(items)
    labels = [0] * m

    def rec(i: int, opened: int):
        if m - i < k - opened:
            return
        if i == m:
            if opened == k:
                groups = [[] for _ in range(k)]
                for item, lab in zip(items, labels):
                    groups[lab].append(item)
                yield groups
            return
        for lab in range(min(opened + 1, k)):
            labels[i] = lab
            yield from rec(i + 1, max(opened, lab + 1))

    if k == 0:
        if m == 0:
            yield []
        return
    yield from rec(0, 0)


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]
    n: int

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> "Partition":
        """Validate a raw grouping of 1-based labels and return its canonical form."""
        raw = [sorted(int(x) for x in b) for b in blocks]
        if any(not b for b in raw):
            raise NotAPartition("empty block")
        flat = [x for b in raw for x in b]
        if n is None:
            n = len(flat)
        if len(flat) != len(set(flat)):
            raise NotAPartition(f"blocks overlap: {raw!r}")
        if set(flat) != set(range(1, n + 1)):
            raise NotAPartition(f"blocks {raw!r} do not cover 1..{n} exactly")
        raw.sort(key=lambda b: b[0])
        return cls(tuple(tuple(b) for b in raw), n)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Parse ``"12|3|4"`` (or ``"1,2|3"`` style for labels above 9)."""
        text = text.strip()
        parts = text.split("|")
        if not text or any(not p.strip() for p in parts):
            raise NotAPartition(f"cannot parse partition {text!r}")
        try:
            if "," in text:
                blocks = [[int(x) for x in p.split(",")] for p in parts]
            else:
                blocks = [[int(ch) for ch in p.strip()] for p in parts]
        except ValueError:
            raise NotAPartition(f"cannot parse partition {text!r}") from None
        return cls.from_blocks(blocks)

    @classmethod
    def finest(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(1, n + 1)), n)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def key(self) -> str:
        if self.n <= 9:
            return "|".join("".join(str(x) for x in b) for b in self.blocks)
        return "|".join(",".join(str(x) for x in b) for b in self.blocks)

    @property
    def order(self) -> tuple[int, ...]:
        """Qubit labels in block order, the permutation that makes blocks contiguous."""
        return tuple(x for b in self.blocks for x in b)

    def block_dims(self, local_dim: int = 2) -> tuple[int, ...]:
        return tuple(local_dim ** len(b) for b in self.blocks)

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` lies inside a block of ``other``."""
        if self.n != other.n:
            return False
        owner = {x: i for i, b in enumerate(other.blocks) for x in b}
        return all(len({owner[x] for x in b}) == 1 for b in self.blocks)

    def __str__(self) -> str:
        return self.key


PartitionLike = Union[Partition, str, Sequence[Sequence[int]]]


def as_partition(p: PartitionLike, n: int | None = None) -> Partition:
    if isinstance(p, Partition):
        return p
    if isinstance(p, str):
        part = Partition.parse(p)
    else:
        part = Partition.from_blocks(p, n)
    if n is not None and part.n != n:
        raise NotAPartition(f"partition {part.key} is not a partition of 1..{n}")
    return part


def canonical_key(blocks: PartitionLike, n: int | None = None) -> str:
    return as_partition(blocks, n).key


def equivalent(P: PartitionLike, Q: PartitionLike) -> bool:
    return as_partition(P).key == as_partition(Q).key


@lru_cache(maxsize=None)
def _valid(n: int, k: int) -> tuple[Partition, ...]:
    found = [Partition.from_blocks(groups, n) for groups in _set_partitions(list(range(1, n + 1)), k)]
    return tuple(sorted(found, key=lambda p: p.key))


def enumerate_valid(n: int, k: int) -> list[Partition]:
    """One canonical representative per class of ``k``-block partitions of ``1..n``."""
    if not 2 <= n <= MAX_QUBITS:
        raise InvalidK(f"n={n} outside 2..{MAX_QUBITS}")
    if not 2 <= k <= n:
        raise InvalidK(f"k={k} outside 2..{n}")
    return list(_valid(n, k))


def all_valid(n: int) -> list[Partition]:
    """Valid partitions for every block count, finest first (k = n down to 2)."""
    return [p for k in range(n, 1, -1) for p in enumerate_valid(n, k)]


def coarsenings_b(P: PartitionLike, k: int) -> list[Partition]:
    """Partitions with ``k`` blocks obtained by merging whole blocks of ``P``."""
    P = as_partition(P)
    if not 2 <= k <= P.k:
        raise InvalidK(f"k={k} outside 2..{P.k} for partition {P.key}")
    found = {}
    for groups in _set_partitions(list(P.blocks), k):
        R = Partition.from_blocks([[x for b in g for x in b] for g in groups], P.n)
        found[R.key] = R
    return [found[key] for key in sorted(found)]

