"""Databases of random positive contractions with their g-profiles.

A database holds ``N`` operators ``L`` of dimension ``2^n`` together with
``g(L, P)`` for every valid partition ``P``.  Operators and profiles are
kept as stacked arrays so that evaluating a witness margin against every
record is a single matrix product.

File layout (all integers and floats little-endian)::

    b"KENT" | u32 format_version | u64 header_len | header JSON (UTF-8)
    record * count:
        u64 id | u8 source | u32 restarts_used | f64 residual
        f64 * (2 d^2)   L row-major, re/im interleaved
        u32 key_count | (u32 key_len | key bytes | f64 g) * key_count
"""

from __future__ import annotations

import io
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, IntegrityError, InvalidParameter, KentError, NotPositive, VersionError
from .partitions import all_valid
from .sepeig import GConfig, check_contraction, g_profile_batch

MAGIC = b"KENT"
FORMAT_VERSION = 1
CHUNK = 32
SOURCES = ("random", "seeded")
_REC_HEAD = struct.Struct("<QBId")
_U32 = struct.Struct("<I")
_F64 = struct.Struct("<d")


def now_utc() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def reproducible_utc() -> str:
    """Build timestamp that does not break byte-identical rebuilds.

    Honours ``SOURCE_DATE_EPOCH``; otherwise the Unix epoch.
    """
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def record_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0])


def sample_contraction(n: int, rng_seed: int) -> np.ndarray:
    """Random positive contraction with unit spectral norm.

    ``G`` is a complex Ginibre matrix of shape ``2^n x r`` with the rank ``r``
    drawn uniformly from ``1..2^n``; the result is ``G G^dagger / ||G G^dagger||``.
    """
    if not 2 <= n <= 6:
        raise InvalidParameter(f"n={n} outside 2..6")
    d = 2**n
    rng = np.random.default_rng(int(rng_seed))
    r = int(rng.integers(1, d + 1))
    G = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    L = G @ G.conj().T
    L = (L + L.conj().T) / 2
    return L / np.linalg.eigvalsh(L)[-1]


@dataclass(frozen=True)
class DatabaseHeader:
    format_version: int
    n_qubits: int
    count: int
    master_seed: int
    g_config: GConfig
    created_utc: str

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "n_qubits": self.n_qubits,
            "count": self.count,
            "master_seed": self.master_seed,
            "g_config": self.g_config.to_dict(),
            "created_utc": self.created_utc,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DatabaseHeader":
        try:
            return cls(
                format_version=int(d["format_version"]),
                n_qubits=int(d["n_qubits"]),
                count=int(d["count"]),
                master_seed=int(d["master_seed"]),
                g_config=GConfig.from_dict(d["g_config"]),
                created_utc=str(d["created_utc"]),
            )
        except (KeyError, TypeError, ValueError, KentError) as exc:
            raise FormatError(f"bad database header: {exc}") from None


@dataclass
class WitnessRecord:
    id: int
    L: np.ndarray
    profile: dict[str, float]
    restarts_used: int
    residual: float
    source: str = "random"


@dataclass(eq=False)
class Database:
    header: DatabaseHeader
    keys: tuple[str, ...]
    ids: np.ndarray
    matrices: np.ndarray
    profiles: np.ndarray
    restarts_used: np.ndarray
    residual: np.ndarray
    sources: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sources is None:
            self.sources = np.zeros(len(self.ids), dtype=np.uint8)

    @property
    def n(self) -> int:
        return self.header.n_qubits

    @property
    def dim(self) -> int:
        return 2**self.header.n_qubits

    def __len__(self) -> int:
        return len(self.ids)

    def column(self, key: str) -> int:
        return self.keys.index(key)

    def record(self, i: int) -> WitnessRecord:
        return WitnessRecord(
            id=int(self.ids[i]),
            L=self.matrices[i],
            profile={k: float(v) for k, v in zip(self.keys, self.profiles[i])},
            restarts_used=int(self.restarts_used[i]),
            residual=float(self.residual[i]),
            source=SOURCES[int(self.sources[i])],
        )

    @property
    def records(self) -> list[WitnessRecord]:
        return [self.record(i) for i in range(len(self))]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        return (
            self.header == other.header
            and self.keys == other.keys
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("ids", "matrices", "profiles", "restarts_used", "residual", "sources")
            )
        )

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        _write(self, buf)
        return buf.getvalue()


def _empty(n: int, cfg: GConfig, master_seed: int, created_utc: str) -> Database:
    d = 2**n
    keys = tuple(P.key for P in all_valid(n))
    header = DatabaseHeader(FORMAT_VERSION, n, 0, int(master_seed), cfg, created_utc)
    return Database(
        header=header,
        keys=keys,
        ids=np.zeros(0, dtype=np.int64),
        matrices=np.zeros((0, d, d), dtype=complex),
        profiles=np.zeros((0, len(keys))),
        restarts_used=np.zeros(0, dtype=np.int64),
        residual=np.zeros(0),
        sources=np.zeros(0, dtype=np.uint8),
    )


def _profile_chunks(Ls: np.ndarray, n: int, cfg: GConfig, workers: int, first_index: int = 0):
    """Profiles of ``Ls`` computed in fixed-size chunks.

    Chunk boundaries never depend on ``workers``, so the output is the same
    for any pool size.
    """
    starts = list(range(0, len(Ls), CHUNK))

    def run(s):
        try:
            return g_profile_batch(Ls[s : s + CHUNK], n, cfg)
        except KentError as exc:
            raise type(exc)(f"records {first_index + s}..{first_index + s + CHUNK - 1}: {exc}") from exc

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return (
        parts[0].keys if parts else tuple(P.key for P in all_valid(n)),
        np.concatenate([p.values for p in parts]) if parts else np.zeros((0, 0)),
        np.concatenate([p.restarts_used for p in parts]) if parts else np.zeros(0, dtype=int),
        np.concatenate([p.residual for p in parts]) if parts else np.zeros(0),
    )


def build_db(
    n: int,
    count: int,
    cfg: GConfig | None = None,
    master_seed: int | None = None,
    workers: int = 1,
    created_utc: str | None = None,
) -> Database:
    """Sample ``count`` contractions and compute their full g-profiles.

    Record ``i`` is drawn from the seed ``record_seed(master_seed, i)``;
    ``master_seed`` defaults to ``cfg.seed``.
    """
    cfg = cfg or GConfig()
    if count < 1:
        raise InvalidParameter("count must be at least 1")
    master_seed = cfg.seed if master_seed is None else int(master_seed)
    Ls = np.stack([sample_contraction(n, record_seed(master_seed, i)) for i in range(count)])
    keys, values, restarts, resid = _profile_chunks(Ls, n, cfg, workers)
    db = _empty(n, cfg, master_seed, created_utc or reproducible_utc())
    return Database(
        header=replace(db.header, count=count),
        keys=keys,
        ids=np.arange(count, dtype=np.int64),
        matrices=Ls,
        profiles=values,
        restarts_used=restarts.astype(np.int64),
        residual=resid,
        sources=np.zeros(count, dtype=np.uint8),
    )


def augment_db(db: Database, extra: Iterable[np.ndarray], cfg: GConfig | None = None, workers: int = 1) -> Database:
    """Return a copy of ``db`` with seeded contractions appended.

    Each extra operator is rescaled to unit spectral norm; the witness it
    induces, and hence every detection threshold, is unchanged by the scale.
    """
    cfg = cfg or db.header.g_config
    mats = []
    for L in extra:
        L = check_contraction(L, db.dim)
        top = np.linalg.eigvalsh(L)[-1]
        if top <= 1e-12:
            raise NotPositive("cannot seed the zero operator")
        mats.append(L / top)
    if not mats:
        return db
    Ls = np.stack(mats)
    _, values, restarts, resid = _profile_chunks(Ls, db.n, cfg, workers, first_index=len(db))
    m = len(mats)
    start = int(db.ids.max()) + 1 if len(db) else 0
    return Database(
        header=replace(db.header, count=len(db) + m),
        keys=db.keys,
        ids=np.concatenate([db.ids, np.arange(start, start + m, dtype=np.int64)]),
        matrices=np.concatenate([db.matrices, Ls]),
        profiles=np.concatenate([db.profiles, values]),
        restarts_used=np.concatenate([db.restarts_used, restarts.astype(np.int64)]),
        residual=np.concatenate([db.residual, resid]),
        sources=np.concatenate([db.sources, np.ones(m, dtype=np.uint8)]),
    )


def _write(db: Database, fh) -> None:
    header = json.dumps(replace(db.header, count=len(db)).to_json(), sort_keys=True).encode("utf-8")
    fh.write(MAGIC)
    fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
    fh.write(header)
    keys = [k.encode("utf-8") for k in db.keys]
    for i in range(len(db)):
        fh.write(_REC_HEAD.pack(int(db.ids[i]), int(db.sources[i]), int(db.restarts_used[i]), float(db.residual[i])))
        fh.write(np.ascontiguousarray(db.matrices[i], dtype="<c16").tobytes())
        fh.write(_U32.pack(len(keys)))
        for kb, v in zip(keys, db.profiles[i]):
            fh.write(_U32.pack(len(kb)))
            fh.write(kb)
            fh.write(_F64.pack(float(v)))


def save_db(db: Database, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        _write(db, fh)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise IntegrityError("database file is truncated")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out


def load_db(path: str | os.PathLike) -> Database:
    """Read and validate a database file."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a kent database")
    version, hlen = struct.unpack_from("<IQ", data, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
    r = _Reader(data)
    r.pos = 16
    try:
        header_raw = json.loads(r.take(hlen).decode("utf-8"))
    except IntegrityError:
        raise FormatError(f"{path}: header block is truncated") from None
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt header ({exc})") from None
    if not isinstance(header_raw, dict):
        raise FormatError(f"{path}: corrupt header")
    header = DatabaseHeader.from_json(header_raw)
    if header.format_version != version:
        raise FormatError(f"{path}: header version disagrees with file version")
    n = header.n_qubits
    if not 2 <= n <= 6:
        raise FormatError(f"{path}: unsupported qubit count {n}")
    d = 2**n
    expected = tuple(P.key for P in all_valid(n))
    N = header.count
    ids = np.zeros(N, dtype=np.int64)
    sources = np.zeros(N, dtype=np.uint8)
    restarts = np.zeros(N, dtype=np.int64)
    resid = np.zeros(N)
    mats = np.zeros((N, d, d), dtype=complex)
    prof = np.zeros((N, len(expected)))
    col = {k: j for j, k in enumerate(expected)}
    for i in range(N):
        ids[i], sources[i], restarts[i], resid[i] = _REC_HEAD.unpack(r.take(_REC_HEAD.size))
        mats[i] = np.frombuffer(r.take(16 * d * d), dtype="<c16").reshape(d, d)
        (nk,) = _U32.unpack(r.take(4))
        seen = set()
        for _ in range(nk):
            (kl,) = _U32.unpack(r.take(4))
            try:
                key = r.take(kl).decode("utf-8")
            except UnicodeDecodeError:
                raise IntegrityError(f"record {i}: undecodable partition key") from None
            (v,) = _F64.unpack(r.take(8))
            if key not in col or key in seen:
                raise IntegrityError(f"record {i}: unexpected partition key {key!r}")
            seen.add(key)
            prof[i, col[key]] = v
        if len(seen) != len(expected):
            raise IntegrityError(f"record {i}: profile covers {len(seen)} of {len(expected)} partitions")
        if sources[i] >= len(SOURCES):
            raise IntegrityError(f"record {i}: unknown source flag {sources[i]}")
    if r.pos != len(data):
        raise IntegrityError(f"{path}: {len(data) - r.pos} trailing bytes after {N} records")
    db = Database(header, expected, ids, mats, prof, restarts, resid, sources)
    validate(db)
    return db


def validate(db: Database) -> None:
    """Raise IntegrityError unless every record satisfies the stored invariants."""
    if len(db) != db.header.count:
        raise IntegrityError(f"header count {db.header.count} but {len(db)} records")
    if len(np.unique(db.ids)) != len(db.ids):
        raise IntegrityError("duplicate record ids")
    if not len(db):
        return
    M = db.matrices
    herm = np.max(np.abs(M - M.conj().transpose(0, 2, 1)), axis=(1, 2))
    ev = np.linalg.eigvalsh(M)
    checks = [
        (herm > 1e-12, "is not Hermitian"),
        (ev[:, 0] < -1e-8, "is not positive semidefinite"),
        (np.abs(ev[:, -1] - 1) > 1e-9, "does not have unit spectral norm"),
        (~np.all(np.isfinite(db.profiles), axis=1), "has a non-finite profile value"),
        (np.any(db.profiles < 0, axis=1) | np.any(db.profiles > 1 + 1e-9, axis=1), "has a profile value outside [0, 1]"),
    ]
    for bad, what in checks:
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise IntegrityError(f"record {int(db.ids[i])} {what}")


def tile(db: Database, copies: int) -> Database:
    """Repeat the records of ``db`` with fresh ids (timing studies only)."""
    N = len(db)
    return Database(
        header=replace(db.header, count=N * copies),
        keys=db.keys,
        ids=np.arange(N * copies, dtype=np.int64),
        matrices=np.concatenate([db.matrices] * copies),
        profiles=np.concatenate([db.profiles] * copies),
        restarts_used=np.concatenate([db.restarts_used] * copies),
        residual=np.concatenate([db.residual] * copies),
        sources=np.concatenate([db.sources] * copies),
    )


def subset(db: Database, indices: Sequence[int]) -> Database:
    idx = np.asarray(indices, dtype=int)
    return Database(
        header=replace(db.header, count=len(idx)),
        keys=db.keys,
        ids=db.ids[idx],
        matrices=db.matrices[idx],
        profiles=db.profiles[idx],
        restarts_used=db.restarts_used[idx],
        residual=db.residual[idx],
        sources=db.sources[idx],
    )
