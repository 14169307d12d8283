import struct

import numpy as np
import pytest

from kent.database import (
    augment_db,
    build_db,
    load_db,
    record_seed,
    sample_contraction,
    save_db,
    subset,
    tile,
    validate,
)
from kent.errors import DimensionError, FormatError, IntegrityError, InvalidParameter, NotPositive, VersionError
from kent.linalg import projector
from kent.partitions import all_valid
from kent.sepeig import GConfig
from kent.states import ghz


def test_sample_contraction_properties():
    for i in range(1000):
        L = sample_contraction(2, i)
        ev = np.linalg.eigvalsh(L)
        assert np.allclose(L, L.conj().T, atol=0)
        assert ev[0] >= -1e-10 and abs(ev[-1] - 1) < 1e-9
    assert np.array_equal(sample_contraction(3, 42), sample_contraction(3, 42))
    with pytest.raises(InvalidParameter):
        sample_contraction(7, 0)


def test_sampled_ranks_cover_range():
    ranks = {np.linalg.matrix_rank(sample_contraction(2, i), tol=1e-9) for i in range(200)}
    assert ranks == {1, 2, 3, 4}


def test_record_seeds_distinct():
    assert len({record_seed(0, i) for i in range(1000)}) == 1000
    assert record_seed(1, 0) != record_seed(0, 1)


def test_build_contract(small_dbs):
    db = small_dbs[3]
    assert db.header.count == len(db) == 60
    assert db.keys == tuple(P.key for P in all_valid(3))
    validate(db)
    g = {k: db.profiles[:, db.column(k)] for k in db.keys}
    for k in ("12|3", "13|2", "1|23"):
        assert np.all(g[k] >= g["1|2|3"])


def test_build_is_deterministic_and_worker_independent():
    a = build_db(2, 70, master_seed=5, workers=1)
    b = build_db(2, 70, master_seed=5, workers=3)
    assert a.to_bytes() == b.to_bytes()
    assert build_db(2, 70, master_seed=6).to_bytes() != a.to_bytes()


def test_round_trip(tmp_path, small_dbs):
    db = subset(small_dbs[4], range(10))
    save_db(db, tmp_path / "x.kdb")
    assert load_db(tmp_path / "x.kdb") == db


def test_truncated_file(tmp_path):
    db = build_db(2, 10)
    raw = db.to_bytes()
    (tmp_path / "t.kdb").write_bytes(raw[:-3])
    with pytest.raises(IntegrityError):
        load_db(tmp_path / "t.kdb")
    (tmp_path / "t.kdb").write_bytes(raw + b"\0")
    with pytest.raises(IntegrityError):
        load_db(tmp_path / "t.kdb")


def test_future_version(tmp_path):
    raw = build_db(2, 3).to_bytes()
    (tmp_path / "v.kdb").write_bytes(raw[:4] + struct.pack("<I", 99) + raw[8:])
    with pytest.raises(VersionError):
        load_db(tmp_path / "v.kdb")


def test_bad_header(tmp_path):
    (tmp_path / "m.kdb").write_bytes(b"NOPE" + b"\0" * 20)
    with pytest.raises(FormatError):
        load_db(tmp_path / "m.kdb")
    raw = build_db(2, 3).to_bytes()
    (hlen,) = struct.unpack("<Q", raw[8:16])
    broken = raw[:16] + b"{" * hlen + raw[16 + hlen :]
    (tmp_path / "h.kdb").write_bytes(broken)
    with pytest.raises(FormatError):
        load_db(tmp_path / "h.kdb")


def test_corrupted_record_fails_validation(tmp_path):
    db = build_db(2, 3)
    db.matrices[1] *= 2
    save_db(db, tmp_path / "c.kdb")
    with pytest.raises(IntegrityError):
        load_db(tmp_path / "c.kdb")


def test_augment():
    db = build_db(2, 5)
    aug = augment_db(db, [projector(ghz(2)), np.eye(4)])
    assert len(aug) == 7 and list(aug.ids[-2:]) == [5, 6]
    assert aug.record(5).source == "seeded" and aug.record(0).source == "random"
    assert abs(aug.record(5).profile["1|2"] - 0.5) < 1e-9
    assert abs(aug.record(6).profile["1|2"] - 1) < 1e-12
    assert np.array_equal(aug.matrices[:5], db.matrices)
    assert augment_db(db, []) is db
    # seeds are rescaled to unit norm
    assert abs(np.linalg.eigvalsh(augment_db(db, [0.5 * np.eye(4)]).matrices[-1])[-1] - 1) < 1e-12


def test_augment_errors():
    db = build_db(2, 2)
    with pytest.raises(NotPositive):
        augment_db(db, [np.diag([1, -1, 0, 0])])
    with pytest.raises(NotPositive):
        augment_db(db, [np.zeros((4, 4))])
    with pytest.raises(DimensionError):
        augment_db(db, [np.eye(8)])


def test_restart_policy_recorded():
    db = build_db(3, 2, GConfig(restarts=3, restarts_hard=5))
    # 3 bipartitions at 3 starts (+1 warm) and the finest at 5
    assert list(db.restarts_used) == [5 + 3 * 4] * 2
    assert db.header.g_config.restarts == 3


def test_tile_keeps_profiles():
    db = build_db(2, 4)
    big = tile(db, 3)
    assert len(big) == 12 and len(set(big.ids.tolist())) == 12
    assert np.array_equal(big.profiles[4:8], db.profiles)
