import numpy as np
import pytest
from hypothesis import given, strategies as st

from kent.database import augment_db, build_db, subset
from kent.errors import DimensionError, EmptyDatabase, InvalidK, InvalidParameter, NotAPartition, NotPositive
from kent.linalg import permute_subsystems, projector, tensor_product
from kent.measures import (
    as_density,
    e_w_k,
    e_w_subpartition,
    measure_tuple,
    negativity,
    negativity_benchmark,
)
from kent.partitions import Partition, enumerate_valid
from kent.states import NoisyFamily, family_state, named_pure, random_density, random_separable

seeds = st.integers(0, 2**32 - 1)
BELL = projector(named_pure("bell"))
SINGLET = projector(named_pure("singlet"))


@pytest.fixture(scope="module")
def bell_db():
    return augment_db(build_db(2, 30, master_seed=3), [BELL, SINGLET])


@pytest.fixture(scope="module")
def cross_db():
    # Bell projector on qubits 1 and 3, identity on 2 and 4
    L = permute_subsystems(tensor_product(BELL, np.eye(4)), 4, (1, 3, 2, 4))
    return augment_db(build_db(4, 20, master_seed=4), [L])


def bell13():
    return permute_subsystems(tensor_product(BELL, np.eye(4) / 4), 4, (1, 3, 2, 4))


def test_maximally_mixed_is_zero(bell_db):
    assert e_w_k(np.eye(4) / 4, bell_db, 2).value == 0


def test_bell_detected(bell_db):
    r = e_w_k(BELL, bell_db, 2)
    assert abs(r.value - 0.5) < 1e-9 and r.best_witness_id == 30 and r.best_partition == "1|2"


def test_werner_at_threshold(bell_db):
    fam = NoisyFamily("werner", 2)
    assert e_w_k(family_state(fam, 1 / 3), bell_db, 2).value == 0
    # just above, the singlet witness gives (3p+1)/4 - 1/2
    p = 0.6
    r = e_w_k(family_state(fam, p), bell_db, 2)
    assert abs(r.value - ((3 * p + 1) / 4 - 0.5)) < 1e-9 and r.best_witness_id == 31


def test_value_recomputable(small_dbs):
    db = small_dbs[3]
    rho = projector(named_pure("ghz", 3))
    for r in measure_tuple(rho, db):
        if r.best_witness_id is None:
            assert r.value == 0
            continue
        rec = db.record(int(np.flatnonzero(db.ids == r.best_witness_id)[0]))
        g = max(v for key, v in rec.profile.items() if key.count("|") + 1 == r.k)
        assert abs(r.value - max(0.0, np.trace(rec.L @ rho).real - g)) < 1e-10


def test_ghz4_tuple():
    db = augment_db(build_db(4, 10), [projector(named_pure("ghz", 4))])
    values = [r.value for r in measure_tuple(projector(named_pure("ghz", 4)), db)]
    assert np.allclose(values, 0.5, atol=1e-9)
    assert [r.k for r in measure_tuple(np.eye(16) / 16, db)] == [4, 3, 2]


def test_subpartition_examples(cross_db):
    product = tensor_product(BELL, np.eye(4) / 4)
    assert e_w_subpartition(product, cross_db, "12|3|4", 2).value == 0
    assert abs(e_w_subpartition(bell13(), cross_db, "12|3|4", 3).value - 0.5) < 1e-10
    assert e_w_subpartition(bell13(), cross_db, "12|3|4", 2).value == 0


def test_subpartition_finest_equals_full(small_dbs, rng):
    db = small_dbs[4]
    for _ in range(5):
        rho = random_density(4, seed=rng)
        for k in (2, 3, 4):
            a, b = e_w_k(rho, db, k), e_w_subpartition(rho, db, Partition.finest(4), k)
            assert a.value == b.value and a.best_witness_id == b.best_witness_id


def test_subpartition_tuple_length(small_dbs):
    out = measure_tuple(np.eye(16) / 16, small_dbs[4], "12|3|4")
    assert [r.k for r in out] == [3, 2] and all(r.partition_context == "12|3|4" for r in out)


def test_ties_go_to_lowest_id():
    db = augment_db(build_db(2, 3), [BELL, BELL])
    assert e_w_k(BELL, db, 2).best_witness_id == 3


@given(seeds, st.integers(2, 4), st.integers(1, 5))
def test_faithful_on_separable(small_dbs, seed, n, terms):
    db = small_dbs[n]
    rho = random_separable(n, terms, seed)
    for r in measure_tuple(rho, db):
        assert r.value == 0 and r.margin <= 1e-12


@given(seeds)
def test_hierarchy(small_dbs, seed):
    rho = random_density(4, rank=int(seed % 3) + 1, seed=seed)
    vals = [r.value for r in measure_tuple(rho, small_dbs[4])]
    assert vals[0] >= vals[1] >= vals[2]


@given(seeds, st.floats(0, 1))
def test_convexity(small_dbs, seed, a):
    db = small_dbs[3]
    rng = np.random.default_rng(seed)
    r1, r2 = random_density(3, rank=1, seed=rng), random_density(3, rank=2, seed=rng)
    for k in (2, 3):
        mix = e_w_k(a * r1 + (1 - a) * r2, db, k).value
        assert mix <= a * e_w_k(r1, db, k).value + (1 - a) * e_w_k(r2, db, k).value + 1e-12


@given(seeds)
def test_range(small_dbs, seed):
    rho = random_density(2, rank=1, seed=seed)
    v = e_w_k(rho, small_dbs[2], 2).value
    assert 0 <= v < 1


def test_errors(small_dbs):
    db = small_dbs[2]
    with pytest.raises(EmptyDatabase):
        e_w_k(np.eye(4) / 4, subset(db, []), 2)
    with pytest.raises(DimensionError):
        e_w_k(np.eye(8) / 8, db, 2)
    with pytest.raises(InvalidK):
        e_w_k(np.eye(4) / 4, db, 3)
    with pytest.raises(InvalidK):
        e_w_subpartition(np.eye(16) / 16, small_dbs[4], "12|34", 3)
    with pytest.raises(NotAPartition):
        e_w_subpartition(np.eye(16) / 16, small_dbs[4], "12|3", 2)


def test_density_validation():
    rho = np.eye(4) / 4
    near = rho + 1e-10 * np.diag([1, 0, 0, 0])
    out = as_density(near)
    assert abs(np.trace(out) - 1) < 1e-15
    with pytest.raises(InvalidParameter):
        as_density(np.eye(4))
    with pytest.raises(NotPositive):
        as_density(np.diag([1.5, -0.5, 0, 0]))


def test_negativity_oracles():
    assert negativity(np.eye(4) / 4) == 0
    assert abs(negativity(BELL) - 0.5) < 1e-12
    fam = NoisyFamily("werner", 2)
    for p in np.linspace(0, 1, 13):
        assert abs(negativity(family_state(fam, p)) - max(0, (3 * p - 1) / 4)) < 1e-12
    ghz3 = projector(named_pure("ghz", 3))
    assert abs(negativity(ghz3, "1|23") - 0.5) < 1e-12
    assert abs(negativity(ghz3, [3]) - 0.5) < 1e-12
    with pytest.raises(DimensionError):
        negativity(np.eye(3) / 3)


def test_negativity_product_is_zero(rng):
    A, B = random_density(1, seed=rng), random_density(2, seed=rng)
    assert negativity(np.kron(A, B), "1|23") == 0


def test_benchmark_counts(bell_db, rng):
    states = [random_density(2, seed=rng) for _ in range(40)] + [BELL]
    row = negativity_benchmark(states, bell_db)
    assert row.samples == 41
    assert row.negativity_entangled + row.negativity_separable == 41
    assert row.measure_entangled + row.measure_separable == 41
    # the measure never fires on a PPT state, so mismatches are missed detections
    assert row.mismatches == row.negativity_entangled - row.measure_entangled
    assert abs(row.detection_error - row.disagreement) < 1e-15
    with pytest.raises(DimensionError):
        negativity_benchmark(states, build_db(3, 2))
