import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from kent.database import sample_contraction
from kent.errors import DimensionError, InvalidParameter, NotHermitian, NotPositive
from kent.linalg import permute_subsystems, projector
from kent.partitions import Partition, all_valid, enumerate_valid
from kent.sepeig import GConfig, g_aggregate, g_partition, g_profile, g_pure_bipartite_oracle
from kent.states import ghz, w_state

seeds = st.integers(0, 2**32 - 1)


def bloch(theta, phi):
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def grid_oracle_2q(L, steps=60):
    """max over qubit-1 Bloch sphere of the top eigenvalue of <a|L|a>, polished."""
    T = L.reshape(2, 2, 2, 2)

    def f(x):
        a = bloch(*x)
        M = np.einsum("i,ijkl,k->jl", a.conj(), T, a)
        return -np.linalg.eigvalsh((M + M.conj().T) / 2)[-1]

    grid = [(t, p) for t in np.linspace(0, np.pi, steps) for p in np.linspace(0, 2 * np.pi, steps, endpoint=False)]
    start = min(grid, key=f)
    res = minimize(f, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 5000})
    return -min(res.fun, f(start))


def test_bell():
    assert abs(g_partition(projector(ghz(2)), 2, "1|2").value - 0.5) < 1e-9


@pytest.mark.parametrize("n", [3, 4])
def test_ghz_every_partition(n):
    L = projector(ghz(n))
    for P in all_valid(n):
        assert abs(g_partition(L, n, P).value - 0.5) < 1e-8, P.key


def test_w3():
    L = projector(w_state(3))
    assert abs(g_partition(L, 3, "1|2|3").value - 4 / 9) < 1e-8
    for P in enumerate_valid(3, 2):
        assert abs(g_partition(L, 3, P).value - 2 / 3) < 1e-8


def test_pure_oracle_matches_schmidt(rng):
    for _ in range(10):
        psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        psi /= np.linalg.norm(psi)
        for P in enumerate_valid(4, 2):
            g = g_partition(projector(psi), 4, P).value
            assert abs(g - g_pure_bipartite_oracle(psi, P)) < 1e-8


def test_grid_oracle_two_qubits():
    for i in range(12):
        L = sample_contraction(2, 1000 + i)
        assert abs(g_partition(L, 2, "1|2").value - grid_oracle_2q(L)) < 1e-7


def test_identity_and_bounds(rng):
    assert abs(g_partition(np.eye(8), 3, "1|2|3").value - 1) < 1e-12
    for i in range(5):
        L = sample_contraction(3, i)
        top = np.linalg.eigvalsh(L)[-1]
        for P in all_valid(3):
            res = g_partition(L, 3, P)
            assert res.value <= top + 1e-12
            v = res.product_state()
            # the reported optimizer attains the reported value
            assert abs(np.real(v.conj() @ L @ v) - res.value) < 1e-10


def test_history_is_monotone():
    L = sample_contraction(4, 3)
    res = g_partition(L, 4, "1|2|3|4")
    h = np.array(res.history)
    assert len(h) >= 1 and np.all(np.diff(h) >= -1e-12)
    assert abs(h[-1] - res.value) < 1e-12


def test_product_operator_is_multiplicative(rng):
    A, B = sample_contraction(2, 5), sample_contraction(2, 6)
    gA = g_partition(A, 2, "1|2").value
    gB = g_partition(B, 2, "1|2").value
    assert abs(g_partition(np.kron(A, B), 4, "1|2|3|4").value - gA * gB) < 1e-6


@given(seeds, st.permutations([1, 2, 3]))
def test_permutation_covariance(seed, perm):
    L = sample_contraction(3, seed)
    Lq = permute_subsystems(L, 3, perm)
    for P in all_valid(3):
        # block {a, b} of relabeled operator holds input subsystems perm[a], perm[b]
        pos = {src: i + 1 for i, src in enumerate(perm)}
        Q = Partition.from_blocks([[pos[x] for x in b] for b in P.blocks], 3)
        assert abs(g_partition(L, 3, P).value - g_partition(Lq, 3, Q).value) < 1e-7


def test_deterministic_per_seed():
    L = sample_contraction(3, 9)
    a = g_partition(L, 3, "1|2|3", GConfig(seed=4))
    b = g_partition(L, 3, "1|2|3", GConfig(seed=4))
    assert a.value == b.value and np.array_equal(a.optimizer[0], b.optimizer[0])


def test_profile_monotone_under_coarsening():
    for i in range(20):
        prof = g_profile(sample_contraction(4, i), 4)
        parts = all_valid(4)
        for P in parts:
            for R in parts:
                if P.refines(R):
                    assert prof[R.key] >= prof[P.key]
        aggs = [g_aggregate(prof, k) for k in (2, 3, 4)]
        assert aggs[0] >= aggs[1] >= aggs[2]


def test_profile_matches_single_partition_calls():
    L = sample_contraction(3, 2)
    prof = g_profile(L, 3)
    for P in all_valid(3):
        assert abs(prof[P.key] - g_partition(L, 3, P).value) < 1e-7


def test_input_validation():
    with pytest.raises(NotPositive):
        g_partition(np.diag([1, -0.5, 0, 0]), 2, "1|2")
    with pytest.raises(InvalidParameter):
        g_partition(2 * np.eye(4), 2, "1|2")
    with pytest.raises(NotHermitian):
        g_partition(np.triu(np.ones((4, 4))) / 4, 2, "1|2")
    with pytest.raises(DimensionError):
        g_partition(np.eye(8), 2, "1|2")
    with pytest.raises(InvalidParameter):
        GConfig(restarts=0)


@given(seeds, st.floats(0.05, 1.0))
def test_scale_equivariance(seed, alpha):
    L = sample_contraction(3, seed)
    for P in ("1|2|3", "13|2"):
        assert abs(g_partition(alpha * L, 3, P).value - alpha * g_partition(L, 3, P).value) < 1e-6


@given(seeds, st.permutations([1, 2, 3, 4]))
def test_aggregate_permutation_invariant(seed, perm):
    L = sample_contraction(4, seed)
    a, b = g_profile(L, 4), g_profile(permute_subsystems(L, 4, perm), 4)
    for k in (2, 3, 4):
        assert abs(g_aggregate(a, k) - g_aggregate(b, k)) < 1e-5


def test_three_qubit_pure_oracle(rng):
    for _ in range(50):
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi /= np.linalg.norm(psi)
        for P in enumerate_valid(3, 2):
            assert abs(g_partition(projector(psi), 3, P).value - g_pure_bipartite_oracle(psi, P)) < 1e-5
