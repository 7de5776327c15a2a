import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkc.circuit import CONTINUOUS, STD_FINITE, T_MAT, run, rz
from qkc.errors import BudgetError, CacheError
from qkc.state import basis_state, fidelity, ghz_state, haar_sample, plus_state, w_state
from qkc.synthesis import (
    PREP_GATE_CONSTANT,
    approximate,
    build_sk_cache,
    compile_product,
    compile_state,
    distance,
    load_sk_cache,
    prepare_exact,
    save_sk_cache,
    sk_approximate,
    sk_plain,
)
from qkc.synthesis.sk import _haar_su2, quaternion_matrix


def word_matrix(word):
    m = np.eye(2, dtype=complex)
    for g in word:
        m = STD_FINITE.gate(g).matrix @ m
    return m


class TestPrepareExact:
    def test_zero_state_prunes_everything(self):
        assert len(prepare_exact(basis_state(3))) == 0

    def test_ghz3(self):
        c = prepare_exact(ghz_state(3))
        assert c.basis_id == CONTINUOUS.id
        assert fidelity(run(c), ghz_state(3)) == pytest.approx(1, abs=1e-10)
        assert len(c) == 3

    def test_basis_ket_is_linear(self):
        c = prepare_exact(basis_state(3, 0b101))
        assert len(c) == 2
        assert fidelity(run(c), basis_state(3, 5)) == pytest.approx(1, abs=1e-12)

    def test_w3(self):
        c = prepare_exact(w_state(3))
        assert fidelity(run(c), w_state(3)) == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_haar_exact_and_bounded(self, n):
        for seed in range(3):
            target = haar_sample(n, seed)
            c = prepare_exact(target)
            assert fidelity(run(c), target) >= 1 - 1e-10
            assert len(c) <= PREP_GATE_CONSTANT * 2 ** n
            # phase is tracked exactly
            assert abs(np.vdot(target.amplitudes, run(c).amplitudes) - 1) < 1e-10

    @given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1))))
    @settings(max_examples=30, deadline=None)
    def test_basis_kets_linear_length(self, arg):
        n, idx = arg
        c = prepare_exact(basis_state(n, idx))
        assert len(c) <= n
        assert fidelity(run(c), basis_state(n, idx)) == pytest.approx(1, abs=1e-12)


class TestCache:
    def test_length_one(self):
        c = build_sk_cache(STD_FINITE, 1, allow_coarse=True)
        assert {("H",), ("T",), ("Tdg",)} <= set(c.words)

    def test_covering_radius_frozen(self, cache):
        # frozen from the probe run at L0 = 12 (10^4 Haar targets, seed 0)
        assert cache.epsilon0 == pytest.approx(0.19264542082069844, abs=1e-9)
        assert len(cache) == 1672

    def test_radius_shrinks_with_length(self, cache):
        short = build_sk_cache(STD_FINITE, 10, allow_coarse=True)
        assert cache.epsilon0 < short.epsilon0

    def test_continuous_basis_refused(self):
        with pytest.raises(CacheError):
            build_sk_cache(CONTINUOUS, 4)

    def test_coarse_net_refused(self):
        with pytest.raises(CacheError):
            build_sk_cache(STD_FINITE, 2)

    def test_words_match_matrices(self, cache):
        for w, m in list(zip(cache.words, cache.matrices))[::37]:
            assert distance(word_matrix(w), m) < 1e-12

    def test_file_round_trip(self, cache, tmp_path):
        save_sk_cache(cache, tmp_path / "c.skc")
        back = load_sk_cache(tmp_path / "c.skc")
        assert back.words == cache.words
        assert back.epsilon0 == cache.epsilon0

    def test_corrupt_file(self, cache, tmp_path):
        p = tmp_path / "bad.skc"
        save_sk_cache(cache, p)
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(CacheError):
            load_sk_cache(p)


class TestApproximate:
    def test_basis_gate(self, cache):
        a = approximate(T_MAT, 1e-3, cache, 0)
        assert a.word == ("T",) and a.distance < 1e-12

    def test_identity(self, cache):
        assert sk_approximate(np.eye(2), 1e-3, cache, 0) == ()

    def test_rz_small_angle(self, cache):
        target = rz(0.1)
        word = sk_approximate(target, 1e-2, cache, 2)
        assert distance(word_matrix(word), target) <= 1e-2

    def test_depth_zero_matches_brute_force(self, cache):
        target = rz(0.1)
        best = min(distance(m, target) for m in cache.matrices)
        a = approximate(target, 1.0, cache, 0)
        assert a.distance == pytest.approx(best, abs=1e-12)

    def test_budget_error(self, cache):
        with pytest.raises(BudgetError):
            approximate(rz(0.1234), 1e-9, cache, 0)

    def test_plain_recursion_converges(self, cache):
        u = quaternion_matrix(_haar_su2(1, 77)[0])
        d = [distance(word_matrix(sk_plain(u, cache, k)), u) for k in range(3)]
        assert d[2] < d[0]

    @given(st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_reported_distance_is_real(self, cache, seed):
        u = quaternion_matrix(_haar_su2(1, seed)[0])
        a = approximate(u, 1e-3, cache, depth=8)
        assert a.distance <= 1e-3
        assert distance(word_matrix(a.word), u) == pytest.approx(a.distance, abs=1e-12)


class TestCompileState:
    def test_zero_state(self, cache):
        c, rep = compile_state(basis_state(3), 0.1, STD_FINITE, cache)
        assert len(c) == 0 and rep.fidelity == 1.0

    def test_ghz3_exact(self, cache):
        c, rep = compile_state(ghz_state(3), 1e-3, STD_FINITE, cache)
        assert rep.fidelity == pytest.approx(1, abs=1e-10)
        assert rep.continuous_count == 0
        assert c.count("CNOT") == 2

    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
    def test_haar3(self, cache, eps):
        target = haar_sample(3, 2024)
        c, rep = compile_state(target, eps, STD_FINITE, cache)
        assert c.basis_id == "STD_FINITE"
        assert rep.fidelity >= 1 - eps
        assert fidelity(run(c), target) == pytest.approx(rep.fidelity, abs=1e-12)

    def test_budget_soundness(self, cache):
        target = haar_sample(3, 5)
        c, rep = compile_state(target, 1e-2, STD_FINITE, cache)
        assert rep.distance_bound <= rep.distance_budget + 1e-12
        if rep.continuous_count:
            assert rep.distance_bound <= rep.continuous_count * rep.eps_gate + 1e-12
        # state error is bounded by the summed segment distances
        ov = np.vdot(target.amplitudes, run(c).amplitudes)
        err = np.linalg.norm(run(c).amplitudes * np.conj(ov) / abs(ov) - target.amplitudes)
        assert err <= rep.distance_bound + 1e-9

    def test_bad_eps(self, cache):
        with pytest.raises(ValueError):
            compile_state(basis_state(1), 1.5, STD_FINITE, cache)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_basis_kets_linear(self, cache, n):
        c, _ = compile_state(basis_state(n, (1 << n) - 1), 1e-2, STD_FINITE, cache)
        # X = H T^4 H is the shortest exact word for a bit flip
        assert len(c) == 6 * n


class TestCompileProduct:
    def test_zeros(self, cache):
        c, _ = compile_product([basis_state(1), basis_state(1)], 1e-2, STD_FINITE, cache)
        assert len(c) == 0 and c.num_qubits == 2

    def test_plus(self, cache):
        c, rep = compile_product([plus_state()] * 4, 1e-2, STD_FINITE, cache)
        assert [g.name for g in c.gates] == ["H"] * 4
        assert rep.fidelity == pytest.approx(1, abs=1e-10)

    def test_random_factors(self, cache):
        factors = [haar_sample(1, s) for s in (11, 12, 13)]
        c, rep = compile_product(factors, 1e-2, STD_FINITE, cache)
        assert rep.fidelity >= 0.99
        assert rep.strategy == "PRODUCT"
        assert not any(g.name == "CNOT" for g in c.gates)
