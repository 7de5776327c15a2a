"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  Seeds here never overlap the calibration seeds (90000+).
"""
import time
from dataclasses import replace
from math import log2

import numpy as np
import pytest

from helpers import random_finite_circuit
from qkc.circuit import STD_FINITE, Circuit, Gate, run
from qkc.complexity import GENERIC, PRODUCT, bound_schmidt, complexity_estimate, load_calibration
from qkc.compress import compress, decompress
from qkc.encoding import OMEGA_BIN, OMEGA_TXT, CodeSpec, EncodedString, decode, encode, translate
from qkc.entanglement import (
    _ancilla_build,
    basis_expansion,
    graph_circuit,
    graph_state,
    random_graph,
    random_superposition,
    schmidt_measure_bounds,
    simulate_postselected,
)
from qkc.errors import DecodeError
from qkc.experiments import (
    ENSEMBLE,
    EPS_SCALING,
    N_SCALING,
    PRODUCT_SCALING,
    ExperimentConfig,
    run_ensemble,
    run_scaling,
)
from qkc.state import fidelity, ghz_state, random_product_state, w_state

EPS_GRID = (1e-1, 1e-2, 1e-3)
BIN = CodeSpec(OMEGA_BIN)
TXT = CodeSpec(OMEGA_TXT)


@pytest.fixture(scope="module")
def fidelity_sweep(cache):
    """50 Haar targets per (N, eps); one EPS_SCALING run per N, with its wall time."""
    out, start = {}, time.perf_counter()
    for n in (2, 3, 4):
        out[n] = run_scaling(ExperimentConfig(EPS_SCALING, (n,), EPS_GRID, 50, seed=0), cache)
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def ancilla_cases(cache):
    eps = 1e-2
    cases = []
    for n in range(2, 7):
        dec = basis_expansion(ghz_state(n))
        circ, post, _ = _ancilla_build(dec, eps, STD_FINITE, cache, 8)
        p, f = simulate_postselected(circ, post, ghz_state(n))
        cases.append(("ghz", n, dec, circ, p, f))
    for i in range(20):
        n = 2 + i % 5
        target, dec = random_superposition(n, i)
        circ, post, _ = _ancilla_build(dec, eps, STD_FINITE, cache, 8)
        p, f = simulate_postselected(circ, post, target)
        cases.append(("random", n, dec, circ, p, f))
    return eps, cases


def test_criterion_01_fidelity_contract(fidelity_sweep, criterion):
    reports, seconds = fidelity_sweep
    rows = [r for rep in reports.values() for r in rep.rows]
    bad = [r for r in rows if not (r.ok and r.fidelity >= 1 - r.eps)]
    ok = len(rows) == 450 and not bad and seconds < 600
    criterion(1, ok, f"{len(rows) - len(bad)}/{len(rows)} compiles meet 1-eps; {seconds:.0f}s total (limit 600s)")
    assert ok


def test_criterion_02_eps_scaling(fidelity_sweep, criterion):
    rep = fidelity_sweep[0][3]
    means = [t["mean_compressed_bits"] for t in rep.table]
    increasing = all(a < b for a, b in zip(means, means[1:]))
    r = rep.fit["pearson_r"]
    ok = increasing and rep.fit["slope"] > 0 and r >= 0.95
    criterion(2, ok, f"N=3 means {[round(m, 1) for m in means]}, pearson r={r:.4f} (need >= 0.95)")
    assert ok


def test_criterion_03_n_scaling(cache, criterion):
    rep = run_scaling(ExperimentConfig(N_SCALING, (2, 3, 4, 5), (1e-1,), 20, seed=0), cache)
    ratios = [round(t["ratio"], 1) for t in rep.table]
    band = rep.fit["ratio_band"]
    ok = band <= 4.0
    criterion(3, ok, f"bits/2^N = {ratios} for N=2..5, band {band:.2f} (need <= 4)")
    assert ok


def test_criterion_04_separable(cache, criterion):
    rep = run_scaling(ExperimentConfig(PRODUCT_SCALING, tuple(range(2, 9)), (1e-2,), 20, seed=0), cache)
    band = rep.fit["ratio_band"]
    wins = 0
    for i in range(50):
        target, factors = random_product_state(5, 1000 + i)
        k = complexity_estimate(target, 1e-2, STD_FINITE, cache, [GENERIC, PRODUCT], factors=factors)
        wins += k.result(PRODUCT).compressed_bits < k.result(GENERIC).compressed_bits
    ok = band <= 4.0 and wins >= 45
    criterion(4, ok, f"bits/(N log2(N/eps)) band {band:.2f} over N=2..8 (need <= 4); "
                     f"product beats generic at N=5 in {wins}/50 (need >= 45)")
    assert ok


def test_criterion_05_graph_states(criterion):
    c_g = load_calibration()["c_g"]
    worst_f, worst_ratio = 0.0, 0.0
    for i in range(20):
        n = 3 + i % 4
        edges = random_graph(n, i)
        circ = graph_circuit(n, edges)
        worst_f = max(worst_f, abs(1 - fidelity(run(circ), graph_state(n, edges))))
        worst_ratio = max(worst_ratio, len(encode(circ, BIN)) / n ** 2)
    ok = worst_f <= 1e-10 and worst_ratio <= c_g
    criterion(5, ok, f"max |1-F| = {worst_f:.1e}; max raw bits/N^2 = {worst_ratio:.2f} vs c_g = {c_g}")
    assert ok


def test_criterion_06_ancilla(ancilla_cases, criterion):
    _, cases = ancilla_cases
    ghz = [c for c in cases if c[0] == "ghz"]
    rnd = [c for c in cases if c[0] == "random"]
    ghz_ok = all(abs(p - 0.5) <= 1e-9 and abs(f - 1) <= 1e-9 for *_, p, f in ghz)
    fid_ok = all(f >= 0.99 for *_, p, f in rnd)
    in_range = sum(0.4 <= p <= 0.6 for *_, p, f in rnd)
    ps = [p for *_, p, _ in rnd]
    ok = ghz_ok and fid_ok and in_range == len(rnd)
    criterion(6, ok, f"GHZ_2..6 exact: {ghz_ok}; random min F = {min(f for *_, f in rnd):.4f}; "
                     f"p in [0.4, 0.6] for {in_range}/{len(rnd)} (range {min(ps):.3f}..{max(ps):.3f})")
    assert ok


def test_criterion_07_entanglement_bound(ancilla_cases, criterion):
    eps, cases = ancilla_cases
    c_s = load_calibration()["c_s"]
    ratios = []
    for _, n, dec, circ, _, _ in cases:
        es_upper = log2(dec.r)
        ratios.append(len(compress(encode(circ, BIN))) / bound_schmidt(n, es_upper, eps))
    ok = max(ratios) <= c_s
    criterion(7, ok, f"max compressed/(3N 2^E log2(1/eps)) = {max(ratios):.1f} vs c_s = {c_s} over {len(ratios)} cases")
    assert ok


def test_criterion_08_schmidt_reports(criterion):
    product = [schmidt_measure_bounds(random_product_state(n, n)[0]) for n in range(1, 6)]
    ghz = [schmidt_measure_bounds(ghz_state(n)) for n in range(2, 7)]
    w = schmidt_measure_bounds(w_state(3))
    ok = (all((r.lower, r.upper) == (0.0, 0.0) for r in product)
          and all((r.lower, r.upper) == (1.0, 1.0) for r in ghz)
          and w.lower == 1.0 and abs(w.upper - log2(3)) <= 1e-9)
    criterion(8, ok, f"product (0,0), GHZ_2..6 (1,1), W_3 ({w.lower}, {w.upper:.9f})")
    assert ok


def test_criterion_09_encoding(criterion):
    rng = np.random.default_rng(0)
    corpus = [random_finite_circuit(rng) for _ in range(10_000)]
    round_trip = all(decode(encode(c, BIN), STD_FINITE).same_gates(c) for c in corpus)
    translated = all(
        decode(translate(encode(c, BIN), BIN, TXT), STD_FINITE).same_gates(c) for c in corpus
    )
    prefixes_rejected, prefixes = True, 0
    for c in corpus[:1000]:
        bits = encode(c, BIN).bits
        for k in range(len(bits)):
            prefixes += 1
            try:
                decode(EncodedString(bits[:k], OMEGA_BIN, STD_FINITE.id), STD_FINITE)
                prefixes_rejected = False
            except DecodeError:
                pass
    ok = round_trip and translated and prefixes_rejected
    criterion(9, ok, f"10^4 round trips {round_trip}, translate {translated}, "
                     f"{prefixes} proper prefixes all rejected {prefixes_rejected}")
    assert ok


def test_criterion_10_compressor(criterion):
    rng = np.random.default_rng(0)
    lossless = True
    for _ in range(10_000):
        n = int(rng.integers(0, 1024))
        x = "".join(rng.choice(["0", "1"], n)) if rng.random() < 0.5 else \
            ("".join(rng.choice(["0", "1"], int(rng.integers(1, 48)))) * 64)[:n]
        lossless &= decompress(compress(x)) == x
    block = random_finite_circuit(np.random.default_rng(1), max_qubits=4, max_gates=64)
    gates = list(block.gates) + [Gate("H", (0,))] * (64 - len(block))
    periodic = encode(Circuit(block.num_qubits, STD_FINITE.id, tuple(gates[:64]) * 128), BIN)
    share = len(compress(periodic)) / len(periodic)
    ok = lossless and share < 0.25
    criterion(10, ok, f"10^4 round trips lossless {lossless}; 128x block compresses to {share:.3%} (need < 25%)")
    assert ok


def test_criterion_11_counting(cache, criterion):
    rep = run_ensemble(ExperimentConfig(ENSEMBLE, (3,), (1e-2,), 200, seed=0), cache)
    comp = [r.compressed_bits for r in rep.rows if r.ok]
    mean = float(np.mean(comp))
    curve = [v for _, v in rep.overlays["compressible_fraction"]]
    monotone = all(a <= b for a, b in zip(curve, curve[1:]))
    ok = len(comp) == 200 and min(comp) >= 0.25 * mean and monotone
    criterion(11, ok, f"min {min(comp)} vs 0.25 x mean {mean:.1f}; fraction-bound overlay monotone {monotone}")
    assert ok


def test_criterion_12_determinism(cache, tmp_path, criterion):
    configs = [
        ExperimentConfig(ENSEMBLE, (2,), (1e-1,), 8, seed=5),
        ExperimentConfig(EPS_SCALING, (2,), EPS_GRID, 4, seed=5),
        ExperimentConfig(N_SCALING, (2, 3, 4), (1e-1,), 3, seed=5),
        ExperimentConfig(PRODUCT_SCALING, (2, 3, 4), (1e-2,), 3, seed=5),
    ]
    same = True
    for cfg in configs:
        seen = []
        for tag, workers in (("a", 1), ("b", 4), ("c", 1), ("d", 4)):
            out = tmp_path / f"{cfg.kind}_{tag}.csv"
            runner = run_ensemble if cfg.kind == ENSEMBLE else run_scaling
            runner(replace(cfg, output=str(out)), cache, workers)
            files = sorted(tmp_path.glob(f"{cfg.kind}_{tag}.*"))
            seen.append([f.read_bytes() for f in files])
        same &= all(s == seen[0] for s in seen)
    ok = same
    criterion(12, ok, f"4 experiment kinds x (1, 4, 1, 4 workers): byte-identical {same}")
    assert ok
