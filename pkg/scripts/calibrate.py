"""Fit the constants in src/qkc/calibration.json on a reference ensemble.

Each constant is the largest observed ratio (measured bits / bound with
constant 1) times HEADROOM.  Reference seeds start at REF_SEED and never
overlap the seeds used in tests/.

    python3 scripts/calibrate.py [--cache c.skc] [--dry-run]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from qkc.circuit import STD_FINITE
from qkc.complexity import bound_generic, bound_schmidt
from qkc.compress import compress
from qkc.encoding import CodeSpec, encode
from qkc.entanglement import (
    _ancilla_build,
    basis_expansion,
    graph_circuit,
    random_graph,
    random_superposition,
)
from qkc.experiments import sample_seed
from qkc.state import ghz_state, haar_sample
from qkc.synthesis import build_sk_cache, compile_state, load_sk_cache

HEADROOM = 1.25
REF_SEED = 90_000
OUT = Path(__file__).resolve().parent.parent / "src" / "qkc" / "calibration.json"


def bits(circ, compressed=True):
    es = encode(circ, CodeSpec("OMEGA_BIN", STD_FINITE))
    return len(compress(es)) if compressed else len(es)


def fit_generic(cache, samples=8):
    worst = 0.0
    for n in (2, 3, 4):
        for eps in (1e-1, 1e-2, 1e-3):
            for i in range(samples):
                circ, _ = compile_state(haar_sample(n, sample_seed(REF_SEED, i)), eps, STD_FINITE, cache)
                worst = max(worst, bits(circ) / bound_generic(n, eps))
        print(f"  generic through N={n}: worst ratio {worst:.3f}")
    return worst


def fit_schmidt(cache, eps=1e-2, cases=10):
    worst = 0.0
    targets = [basis_expansion(ghz_state(n)) for n in range(2, 7)]
    targets += [random_superposition(2 + i % 5, REF_SEED + i)[1] for i in range(cases)]
    for dec in targets:
        circ, _, _ = _ancilla_build(dec, eps, STD_FINITE, cache, 8)
        ratio = bits(circ) / bound_schmidt(dec.num_qubits, 1.0, eps)
        worst = max(worst, ratio)
        print(f"  schmidt N={dec.num_qubits}: ratio {ratio:.2f}")
    return worst


def fit_graph(graphs=20):
    worst = 0.0
    for i in range(graphs):
        n = 3 + i % 4
        circ = graph_circuit(n, random_graph(n, REF_SEED + i))
        worst = max(worst, bits(circ, compressed=False) / n ** 2)
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cache")
    ap.add_argument("--dry-run", action="store_true")
    args = ap.parse_args()
    cache = load_sk_cache(args.cache) if args.cache else build_sk_cache(STD_FINITE, 12)
    raw = {"c_generic": fit_generic(cache), "c_s": fit_schmidt(cache), "c_g": fit_graph()}
    cal = {k: round(v * HEADROOM, 3) for k, v in raw.items()}
    doc = {**cal, "headroom": HEADROOM, "reference_seed": REF_SEED,
           "observed_max": {k: round(v, 4) for k, v in raw.items()}}
    text = json.dumps(doc, indent=2) + "\n"
    print(text)
    if not args.dry_run:
        OUT.write_text(text)


if __name__ == "__main__":
    main()
