"""Command-line entry point ``qkc``.

Exit codes: 0 success, 1 domain error (bad file, failed budget, decode
error), 2 usage error.  Every random choice is driven by ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .circuit import builtin_basis, format_circuit, read_circuit, write_circuit
from .complexity import complexity_estimate
from .encoding import CODE_IDS, CodeSpec, decode, encode, read_encoded, write_encoded
from .entanglement import (
    SearchBudget,
    ancilla_prepare_circuit,
    read_decomposition,
    schmidt_measure_bounds,
    simulate_postselected,
)
from .errors import QKCError
from .experiments import (
    ENSEMBLE,
    EPS_SCALING,
    N_SCALING,
    PRODUCT_SCALING,
    ExperimentConfig,
    run_ensemble,
    run_scaling,
)
from .state import QuantumState, read_state
from .synthesis.compile import compile_state
from .synthesis.sk import SKCache, build_sk_cache, load_sk_cache, save_sk_cache

CACHE_ENV = "QKC_SK_CACHE"
SCALING_KINDS = {"eps": EPS_SCALING, "n": N_SCALING, "product": PRODUCT_SCALING}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like '2,3,4' or '2..8', got {text!r}") from None


def _get_cache(args) -> SKCache:
    """Load --sk-cache (or $QKC_SK_CACHE); build and save it if missing."""
    basis = builtin_basis(args.basis)
    path = args.sk_cache or os.environ.get(CACHE_ENV)
    if path and Path(path).exists():
        cache = load_sk_cache(path)
        if cache.basis_id != basis.id:
            raise QKCError(f"cache {path} is for basis {cache.basis_id}, not {basis.id}")
        return cache
    cache = build_sk_cache(basis, args.l0)
    if path:
        save_sk_cache(cache, path)
    return cache


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _factor_blocks(target: QuantumState, spec: str) -> list[QuantumState]:
    sizes = list(_ints(spec))
    if sum(sizes) != target.num_qubits or min(sizes) < 1:
        raise QKCError(f"block sizes {sizes} do not cover {target.num_qubits} qubits")
    factors, rest = [], target.amplitudes
    for w in sizes[:-1]:
        u, s, vh = np.linalg.svd(rest.reshape(1 << w, -1), full_matrices=False)
        if len(s) > 1 and s[1] > 1e-9:
            raise QKCError(f"state is not a product across the declared blocks {sizes}")
        factors.append(QuantumState(w, u[:, 0]))
        rest = vh[0] * s[0]
    factors.append(QuantumState(sizes[-1], rest / np.linalg.norm(rest)))
    vec = factors[0].amplitudes
    for f in factors[1:]:
        vec = np.kron(vec, f.amplitudes)
    ov = np.vdot(vec, target.amplitudes)
    factors[0] = QuantumState(factors[0].num_qubits, factors[0].amplitudes * ov / abs(ov))
    return factors


# -- subcommands ------------------------------------------------------------------

def cmd_compile(args) -> int:
    target = read_state(args.state)
    circ, rep = compile_state(target, args.eps, builtin_basis(args.basis), _get_cache(args))
    write_circuit(circ, args.out)
    print(f"gates={rep.finite_count} segments={rep.continuous_count} eps_gate={rep.eps_gate:.3g} "
          f"fidelity={float(rep.fidelity)!r}")
    return 0


def cmd_encode(args) -> int:
    circ = read_circuit(args.circuit)
    es = encode(circ, CodeSpec(args.code, circ.basis))
    write_encoded(es, args.out)
    print(f"bits={len(es)}")
    return 0


def cmd_decode(args) -> int:
    es = read_encoded(args.input)
    circ = decode(es, builtin_basis(es.basis_id))
    _emit(format_circuit(circ), args.out)
    return 0


def cmd_complexity(args) -> int:
    target = read_state(args.state)
    basis = builtin_basis(args.basis)
    factors = _factor_blocks(target, args.factors) if args.factors else None
    decomp = read_decomposition(args.schmidt_decomp, target.num_qubits) if args.schmidt_decomp else None
    graph = None
    if args.graph:
        graph = [tuple(int(v) for v in e.split("-")) for e in args.graph.split(",") if e]
    rep = complexity_estimate(
        target, args.eps, basis, _get_cache(args),
        factors=factors, decomposition=decomp, graph=graph,
        code_id=args.code, state_id=Path(args.state).name,
    )
    rep.seeds["seed"] = args.seed
    _emit(rep.to_json(), args.out)
    return 0


def cmd_schmidt(args) -> int:
    target = read_state(args.state)
    decomp = read_decomposition(args.decomp, target.num_qubits) if args.decomp else None
    rep = schmidt_measure_bounds(target, decomp, SearchBudget(seed=args.seed, r_max=args.r_max))
    doc = {"tool": "qkc", "version": __version__, "state": Path(args.state).name,
           "lower": rep.lower, "upper": rep.upper, "witness_terms": rep.witness.r, "seed": args.seed}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_ancilla_prep(args) -> int:
    decomp = read_decomposition(args.decomp)
    circ, post = ancilla_prepare_circuit(decomp, args.eps, builtin_basis(args.basis), _get_cache(args))
    write_circuit(circ, args.out)
    p, f = simulate_postselected(circ, post, decomp.state())
    print(f"qubits={circ.num_qubits} ancilla={post.num_ancilla} gates={len(circ)} "
          f"success_probability={float(p)!r} conditional_fidelity={float(f)!r}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = ExperimentConfig(ENSEMBLE, (args.n,), (args.eps,), args.samples, args.seed,
                           args.basis, args.l0, args.out)
    rep = run_ensemble(cfg, _get_cache(args), args.workers)
    if not args.out:
        sys.stdout.write(rep.to_csv())
    return 0


def cmd_scaling(args) -> int:
    kind = SCALING_KINDS[args.kind]
    cfg = ExperimentConfig(kind, args.n, args.eps, args.samples, args.seed, args.basis, args.l0, args.out)
    rep = run_scaling(cfg, _get_cache(args), args.workers)
    if not args.out:
        sys.stdout.write(rep.to_csv())
    return 0


def cmd_sk_cache_build(args) -> int:
    cache = build_sk_cache(builtin_basis(args.basis), args.l0)
    save_sk_cache(cache, args.out)
    print(f"entries={len(cache)} epsilon0={cache.epsilon0:.4f} c_approx={cache.c_approx:.3f}")
    return 0


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--basis", default="STD_FINITE")
    common.add_argument("--sk-cache", help=f"cache file; loaded if present, else built and saved (default ${CACHE_ENV})")
    common.add_argument("--l0", type=int, default=12, help="word length for a freshly built cache")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="qkc", description="Complexity upper bounds for quantum states.")
    p.add_argument("--version", action="version", version=f"qkc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", parents=[common], help="compile a state file to a finite-basis circuit")
    c.add_argument("--state", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("encode", parents=[common], help="encode a circuit file")
    c.add_argument("--circuit", required=True)
    c.add_argument("--code", choices=CODE_IDS, default="OMEGA_BIN")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_encode)

    c = sub.add_parser("decode", parents=[common], help="decode an encoded file back to circuit text")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_decode)

    c = sub.add_parser("complexity", parents=[common], help="JSON complexity report for a state")
    c.add_argument("--state", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--factors", help="contiguous block sizes, e.g. '1,1,2'")
    c.add_argument("--schmidt-decomp", help="decomposition file for the ancilla strategy")
    c.add_argument("--graph", help="edges as '0-1,1-2'")
    c.add_argument("--code", choices=CODE_IDS, default="OMEGA_BIN")
    c.add_argument("--out")
    c.set_defaults(func=cmd_complexity)

    c = sub.add_parser("schmidt", parents=[common], help="Schmidt-measure interval for a state")
    c.add_argument("--state", required=True)
    c.add_argument("--decomp")
    c.add_argument("--r-max", type=int, default=4)
    c.add_argument("--out")
    c.set_defaults(func=cmd_schmidt)

    c = sub.add_parser("ancilla-prep", parents=[common], help="ancilla-register circuit from a decomposition")
    c.add_argument("--decomp", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_ancilla_prep)

    c = sub.add_parser("ensemble", parents=[common], help="Haar ensemble at one (N, eps)")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_ensemble)

    c = sub.add_parser("scaling", parents=[common], help="eps, N or product-state scaling sweep")
    c.add_argument("--kind", choices=sorted(SCALING_KINDS), required=True)
    c.add_argument("--n", type=_ints, required=True, help="'3' or '2,3,4' or '2..8'")
    c.add_argument("--eps", type=_floats, required=True, help="'0.1' or '0.1,0.01,0.001'")
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_scaling)

    c = sub.add_parser("sk-cache", help="manage Solovay-Kitaev caches")
    cs = c.add_subparsers(dest="action", required=True)
    b = cs.add_parser("build", parents=[common], help="enumerate the net and save it")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_sk_cache_build)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "workers", 1) < 1:
        print("qkc: error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (QKCError, ValueError, OSError) as exc:
        print(f"qkc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
