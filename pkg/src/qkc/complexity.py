"""Complexity estimates and the analytic bounds they are compared against.

The estimate K_hat is the smallest compressed code length over a set of
synthesis strategies.  Every strategy yields an actual circuit that reaches
fidelity >= 1 - eps, so K_hat is an upper bound on the network complexity by
construction.  Bounds use constant 1 in front of the asymptotic expressions.
The empirically calibrated constants ship separately in calibration.json.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from math import log2, prod
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .circuit import Circuit, GateBasis, run
from .compress import compress
from .encoding import OMEGA_BIN, CodeSpec, encode
from .entanglement import (
    SchmidtDecomposition,
    _ancilla_build,
    graph_circuit,
    schmidt_rank,
    simulate_postselected,
)
from .errors import QKCError
from .state import QuantumState, fidelity
from .synthesis.compile import compile_product, compile_state
from .synthesis.sk import MAX_DEPTH, SKCache

GENERIC = "GENERIC"
PRODUCT = "PRODUCT"
SCHMIDT_ANCILLA = "SCHMIDT_ANCILLA"
GRAPH = "GRAPH"
STRATEGIES = (GENERIC, GRAPH, PRODUCT, SCHMIDT_ANCILLA)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


# -- analytic bounds -------------------------------------------------------------

def bound_generic(n: int, eps: float) -> float:
    """2^N log2(1/eps)."""
    _check_eps(eps)
    return float((1 << n) * log2(1.0 / eps))


def bound_separable(block_sizes: Sequence[int], eps: float) -> float:
    """sum_j 2^{N_j} log2(J/eps) for J blocks prepared at eps/J each."""
    _check_eps(eps)
    sizes = list(block_sizes)
    if not sizes:
        raise ValueError("need at least one block")
    if min(sizes) < 1:
        raise ValueError("block sizes must be >= 1")
    J = len(sizes)
    return float(sum(1 << n for n in sizes) * log2(J / eps))


def bound_schmidt(n: int, es_upper: float, eps: float) -> float:
    """3 N 2^{E_S} log2(1/eps)."""
    _check_eps(eps)
    if es_upper < 0:
        raise ValueError("Schmidt measure bound must be >= 0")
    return float(3 * n * 2.0 ** es_upper * log2(1.0 / eps))


def compressible_fraction_bound(n: int, eps: float, k: float) -> float:
    """min(1, 2^{2^N log2(eps) + k}): share of eps-distinguishable states with K <= k."""
    _check_eps(eps)
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(2.0 ** min(0.0, (1 << n) * log2(eps) + k))


def classical_compressible_fraction(n: int, k: int) -> float:
    """(2^k - 1) 2^{-n}: share of n-bit strings with a description shorter than k bits."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be >= 0")
    if k > n:
        return 1.0
    return float((2.0 ** k - 1.0) * 2.0 ** (-n))


# -- calibration -------------------------------------------------------------------

def load_calibration() -> dict:
    text = resources.files("qkc").joinpath("calibration.json").read_text()
    return json.loads(text)


# -- factorization helper --------------------------------------------------------------

def contiguous_factors(target: QuantumState) -> Optional[list[QuantumState]]:
    """Split ``target`` at every cut k|k+1 with Schmidt rank 1; None if nowhere."""
    n = target.num_qubits
    cuts = [k for k in range(1, n) if schmidt_rank(target, range(k)) == 1]
    if not cuts:
        return None
    bounds = [0] + cuts + [n]
    factors = []
    rest = target.amplitudes
    for a, b in zip(bounds[:-2], bounds[1:-1]):
        u, _, vh = np.linalg.svd(rest.reshape(1 << (b - a), -1), full_matrices=False)
        factors.append(u[:, 0])
        rest = vh[0]
    factors.append(rest)
    out = [QuantumState(b - a, f / np.linalg.norm(f)) for f, a, b in zip(factors, bounds[:-1], bounds[1:])]
    # carry the residual global phase into the first factor
    vec = out[0].amplitudes
    for f in out[1:]:
        vec = np.kron(vec, f.amplitudes)
    ov = np.vdot(vec, target.amplitudes)
    out[0] = QuantumState(out[0].num_qubits, out[0].amplitudes * ov / abs(ov))
    return out


# -- reports ------------------------------------------------------------------------------

@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    raw_bits: int
    compressed_bits: int
    gate_count: int
    fidelity: float
    success_probability: float = 1.0


@dataclass
class ComplexityReport:
    state_id: str
    eps: float
    basis_id: str
    code_id: str
    results: list[StrategyResult]
    failures: dict[str, str] = field(default_factory=dict)
    bounds: dict[str, float] = field(default_factory=dict)
    calibrated: dict[str, float] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)

    @property
    def k_hat(self) -> int:
        return min(r.compressed_bits for r in self.results)

    @property
    def best(self) -> StrategyResult:
        return min(self.results, key=lambda r: (r.compressed_bits, r.strategy))

    def result(self, strategy: str) -> StrategyResult:
        for r in self.results:
            if r.strategy == strategy:
                return r
        raise KeyError(strategy)

    def to_dict(self) -> dict:
        return {
            "tool": "qkc",
            "version": __version__,
            "state_id": self.state_id,
            "eps": self.eps,
            "basis_id": self.basis_id,
            "code_id": self.code_id,
            "k_hat_bits": self.k_hat,
            "k_hat_is_upper_bound": True,
            "best_strategy": self.best.strategy,
            "strategies": [asdict(r) for r in self.results],
            "failures": dict(sorted(self.failures.items())),
            "bounds_bits": dict(sorted(self.bounds.items())),
            "calibrated_bounds_bits": dict(sorted(self.calibrated.items())),
            "seeds": dict(sorted(self.seeds.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _measure(circ: Circuit, code: CodeSpec, strategy: str, fid: float, p: float = 1.0) -> StrategyResult:
    es = encode(circ, code)
    return StrategyResult(strategy, len(es), len(compress(es)), len(circ), float(fid), float(p))


def complexity_estimate(
    target: QuantumState,
    eps: float,
    basis: GateBasis,
    cache: SKCache,
    strategies: Optional[Sequence[str]] = None,
    *,
    factors: Optional[Sequence[QuantumState]] = None,
    decomposition: Optional[SchmidtDecomposition] = None,
    graph: Optional[Sequence[tuple[int, int]]] = None,
    code_id: str = OMEGA_BIN,
    state_id: str = "",
    max_depth: int = MAX_DEPTH,
) -> ComplexityReport:
    """K_hat = min over strategies of compressed code length, plus the bounds.

    Default strategies: GENERIC always; PRODUCT when ``factors`` are given or
    the state splits at some cut; SCHMIDT_ANCILLA when a decomposition is
    given; GRAPH when a graph is given.  Strategies run in a fixed order.
    """
    _check_eps(eps)
    n = target.num_qubits
    code = CodeSpec(code_id, basis)
    if factors is None and (strategies is None or PRODUCT in strategies) and n > 1:
        factors = contiguous_factors(target)
    if strategies is None:
        strategies = [GENERIC]
        if factors is not None:
            strategies.append(PRODUCT)
        if decomposition is not None:
            strategies.append(SCHMIDT_ANCILLA)
        if graph is not None:
            strategies.append(GRAPH)
    strategies = sorted(set(strategies), key=STRATEGIES.index)
    if not strategies:
        raise ValueError("strategy set is empty")

    results, failures = [], {}
    last_error: Optional[Exception] = None
    for tag in strategies:
        try:
            if tag == GENERIC:
                circ, rep = compile_state(target, eps, basis, cache, max_depth)
                results.append(_measure(circ, code, tag, rep.fidelity))
            elif tag == PRODUCT:
                if factors is None:
                    raise QKCError("no factorization available")
                circ, rep = compile_product(factors, eps, basis, cache, max_depth)
                fid = fidelity(run(circ), target)
                if fid < 1 - eps:
                    raise QKCError(f"factors reproduce the target only to fidelity {fid:.6f}")
                results.append(_measure(circ, code, tag, fid))
            elif tag == SCHMIDT_ANCILLA:
                if decomposition is None:
                    raise QKCError("no decomposition supplied")
                circ, post, _ = _ancilla_build(decomposition, eps, basis, cache, max_depth)
                p, fid = simulate_postselected(circ, post, target)
                if fid < 1 - eps:
                    raise QKCError(f"post-selected fidelity {fid:.6f} below target")
                results.append(_measure(circ, code, tag, fid, p))
            elif tag == GRAPH:
                if graph is None:
                    raise QKCError("no graph supplied")
                circ = graph_circuit(n, graph, basis)
                fid = fidelity(run(circ), target)
                if fid < 1 - eps:
                    raise QKCError(f"graph state has fidelity {fid:.6f} with the target")
                results.append(_measure(circ, code, tag, fid))
            else:
                raise ValueError(f"unknown strategy {tag!r}")
        except (QKCError, ValueError) as exc:
            if isinstance(exc, ValueError) and str(exc).startswith("unknown strategy"):
                raise
            failures[tag] = str(exc)
            last_error = exc
    if not results:
        raise last_error

    cal = load_calibration()
    bounds = {"generic": bound_generic(n, eps)}
    calibrated = {"generic": cal["c_generic"] * bounds["generic"]}
    if factors is not None:
        bounds["separable"] = bound_separable([f.num_qubits for f in factors], eps)
    if decomposition is not None:
        es = log2(decomposition.r)
        bounds["schmidt"] = bound_schmidt(n, es, eps)
        calibrated["schmidt"] = cal["c_s"] * bounds["schmidt"]
    if graph is not None:
        bounds["graph"] = float(n * n * log2(1.0 / eps))
        calibrated["graph_raw"] = cal["c_g"] * n * n
    return ComplexityReport(
        state_id, eps, basis.id, code_id, results, failures, bounds, calibrated,
        {"sk_probe_seed": 0},
    )


def mixed_complexity(
    decomposition: Sequence[tuple[float, QuantumState]],
    eps: float,
    basis: GateBasis,
    cache: SKCache,
    **kwargs,
) -> float:
    """Geometric mean prod_i K_hat(phi_i)^{lambda_i} over the supplied ensemble."""
    terms = list(decomposition)
    if not terms:
        raise ValueError("empty decomposition")
    weights = np.array([w for w, _ in terms], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
    seen: dict[bytes, int] = {}
    ks = []
    for _, s in terms:
        key = s.amplitudes.tobytes()
        if key not in seen:
            seen[key] = complexity_estimate(s, eps, basis, cache, **kwargs).k_hat
        ks.append(seen[key])
    return float(prod(k ** w for k, w in zip(ks, weights)))
