"""Schmidt-measure bounds, product decompositions and the ancilla-register construction.

A decomposition writes a state as sum_i alpha_i |phi_i> with every |phi_i> a
tensor product over fixed blocks (single qubits by default).  Its term count
r gives log2(r) as an upper bound on the Schmidt measure; bipartite Schmidt
ranks give the lower bound.

The ancilla construction prepares sum_i alpha_i |phi_i> on N system qubits
plus m = ceil(log2 r) ancillas (placed after the system qubits):

    |0>|0>  ->  sum_i c_i |0>|i>                      ancilla preparation
            ->  sum_i c_i |phi_i>|i>                  controlled subcircuits
            ->  H^m on the ancillas, keep outcome 0   post-selection
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import ceil, log2
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .circuit import (
    Circuit,
    Gate,
    GateBasis,
    STD_FINITE,
    cancel_inverse_pairs,
    concat,
    controlled_lift,
    remap,
    run,
)
from .errors import DecompositionError, ZeroProbabilityError
from .state import QuantumState, basis_state, fidelity, make_state, random_product_state
from .synthesis.compile import compile_product, lower_circuit
from .synthesis.prepare import prepare_exact
from .synthesis.sk import MAX_DEPTH, SKCache

RANK_TOL = 1e-10
RECON_TOL = 1e-9
EXHAUSTIVE_LIMIT = 10


# -- decompositions ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Terms (alpha_i, [factor states]); every term uses the same block sizes."""

    terms: tuple[tuple[complex, tuple[QuantumState, ...]], ...]

    def __post_init__(self):
        if not self.terms:
            raise DecompositionError("a decomposition needs at least one term")
        blocks = self.blocks
        for _, factors in self.terms:
            if tuple(f.num_qubits for f in factors) != blocks:
                raise DecompositionError("all terms must share the same block sizes")

    @property
    def r(self) -> int:
        return len(self.terms)

    @property
    def blocks(self) -> tuple[int, ...]:
        return tuple(f.num_qubits for f in self.terms[0][1])

    @property
    def num_qubits(self) -> int:
        return sum(self.blocks)

    def term_vector(self, i: int) -> np.ndarray:
        vec = np.ones(1, dtype=complex)
        for f in self.terms[i][1]:
            vec = np.kron(vec, f.amplitudes)
        return vec

    def reconstruct(self) -> np.ndarray:
        """sum_i alpha_i |phi_i>, not normalized."""
        return sum(a * self.term_vector(i) for i, (a, _) in enumerate(self.terms))

    def state(self) -> QuantumState:
        vec = self.reconstruct()
        norm = np.linalg.norm(vec)
        if norm < 1e-15:
            raise DecompositionError("terms cancel to the zero vector")
        return QuantumState(self.num_qubits, vec / norm)

    def error(self, target: QuantumState) -> float:
        """Largest amplitude deviation of the normalized reconstruction."""
        if target.num_qubits != self.num_qubits:
            raise DecompositionError("qubit-count mismatch")
        return float(np.abs(self.state().amplitudes - target.amplitudes).max())

    def check(self, target: QuantumState, tol: float = RECON_TOL) -> None:
        err = self.error(target)
        if err > tol:
            raise DecompositionError(f"reconstruction misses the target by {err:.3g}")


def basis_expansion(target: QuantumState) -> SchmidtDecomposition:
    """One term per nonzero amplitude (computational-basis witness)."""
    n = target.num_qubits
    terms = []
    for idx in np.flatnonzero(target.amplitudes):
        bits = [(int(idx) >> (n - 1 - q)) & 1 for q in range(n)]
        terms.append((complex(target.amplitudes[idx]), tuple(basis_state(1, b) for b in bits)))
    return SchmidtDecomposition(tuple(terms))


@dataclass(frozen=True)
class SchmidtReport:
    lower: float
    upper: float
    witness: SchmidtDecomposition = field(repr=False)


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 20
    sweeps: int = 500
    tol: float = RECON_TOL
    r_max: int = 4
    seed: int = 0


# -- ranks ---------------------------------------------------------------------

def schmidt_rank(target: QuantumState, part: Sequence[int]) -> int:
    n = target.num_qubits
    part = sorted(set(int(q) for q in part))
    if not part or len(part) >= n:
        raise DecompositionError("bipartition must be proper and nonempty")
    if part[0] < 0 or part[-1] >= n:
        raise DecompositionError(f"qubit index out of range for {n} qubits")
    rest = [q for q in range(n) if q not in part]
    mat = np.transpose(target.amplitudes.reshape([2] * n), part + rest).reshape(1 << len(part), -1)
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > RANK_TOL))


def _bipartitions(n: int):
    if n <= EXHAUSTIVE_LIMIT:
        others = list(range(1, n))
        for k in range(0, n - 1):
            for extra in combinations(others, k):
                yield (0,) + extra
    else:
        for q in range(n):
            yield (q,)
        for k in range(2, n - 1):
            yield tuple(range(k))


def max_schmidt_rank(target: QuantumState) -> int:
    if target.num_qubits == 1:
        return 1
    return max(schmidt_rank(target, p) for p in _bipartitions(target.num_qubits))


# -- alternating least squares --------------------------------------------------

def _khatri_rao(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


def _als(tensor: np.ndarray, r: int, rng: np.random.Generator, sweeps: int, tol: float):
    n = tensor.ndim
    unfold = [np.moveaxis(tensor, k, 0).reshape(2, -1) for k in range(n)]
    fac = [rng.standard_normal((2, r)) + 1j * rng.standard_normal((2, r)) for _ in range(n)]
    flat = tensor.reshape(-1)
    prev = np.inf
    stall = 0
    for _ in range(sweeps):
        for k in range(n):
            kr = _khatri_rao([fac[m] for m in range(n) if m != k])
            sol, *_ = np.linalg.lstsq(kr, unfold[k].T, rcond=None)
            fac[k] = sol.T
        res = np.abs(_khatri_rao(fac).sum(axis=1) - flat).max()
        if res < tol * 1e-3:
            break
        stall = stall + 1 if res > prev * (1 - 1e-6) else 0
        if stall >= 25:
            break
        prev = res
    return fac, res


def _from_factors(fac: list[np.ndarray]) -> SchmidtDecomposition:
    terms = []
    for i in range(fac[0].shape[1]):
        cols = [f[:, i] for f in fac]
        norms = [np.linalg.norm(c) for c in cols]
        if min(norms) < 1e-300:
            continue
        alpha = complex(np.prod(norms))
        terms.append((alpha, tuple(QuantumState(1, c / nm) for c, nm in zip(cols, norms))))
    return SchmidtDecomposition(tuple(terms))


def find_product_decomposition(
    target: QuantumState,
    r_max: int,
    budget: Optional[SearchBudget] = None,
) -> Optional[SchmidtDecomposition]:
    """Fully product decomposition with at most ``r_max`` terms, or None.

    Tries r = 1, 2, ... with random-restart ALS.  A result is accepted only
    when it reconstructs ``target`` within ``budget.tol``.  None is not a
    proof that no such decomposition exists.
    """
    if r_max < 1:
        raise DecompositionError("r_max must be >= 1")
    budget = budget or SearchBudget()
    n = target.num_qubits
    if n == 1:
        return SchmidtDecomposition(((1.0 + 0j, (target,)),))
    tensor = target.amplitudes.reshape([2] * n)
    floor = max_schmidt_rank(target)
    seeds = np.random.SeedSequence([budget.seed, n, r_max])
    for r in range(max(1, floor), r_max + 1):
        for child in seeds.spawn(budget.restarts):
            rng = np.random.default_rng(child)
            fac, res = _als(tensor, r, rng, budget.sweeps, budget.tol)
            if res >= budget.tol:
                continue
            dec = _from_factors(fac)
            if dec.error(target) <= budget.tol:
                return dec
    return None


def schmidt_measure_bounds(
    target: QuantumState,
    supplied: Optional[SchmidtDecomposition] = None,
    budget: Optional[SearchBudget] = None,
) -> SchmidtReport:
    """Interval (lower, upper) on the Schmidt measure, with a witness for ``upper``."""
    budget = budget or SearchBudget()
    n = target.num_qubits
    lower = log2(max_schmidt_rank(target)) if n > 1 else 0.0
    best = basis_expansion(target)
    if supplied is not None:
        supplied.check(target)
        if supplied.r < best.r:
            best = supplied
    floor = 1 << int(round(lower))
    r_cap = min(budget.r_max, best.r - 1)
    if r_cap >= floor:
        found = find_product_decomposition(target, r_cap, budget)
        if found is not None and found.r < best.r:
            best = found
    upper = log2(best.r)
    return SchmidtReport(lower, upper, best)


# -- ancilla construction --------------------------------------------------------

@dataclass(frozen=True)
class PostSelection:
    """Keep runs whose ancilla qubits all read 0 (Hadamards already applied)."""

    num_system: int
    ancilla: tuple[int, ...] = ()

    @property
    def num_ancilla(self) -> int:
        return len(self.ancilla)


def _product_prep(factors: Sequence[QuantumState]) -> Circuit:
    """Exact CONTINUOUS circuit preparing the tensor product of ``factors``."""
    n = sum(f.num_qubits for f in factors)
    parts, offset = [], 0
    for f in factors:
        parts.append(remap(prepare_exact(f), n, range(offset, offset + f.num_qubits)))
        offset += f.num_qubits
    return concat(parts)


@dataclass(frozen=True)
class AncillaReport:
    r: int
    num_ancilla: int
    eps: float
    distance_budget: float
    distance_bound: float
    finite_count: int


def ancilla_prepare_circuit(
    decomp: SchmidtDecomposition,
    eps: float,
    basis: GateBasis,
    cache: SKCache,
    max_depth: int = MAX_DEPTH,
) -> tuple[Circuit, PostSelection]:
    """Finite-basis circuit plus post-selection preparing the decomposed state.

    The distance budget is delta = sqrt(p) * sqrt(eps), with p the ideal
    success probability: a branch of norm sqrt(p) perturbed by at most delta
    keeps fidelity >= 1 - eps after renormalization.  Half of delta goes to
    the ancilla preparation and the other half is split evenly over the r
    controlled subcircuits.
    """
    circ, post, _ = _ancilla_build(decomp, eps, basis, cache, max_depth)
    return circ, post


def _ancilla_build(decomp, eps, basis, cache, max_depth):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    r = decomp.r
    n = decomp.num_qubits
    if r == 1:
        alpha, factors = decomp.terms[0]
        circ, rep = compile_product(list(factors), eps, basis, cache, max_depth)
        return circ, PostSelection(n), AncillaReport(1, 0, eps, rep.distance_budget, rep.distance_bound, len(circ))

    m = ceil(log2(r))
    total = n + m
    anc = tuple(range(n, total))
    alphas = np.zeros(1 << m, dtype=complex)
    alphas[:r] = [a for a, _ in decomp.terms]
    a_norm = np.linalg.norm(alphas)
    p_ideal = ideal_success_probability(decomp)
    if p_ideal < 1e-14:
        raise DecompositionError("terms cancel; the post-selected branch is empty")
    delta = float(np.sqrt(p_ideal * eps))

    fresh = set(range(total))
    pieces = []
    spent = 0.0
    anc_prep = remap(prepare_exact(make_state(m, alphas / a_norm)), total, anc)
    low, st = lower_circuit(anc_prep, basis, cache, delta / 2, fresh, max_depth)
    pieces.append(low)
    spent += st.distance_bound
    fresh = st.fresh
    share = delta / 2 / r
    for i, (_, factors) in enumerate(decomp.terms):
        lifted = controlled_lift(_product_prep(factors), anc, i)
        low, st = lower_circuit(lifted, basis, cache, share, fresh, max_depth)
        pieces.append(low)
        spent += st.distance_bound
        fresh = st.fresh
    pieces.append(Circuit(total, basis.id, tuple(Gate("H", (a,)) for a in anc)))
    circ = cancel_inverse_pairs(concat(pieces, basis.id))
    report = AncillaReport(r, m, eps, delta, spent, len(circ))
    return circ, PostSelection(n, anc), report


def simulate_postselected(
    circuit: Circuit,
    post: PostSelection,
    target: Optional[QuantumState] = None,
) -> tuple[float, float]:
    """(success probability, fidelity of the renormalized kept branch with target).

    A zero-probability branch returns (0, nan) when no target is given and
    raises ZeroProbabilityError otherwise.
    """
    n, m = post.num_system, post.num_ancilla
    if circuit.num_qubits != n + m or tuple(post.ancilla) != tuple(range(n, n + m)):
        raise DecompositionError("post-selection spec does not match the circuit")
    psi = run(circuit).amplitudes
    branch = psi.reshape(1 << n, 1 << m)[:, 0]
    p = float(np.vdot(branch, branch).real)
    if p < 1e-15:
        if target is None:
            return 0.0, float("nan")
        raise ZeroProbabilityError("post-selected branch has zero probability")
    if target is None:
        return p, float("nan")
    return p, fidelity(QuantumState(n, branch / np.sqrt(p)), target)


# -- graph states -----------------------------------------------------------------

def _check_edges(n: int, edges) -> list[tuple[int, int]]:
    out = []
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise DecompositionError(f"bad edge ({a}, {b}) for {n} vertices")
        out.append((min(a, b), max(a, b)))
    if len(set(out)) != len(out):
        raise DecompositionError("repeated edge")
    return out


def graph_state(n: int, edges) -> QuantumState:
    """|+>^n followed by CZ on every edge."""
    edges = _check_edges(n, edges)
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    parity = np.zeros(1 << n, dtype=int)
    for a, b in edges:
        parity ^= bits[:, a] & bits[:, b]
    vec = (1 - 2 * parity) / np.sqrt(1 << n)
    return QuantumState(n, vec.astype(complex))


def graph_circuit(n: int, edges, basis: GateBasis = STD_FINITE) -> Circuit:
    """H on every qubit then CZ = H_t CNOT H_t per edge; exact in STD_FINITE."""
    gates = [Gate("H", (q,)) for q in range(n)]
    for a, b in _check_edges(n, edges):
        gates += [Gate("H", (b,)), Gate("CNOT", (a, b)), Gate("H", (b,))]
    return cancel_inverse_pairs(Circuit(n, basis.id, tuple(gates)))


def random_graph(n: int, seed: int, p: float = 0.5) -> list[tuple[int, int]]:
    rng = np.random.default_rng(seed)
    return [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]


# -- file format --------------------------------------------------------------------

def format_decomposition(decomp: SchmidtDecomposition) -> str:
    if any(b != 1 for b in decomp.blocks):
        raise DecompositionError("the text format stores single-qubit factors only")
    lines = [f"terms: {decomp.r}"]
    for alpha, factors in decomp.terms:
        lines.append(f"{float(alpha.real)!r} {float(alpha.imag)!r}")
        for f in factors:
            a, b = f.amplitudes
            lines.append(f"{float(a.real)!r} {float(a.imag)!r} {float(b.real)!r} {float(b.imag)!r}")
    return "\n".join(lines) + "\n"


def parse_decomposition(text: str, num_qubits: Optional[int] = None) -> SchmidtDecomposition:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("terms:"):
        raise DecompositionError("decomposition file must start with 'terms: r'")
    try:
        r = int(lines[0].split(":", 1)[1])
    except ValueError:
        raise DecompositionError(f"bad term count line {lines[0]!r}") from None
    if r < 1:
        raise DecompositionError("need at least one term")
    body = lines[1:]
    if len(body) % r:
        raise DecompositionError(f"{len(body)} lines do not split into {r} equal terms")
    per = len(body) // r
    n = per - 1
    if n < 1 or (num_qubits is not None and n != num_qubits):
        raise DecompositionError(f"terms describe {n} qubits")
    terms = []
    try:
        for t in range(r):
            chunk = body[t * per:(t + 1) * per]
            are, aim = (float(x) for x in chunk[0].split())
            factors = []
            for ln in chunk[1:]:
                v = [float(x) for x in ln.split()]
                if len(v) != 4:
                    raise DecompositionError(f"factor line needs 4 numbers: {ln!r}")
                factors.append(make_state(1, [complex(v[0], v[1]), complex(v[2], v[3])]))
            terms.append((complex(are, aim), tuple(factors)))
    except ValueError as exc:
        if isinstance(exc, DecompositionError):
            raise
        raise DecompositionError(str(exc)) from None
    return SchmidtDecomposition(tuple(terms))


def read_decomposition(path, num_qubits: Optional[int] = None) -> SchmidtDecomposition:
    return parse_decomposition(Path(path).read_text(), num_qubits)


def write_decomposition(decomp: SchmidtDecomposition, path) -> None:
    Path(path).write_text(format_decomposition(decomp))


def product_decomposition(factors: Sequence[QuantumState]) -> SchmidtDecomposition:
    return SchmidtDecomposition(((1.0 + 0j, tuple(factors)),))


def superposition(pairs) -> tuple[QuantumState, SchmidtDecomposition]:
    """State and decomposition for sum alpha_i (x factors_i), normalized overall."""
    dec = SchmidtDecomposition(tuple((complex(a), tuple(f)) for a, f in pairs))
    vec = dec.reconstruct()
    norm = np.linalg.norm(vec)
    dec = SchmidtDecomposition(tuple((a / norm, f) for a, f in dec.terms))
    return dec.state(), dec


def random_superposition(n: int, seed: int, terms: int = 2) -> tuple[QuantumState, SchmidtDecomposition]:
    """Random complex-normal weights on ``terms`` independent random product states."""
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss.spawn(1)[0])
    seeds = ss.generate_state(terms, np.uint32)
    alphas = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
    pairs = [(a, random_product_state(n, int(s))[1]) for a, s in zip(alphas, seeds)]
    return superposition(pairs)


def ideal_success_probability(decomp: SchmidtDecomposition) -> float:
    """||sum_i alpha_i phi_i||^2 / (2^m sum_i |alpha_i|^2); equals 1/r only for orthogonal terms."""
    m = ceil(log2(decomp.r)) if decomp.r > 1 else 0
    a2 = sum(abs(a) ** 2 for a, _ in decomp.terms)
    return float(np.linalg.norm(decomp.reconstruct()) ** 2 / (a2 * (1 << m)))
