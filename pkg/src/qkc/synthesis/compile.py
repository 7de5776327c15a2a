"""Lowering continuous circuits to a finite basis under a precision budget.

Budget.  If the prepared vector is within distance delta of the target (up
to phase) then the fidelity is at least 1 - delta^2.  ``compile_state``
therefore spends a total operator-distance budget delta = sqrt(eps).  The
budget is split evenly over the fused single-qubit segments that are not
already words of the net.  Replacing each segment within eps_g keeps the
whole state within the sum of the per-segment errors.

A segment that is the first operation on an untouched qubit only has to get
its first column right, since it acts on |0>.  Such segments are matched
against the net by first column, which turns e.g. Ry(pi/2) into a single H.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..circuit import (
    Circuit,
    Gate,
    GateBasis,
    cancel_inverse_pairs,
    concat,
    gate_matrix,
    remap,
    run,
)
from ..errors import BudgetError, CircuitError
from ..state import QuantumState, fidelity
from .prepare import prepare_exact
from .sk import EXACT_TOL, MAX_DEPTH, SKCache, approximate

IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class CompileReport:
    eps: float
    fidelity: float
    continuous_count: int        # m_c: segments that needed approximation
    rotation_count: int          # parameterized gates in the exact circuit
    finite_count: int            # M
    eps_gate: float
    distance_budget: float
    distance_bound: float        # sum of verified per-segment distances
    strategy: str
    max_level: int = -1
    predicted_level: int = 0

    @property
    def success(self) -> bool:
        return self.fidelity >= 1.0 - self.eps


@dataclass
class LoweringStats:
    segments: int = 0
    exact: int = 0
    approximated: int = 0
    eps_gate: float = 0.0
    distance_bound: float = 0.0
    max_level: int = -1
    fresh: set = field(default_factory=set)


def _segments(circuit: Circuit, fresh: set):
    """Yield ('seg', q, matrix, first) and ('gate', Gate) in circuit order."""
    basis = circuit.basis
    pending: dict[int, np.ndarray] = {}
    first: dict[int, bool] = {}
    fresh = set(fresh)
    for g in circuit.gates:
        if len(g.qubits) == 1:
            q = g.qubits[0]
            m = gate_matrix(g, basis)
            if q not in pending:
                first[q] = q in fresh
                fresh.discard(q)
                pending[q] = m
            else:
                pending[q] = m @ pending[q]
            continue
        for q in g.qubits:
            if q in pending:
                yield "seg", q, pending.pop(q), first.pop(q)
            fresh.discard(q)
        yield "gate", g
    for q in sorted(pending):
        yield "seg", q, pending[q], first[q]


def _phase(w: np.ndarray, u: np.ndarray, column_only: bool) -> float:
    """phi with u ~ e^{i phi} w (on |0> only when ``column_only``)."""
    ov = (w.conj().T @ u)[0, 0] if column_only else np.trace(w.conj().T @ u)
    return float(np.angle(ov)) if abs(ov) > 1e-12 else 0.0


def _column_distance(w: np.ndarray, u: np.ndarray) -> float:
    ov = abs(np.vdot(w[:, 0], u[:, 0]))
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * min(1.0, ov))))


def lower_circuit(
    circuit: Circuit,
    basis: GateBasis,
    cache: SKCache,
    distance_budget: float,
    fresh: Optional[Iterable[int]] = None,
    max_depth: int = MAX_DEPTH,
) -> tuple[Circuit, LoweringStats]:
    """Replace each fused single-qubit segment by a word over ``basis``.

    ``fresh`` lists qubits known to be |0> before the circuit runs.  The sum
    of verified segment distances never exceeds ``distance_budget``.
    """
    if not basis.finite:
        raise CircuitError(f"target basis {basis.id} is not finite")
    if cache.basis_id != basis.id:
        raise CircuitError(f"cache is for {cache.basis_id}, not {basis.id}")
    fresh = set(range(circuit.num_qubits)) if fresh is None else set(fresh)
    stats = LoweringStats()
    if circuit.basis_id == basis.id:
        stats.fresh = fresh - {q for g in circuit.gates for q in g.qubits}
        return circuit, stats
    two_q = {g.mnemonic for g in basis.gate_defs if g.arity == 2}

    items = list(_segments(circuit, fresh))
    plan: list = []
    hard: list[int] = []
    spent = 0.0
    for item in items:
        if item[0] == "gate":
            g = item[1]
            if g.name not in two_q or g.param is not None:
                raise CircuitError(f"{g.name} has no counterpart in {basis.id}")
            plan.append(item)
            continue
        _, q, u, first = item
        stats.segments += 1
        j = cache.lookup_column(u) if first else cache.lookup(u)
        if j is not None:
            w = cache.matrices[j]
            d = _column_distance(w, u) if first else cache.word_distance(cache.words[j], u)
            spent += d
            stats.exact += 1
            plan.append(("word", q, cache.words[j], _phase(w, u, first)))
        else:
            hard.append(len(plan))
            plan.append(("todo", q, u))

    eps_g = (distance_budget - spent) / len(hard) if hard else 0.0
    if hard and eps_g <= 0:
        raise BudgetError(f"no budget left for {len(hard)} segments")
    total = spent
    for i in hard:
        _, q, u = plan[i]
        a = approximate(u, eps_g, cache, max_depth)
        total += a.distance
        stats.max_level = max(stats.max_level, a.depth)
        w = np.eye(2, dtype=complex)
        for g in a.word:
            w = basis.gate(g).matrix @ w
        plan[i] = ("word", q, a.word, _phase(w, u, False))

    gates: list[Gate] = []
    phase = circuit.global_phase
    for item in plan:
        if item[0] == "gate":
            gates.append(item[1])
        else:
            _, q, word, ph = item
            gates.extend(Gate(g, (q,)) for g in word)
            phase += ph
    stats.approximated = len(hard)
    stats.eps_gate = eps_g
    stats.distance_bound = total
    stats.fresh = fresh - {q for g in circuit.gates for q in g.qubits}
    out = Circuit(circuit.num_qubits, basis.id, tuple(gates), float(np.angle(np.exp(1j * phase))))
    return cancel_inverse_pairs(out), stats


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def compile_state(
    target: QuantumState,
    eps: float,
    basis: GateBasis,
    cache: SKCache,
    max_depth: int = MAX_DEPTH,
) -> tuple[Circuit, CompileReport]:
    """Finite-basis circuit C with |<target|C|0>|^2 >= 1 - eps (checked by simulation)."""
    _check_eps(eps)
    exact = prepare_exact(target)
    delta = float(np.sqrt(eps))
    circ, st = lower_circuit(exact, basis, cache, delta, max_depth=max_depth)
    f = fidelity(run(circ), target)
    report = CompileReport(
        eps=eps,
        fidelity=f,
        continuous_count=st.approximated,
        rotation_count=sum(1 for g in exact.gates if g.param is not None),
        finite_count=len(circ),
        eps_gate=st.eps_gate,
        distance_budget=delta,
        distance_bound=st.distance_bound,
        strategy="GENERIC",
        max_level=st.max_level,
        predicted_level=cache.predicted_depth(st.eps_gate) if st.approximated else 0,
    )
    if not report.success:
        raise BudgetError(f"simulated fidelity {f!r} below {1 - eps!r}")
    return circ, report


def compile_product(
    factors: Sequence[QuantumState],
    eps: float,
    basis: GateBasis,
    cache: SKCache,
    max_depth: int = MAX_DEPTH,
) -> tuple[Circuit, CompileReport]:
    """Compile each factor at eps/J on its own block and concatenate.

    prod_j (1 - eps/J) >= 1 - eps, so the overall fidelity target holds.
    """
    _check_eps(eps)
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    J = len(factors)
    n = sum(f.num_qubits for f in factors)
    parts, offset = [], 0
    reports = []
    for f in factors:
        c, r = compile_state(f, eps / J, basis, cache, max_depth)
        parts.append(remap(c, n, range(offset, offset + f.num_qubits)))
        reports.append(r)
        offset += f.num_qubits
    circ = concat(parts)
    full = factors[0].amplitudes
    for f in factors[1:]:
        full = np.kron(full, f.amplitudes)
    fid = fidelity(run(circ), QuantumState(n, full))
    report = CompileReport(
        eps=eps,
        fidelity=fid,
        continuous_count=sum(r.continuous_count for r in reports),
        rotation_count=sum(r.rotation_count for r in reports),
        finite_count=len(circ),
        eps_gate=min((r.eps_gate for r in reports if r.continuous_count), default=0.0),
        distance_budget=sum(r.distance_budget for r in reports),
        distance_bound=sum(r.distance_bound for r in reports),
        strategy="PRODUCT",
        max_level=max(r.max_level for r in reports),
        predicted_level=max(r.predicted_level for r in reports),
    )
    if not report.success:
        raise BudgetError(f"simulated fidelity {fid!r} below {1 - eps!r}")
    return circ, report
