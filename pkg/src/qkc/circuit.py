"""Circuit IR over declared gate bases, dense simulation, controlled lifting.

Gates act left to right: ``gates[0]`` is applied to |0...0> first.  Two-qubit
gates list their operands as ``(control, target)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import schur

from .errors import CircuitError
from .state import QuantumState, basis_state

SQRT_HALF = 1.0 / np.sqrt(2.0)
I2 = np.eye(2, dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
T_MAT = np.diag([1.0, np.exp(1j * np.pi / 4)]).astype(complex)
TDG_MAT = T_MAT.conj()
CNOT_MAT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

UNITARY_TOL = 1e-12


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class GateDef:
    mnemonic: str
    arity: int
    parameterized: bool = False
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    matrix_fn: Optional[Callable[[float], np.ndarray]] = field(default=None, compare=False, repr=False)

    def unitary(self, param: Optional[float] = None) -> np.ndarray:
        if self.parameterized:
            if param is None:
                raise CircuitError(f"{self.mnemonic} needs an angle")
            return self.matrix_fn(param)
        return self.matrix


@dataclass(frozen=True)
class GateBasis:
    id: str
    gate_defs: tuple[GateDef, ...]
    finite: bool

    def __post_init__(self):
        names = [g.mnemonic for g in self.gate_defs]
        if len(set(names)) != len(names):
            raise CircuitError(f"duplicate mnemonics in basis {self.id}")
        for g in self.gate_defs:
            if g.arity not in (1, 2):
                raise CircuitError(f"{g.mnemonic}: arity must be 1 or 2")
            if g.parameterized:
                if self.finite:
                    raise CircuitError(f"finite basis {self.id} cannot hold parameterized {g.mnemonic}")
                continue
            m = g.matrix
            if m.shape != (2 ** g.arity,) * 2:
                raise CircuitError(f"{g.mnemonic}: matrix shape {m.shape}")
            if not np.allclose(m.conj().T @ m, np.eye(len(m)), atol=UNITARY_TOL, rtol=0):
                raise CircuitError(f"{g.mnemonic} is not unitary")

    @property
    def mnemonics(self) -> list[str]:
        return [g.mnemonic for g in self.gate_defs]

    def gate(self, mnemonic: str) -> GateDef:
        for g in self.gate_defs:
            if g.mnemonic == mnemonic:
                return g
        raise CircuitError(f"mnemonic {mnemonic!r} not in basis {self.id}")

    def opcode(self, mnemonic: str) -> int:
        return self.mnemonics.index(mnemonic)

    def single_qubit_defs(self) -> list[GateDef]:
        return [g for g in self.gate_defs if g.arity == 1]


CONTINUOUS = GateBasis(
    "CONTINUOUS",
    (
        GateDef("Rz", 1, True, matrix_fn=rz),
        GateDef("Ry", 1, True, matrix_fn=ry),
        GateDef("CNOT", 2, False, CNOT_MAT),
    ),
    finite=False,
)

STD_FINITE = GateBasis(
    "STD_FINITE",
    (
        GateDef("H", 1, False, H_MAT),
        GateDef("T", 1, False, T_MAT),
        GateDef("Tdg", 1, False, TDG_MAT),
        GateDef("CNOT", 2, False, CNOT_MAT),
    ),
    finite=True,
)

_REGISTRY = {b.id: b for b in (CONTINUOUS, STD_FINITE)}


def builtin_basis(name: str) -> GateBasis:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise CircuitError(f"unknown basis {name!r}; known: {sorted(_REGISTRY)}") from None


def register_basis(basis: GateBasis) -> None:
    _REGISTRY[basis.id] = basis


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    param: Optional[float] = None

    def __str__(self):
        parts = [self.name, *map(str, self.qubits)]
        if self.param is not None:
            parts.append(repr(float(self.param)))
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list acting on |0>_N.

    ``global_phase`` is bookkeeping for exact lifting; it carries no
    description length and is never encoded.
    """

    num_qubits: int
    basis_id: str
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __len__(self):
        return len(self.gates)

    @property
    def basis(self) -> GateBasis:
        return builtin_basis(self.basis_id)

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)

    def same_gates(self, other: "Circuit") -> bool:
        return (
            self.num_qubits == other.num_qubits
            and self.basis_id == other.basis_id
            and self.gates == other.gates
        )


def concat(circuits: Sequence[Circuit], basis_id: Optional[str] = None) -> Circuit:
    if not circuits:
        raise CircuitError("nothing to concatenate")
    n = circuits[0].num_qubits
    if any(c.num_qubits != n for c in circuits):
        raise CircuitError("qubit counts differ")
    bid = basis_id or circuits[0].basis_id
    gates = tuple(g for c in circuits for g in c.gates)
    return Circuit(n, bid, gates, sum(c.global_phase for c in circuits))


def remap(circuit: Circuit, num_qubits: int, mapping: Sequence[int]) -> Circuit:
    """Embed ``circuit`` into a wider register; qubit q goes to ``mapping[q]``."""
    gates = tuple(replace(g, qubits=tuple(mapping[q] for q in g.qubits)) for g in circuit.gates)
    return Circuit(num_qubits, circuit.basis_id, gates, circuit.global_phase)


# -- simulation ---------------------------------------------------------------

def gate_matrix(gate: Gate, basis: GateBasis) -> np.ndarray:
    return basis.gate(gate.name).unitary(gate.param)


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    view = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    return np.einsum("ab,ibj->iaj", u, view).reshape(-1)


def _apply_2q(psi: np.ndarray, u: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    view = psi.reshape([2] * n)
    view = np.moveaxis(view, (c, t), (0, 1))
    shape = view.shape
    out = (u @ view.reshape(4, -1)).reshape(shape)
    return np.moveaxis(out, (0, 1), (c, t)).reshape(-1)


def fused_ops(circuit: Circuit):
    """Yield ``(qubits, matrix)`` with runs of 1-qubit gates multiplied together.

    The product of the yielded operations equals the circuit unitary (up to
    ``global_phase``); long synthesized words collapse to a handful of 2x2s.
    """
    basis = circuit.basis
    pending: dict[int, np.ndarray] = {}
    cache: dict[tuple, np.ndarray] = {}
    for g in circuit.gates:
        key = (g.name, g.param)
        m = cache.get(key)
        if m is None:
            m = cache[key] = gate_matrix(g, basis)
        if len(g.qubits) == 1:
            q = g.qubits[0]
            pending[q] = m @ pending[q] if q in pending else m
            continue
        for q in g.qubits:
            if q in pending:
                yield (q,), pending.pop(q)
        yield g.qubits, m
    for q in sorted(pending):
        yield (q,), pending[q]


def apply_vector(circuit: Circuit, vec: np.ndarray) -> np.ndarray:
    n = circuit.num_qubits
    psi = np.asarray(vec, dtype=complex).copy()
    for qubits, m in fused_ops(circuit):
        if len(qubits) == 1:
            psi = _apply_1q(psi, m, qubits[0], n)
        else:
            psi = _apply_2q(psi, m, qubits[0], qubits[1], n)
    if circuit.global_phase:
        psi = psi * np.exp(1j * circuit.global_phase)
    return psi


def apply(circuit: Circuit, state: QuantumState) -> QuantumState:
    if circuit.num_qubits != state.num_qubits:
        raise CircuitError(f"circuit has {circuit.num_qubits} qubits, state has {state.num_qubits}")
    problems = validate(circuit, circuit.basis)
    if problems:
        raise CircuitError("; ".join(problems))
    psi = apply_vector(circuit, state.amplitudes)
    return QuantumState(state.num_qubits, psi / np.linalg.norm(psi))


def run(circuit: Circuit) -> QuantumState:
    """The prepared state C|0>_N."""
    return apply(circuit, basis_state(circuit.num_qubits, 0))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    dim = 1 << circuit.num_qubits
    cols = [apply_vector(circuit, np.eye(dim, dtype=complex)[:, k]) for k in range(dim)]
    return np.stack(cols, axis=1)


def validate(circuit: Circuit, basis: GateBasis) -> list[str]:
    out = []
    if circuit.basis_id != basis.id:
        out.append(f"circuit declares basis {circuit.basis_id!r} but was checked against {basis.id!r}")
    n = circuit.num_qubits
    if n < 1:
        out.append(f"num_qubits must be >= 1, got {n}")
    names = {g.mnemonic: g for g in basis.gate_defs}
    for k, g in enumerate(circuit.gates):
        gd = names.get(g.name)
        if gd is None:
            out.append(f"gate {k}: mnemonic {g.name!r} not in basis {basis.id}")
            continue
        if len(g.qubits) != gd.arity:
            out.append(f"gate {k}: {g.name} takes {gd.arity} operand(s), got {len(g.qubits)}")
        for q in g.qubits:
            if not 0 <= q < n:
                out.append(f"gate {k}: qubit index {q} out of range for {n} qubits")
        if len(set(g.qubits)) != len(g.qubits):
            out.append(f"gate {k}: repeated operand in {g.qubits}")
        if gd.parameterized and g.param is None:
            out.append(f"gate {k}: {g.name} requires an angle")
        if not gd.parameterized and g.param is not None:
            out.append(f"gate {k}: basis mismatch, {g.name} in {basis.id} takes no parameter")
    return out


# -- text format --------------------------------------------------------------

def format_circuit(circuit: Circuit, include_phase: bool = True) -> str:
    lines = [
        "circuit v1",
        f"qubits: {circuit.num_qubits}",
        f"basis: {circuit.basis_id}",
        f"gates: {len(circuit.gates)}",
    ]
    if include_phase and circuit.global_phase:
        lines.append(f"phase: {float(circuit.global_phase)!r}")
    lines.extend(str(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 4 or lines[0] != "circuit v1":
        raise CircuitError("missing 'circuit v1' header")

    def header(line, key):
        if not line.startswith(key + ": "):
            raise CircuitError(f"expected '{key}: ...', got {line!r}")
        return line[len(key) + 2:]

    try:
        n = int(header(lines[1], "qubits"))
        basis = builtin_basis(header(lines[2], "basis"))
        count = int(header(lines[3], "gates"))
    except ValueError as exc:
        raise CircuitError(str(exc)) from exc
    body = lines[4:]
    phase = 0.0
    if body and body[0].startswith("phase: "):
        phase = float(body[0][7:])
        body = body[1:]
    if len(body) != count:
        raise CircuitError(f"header announces {count} gates, found {len(body)}")
    gates = []
    for k, ln in enumerate(body):
        parts = ln.split(" ")
        try:
            gd = basis.gate(parts[0])
        except CircuitError as exc:
            raise CircuitError(f"gate line {k}: {exc}") from None
        want = 1 + gd.arity + (1 if gd.parameterized else 0)
        if len(parts) != want:
            raise CircuitError(f"gate line {k}: expected {want} fields, got {ln!r}")
        try:
            qubits = tuple(int(p) for p in parts[1:1 + gd.arity])
            param = float(parts[-1]) if gd.parameterized else None
        except ValueError as exc:
            raise CircuitError(f"gate line {k}: {exc}") from None
        gates.append(Gate(gd.mnemonic, qubits, param))
    circ = Circuit(n, basis.id, tuple(gates), phase)
    problems = validate(circ, basis)
    if problems:
        raise CircuitError("; ".join(problems))
    return circ


def read_circuit(path) -> Circuit:
    return parse_circuit(Path(path).read_text())


def write_circuit(circuit: Circuit, path) -> None:
    Path(path).write_text(format_circuit(circuit))


# -- single-qubit decomposition and controlled lifting --------------------------

def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Return (alpha, beta, gamma, delta) with u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)."""
    det = np.linalg.det(u)
    alpha = 0.5 * np.angle(det)
    v = u * np.exp(-1j * alpha)
    gamma = 2.0 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        s = 2.0 * np.angle(v[1, 1])  # beta + delta
        d = 2.0 * np.angle(v[1, 0])  # beta - delta
    elif abs(v[1, 0]) <= 1e-12:
        s, d = 2.0 * np.angle(v[1, 1]), 0.0
    else:
        s, d = 0.0, 2.0 * np.angle(v[1, 0])
    beta, delta = (s + d) / 2.0, (s - d) / 2.0
    # -v is the same SU(2) element class; fix the sign if the reconstruction flipped
    rec = rz(beta) @ ry(gamma) @ rz(delta)
    if np.linalg.norm(rec + v) < np.linalg.norm(rec - v):
        alpha += np.pi
    return float(alpha), float(beta), float(gamma), float(delta)


def _clean(angle: float) -> float:
    # fold into (-2pi, 2pi]; Rz(4pi) = I so the range is enough, and keep exact zeros
    a = float(np.fmod(angle, 4 * np.pi))
    if a > 2 * np.pi:
        a -= 4 * np.pi
    elif a <= -2 * np.pi:
        a += 4 * np.pi
    return 0.0 if abs(a) < 1e-15 else a


class _Emitter:
    """Accumulates CONTINUOUS-basis gates plus the exact global phase."""

    def __init__(self):
        self.gates: list[Gate] = []
        self.phase = 0.0

    def rot(self, name, q, theta):
        theta = _clean(theta)
        if theta != 0.0:
            self.gates.append(Gate(name, (q,), theta))

    def cnot(self, c, t):
        self.gates.append(Gate("CNOT", (c, t)))

    def one_qubit(self, u, q):
        if np.allclose(u, I2, atol=1e-14, rtol=0):
            return
        alpha, beta, gamma, delta = zyz_angles(u)
        self.rot("Rz", q, delta)
        self.rot("Ry", q, gamma)
        self.rot("Rz", q, beta)
        self.phase += alpha

    def controlled(self, u, c, t):
        if np.allclose(u, I2, atol=1e-14, rtol=0):
            return
        if np.allclose(u, X_MAT, atol=1e-14, rtol=0):
            self.cnot(c, t)
            return
        alpha, beta, gamma, delta = zyz_angles(u)
        # u = e^{i alpha} A X B X C with ABC = I
        self.rot("Rz", t, (delta - beta) / 2)           # C
        self.cnot(c, t)
        self.rot("Rz", t, -(delta + beta) / 2)          # B
        self.rot("Ry", t, -gamma / 2)
        self.cnot(c, t)
        self.rot("Ry", t, gamma / 2)                    # A
        self.rot("Rz", t, beta)
        # diag(1, e^{i alpha}) on the control = e^{i alpha/2} Rz(alpha)
        self.rot("Rz", c, alpha)
        self.phase += alpha / 2

    def multi_controlled(self, u, controls: Sequence[int], t: int):
        k = len(controls)
        if k == 0:
            self.one_qubit(u, t)
        elif k == 1:
            self.controlled(u, controls[0], t)
        else:
            # C^k(U) = C_{c_k}(V) . C^{k-1}X . C_{c_k}(V^dag) . C^{k-1}X . C^{k-1}(V), V^2 = U
            v = unitary_sqrt(u)
            last, rest = controls[-1], list(controls[:-1])
            self.controlled(v, last, t)
            self.multi_controlled(X_MAT, rest, last)
            self.controlled(v.conj().T, last, t)
            self.multi_controlled(X_MAT, rest, last)
            self.multi_controlled(v, rest, t)


def unitary_sqrt(u: np.ndarray) -> np.ndarray:
    """Principal square root; the complex Schur form of a unitary is diagonal."""
    t, z = schur(u, output="complex")
    return z @ np.diag(np.sqrt(np.diag(t))) @ z.conj().T


def controlled_lift(sub: Circuit, ancilla_qubits: Sequence[int], pattern: int) -> Circuit:
    """Condition ``sub`` on an ancilla register holding basis ket ``pattern``.

    The joint register has ``sub.num_qubits + len(ancilla_qubits)`` qubits; the
    non-ancilla positions, in increasing order, carry sub's qubits 0, 1, ....
    ``ancilla_qubits[0]`` is the most significant bit of ``pattern``.  The
    result is a CONTINUOUS-basis circuit (controlled finite gates such as
    controlled-T have no exact finite expansion) that matches the ideal
    controlled unitary exactly, global phase included.
    """
    anc = list(ancilla_qubits)
    if not anc:
        return sub
    if len(set(anc)) != len(anc):
        raise CircuitError("repeated ancilla qubit")
    if not 0 <= pattern < (1 << len(anc)):
        raise CircuitError(f"pattern {pattern} out of range for {len(anc)} ancilla qubits")
    total = sub.num_qubits + len(anc)
    if any(not 0 <= a < total for a in anc):
        raise CircuitError("ancilla index outside the joint register")
    system = [q for q in range(total) if q not in set(anc)]
    em = _Emitter()
    flips = [a for j, a in enumerate(anc) if not (pattern >> (len(anc) - 1 - j)) & 1]
    for a in flips:
        em.one_qubit(X_MAT, a)
    for qubits, m in fused_ops(sub):
        if len(qubits) == 1:
            em.multi_controlled(m, anc, system[qubits[0]])
        elif np.allclose(m, CNOT_MAT, atol=1e-14, rtol=0):
            em.multi_controlled(X_MAT, anc + [system[qubits[0]]], system[qubits[1]])
        else:
            raise CircuitError("only CNOT two-qubit gates can be lifted")
    if sub.global_phase:
        ph = np.diag([1.0, np.exp(1j * sub.global_phase)])
        em.multi_controlled(ph, anc[:-1], anc[-1])
    for a in flips:
        em.one_qubit(X_MAT, a)
    return Circuit(total, CONTINUOUS.id, tuple(em.gates), em.phase)


def one_qubit_circuit(u: np.ndarray, num_qubits: int = 1, qubit: int = 0) -> Circuit:
    """CONTINUOUS circuit (with exact phase) realizing a single 2x2 unitary."""
    em = _Emitter()
    em.one_qubit(u, qubit)
    return Circuit(num_qubits, CONTINUOUS.id, tuple(em.gates), em.phase)


_SELF_INVERSE = {"H": "H", "T": "Tdg", "Tdg": "T", "CNOT": "CNOT"}


def cancel_inverse_pairs(circuit: Circuit) -> Circuit:
    """Drop adjacent gate/inverse pairs (H.H, T.Tdg, CNOT.CNOT) in a finite circuit.

    Adjacency is per qubit: two gates are adjacent when no other gate touches
    any of their operands in between.  The unitary is unchanged exactly.
    """
    out: list[Optional[Gate]] = []
    stacks: dict[int, list[int]] = {}
    for g in circuit.gates:
        inv = _SELF_INVERSE.get(g.name)
        tops = {stacks[q][-1] if stacks.get(q) else None for q in g.qubits}
        if inv is not None and len(tops) == 1:
            j = tops.pop()
            if j is not None:
                prev = out[j]
                if prev.name == inv and prev.qubits == g.qubits and prev.param is None:
                    out[j] = None
                    for q in g.qubits:
                        stacks[q].pop()
                    continue
        out.append(g)
        for q in g.qubits:
            stacks.setdefault(q, []).append(len(out) - 1)
    gates = tuple(g for g in out if g is not None)
    return Circuit(circuit.num_qubits, circuit.basis_id, gates, circuit.global_phase)
