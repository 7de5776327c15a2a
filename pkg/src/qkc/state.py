"""Dense pure states on N qubits.

Basis index convention: qubit 0 is the most significant bit, so amplitude
``i`` belongs to the ket whose binary expansion (N digits) lists qubits
0..N-1 from left to right.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StateError

MAX_QUBITS = 14
NORM_INPUT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.flags.writeable:
            self.amplitudes.setflags(write=False)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def __repr__(self):
        return f"QuantumState(num_qubits={self.num_qubits})"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


def make_state(num_qubits: int, amplitudes) -> QuantumState:
    """Validate and renormalize an amplitude vector.

    Inputs whose norm is within 1e-9 of one are rescaled to unit norm;
    anything farther off is rejected rather than silently fixed.  Vectors
    already unit to rounding are kept bit-for-bit, so state files round-trip.
    """
    if num_qubits < 1:
        raise StateError(f"num_qubits must be >= 1, got {num_qubits}")
    if num_qubits > MAX_QUBITS:
        raise StateError(f"num_qubits={num_qubits} exceeds the dense limit {MAX_QUBITS}")
    vec = np.array(amplitudes, dtype=complex).reshape(-1)
    if vec.size != 1 << num_qubits:
        raise StateError(
            f"dimension mismatch: {vec.size} amplitudes for {num_qubits} qubits "
            f"(expected {1 << num_qubits})"
        )
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise StateError("zero vector is not a state")
    if abs(norm - 1.0) > NORM_INPUT_TOL:
        raise StateError(f"amplitudes have norm {norm!r}; expected 1 within {NORM_INPUT_TOL}")
    if abs(norm - 1.0) <= 1e-14:
        return QuantumState(num_qubits, vec)
    return QuantumState(num_qubits, vec / norm)


def _normalized(num_qubits: int, vec) -> QuantumState:
    vec = np.asarray(vec, dtype=complex)
    return QuantumState(num_qubits, vec / np.linalg.norm(vec))


def basis_state(num_qubits: int, index: int = 0) -> QuantumState:
    vec = np.zeros(1 << num_qubits, dtype=complex)
    vec[index] = 1.0
    return QuantumState(num_qubits, vec)


def ghz_state(num_qubits: int) -> QuantumState:
    vec = np.zeros(1 << num_qubits, dtype=complex)
    vec[0] = vec[-1] = 1.0
    return _normalized(num_qubits, vec)


def w_state(num_qubits: int) -> QuantumState:
    vec = np.zeros(1 << num_qubits, dtype=complex)
    for q in range(num_qubits):
        vec[1 << (num_qubits - 1 - q)] = 1.0
    return _normalized(num_qubits, vec)


def plus_state(num_qubits: int = 1) -> QuantumState:
    return _normalized(num_qubits, np.ones(1 << num_qubits))


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Squared overlap |<a|b>|^2, clipped into [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise StateError(f"qubit-count mismatch: {a.num_qubits} vs {b.num_qubits}")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, max(0.0, f)))


def is_distinguishable(a: QuantumState, b: QuantumState, eps: float) -> bool:
    """True iff the squared overlap is at most ``1 - eps`` (inclusive)."""
    if not 0.0 <= eps <= 1.0:
        raise StateError(f"eps must lie in [0, 1], got {eps}")
    return fidelity(a, b) <= 1.0 - eps


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    # kron puts a's index in the high bits, matching qubit 0 = MSB
    vec = np.kron(a.amplitudes, b.amplitudes)
    return _normalized(a.num_qubits + b.num_qubits, vec)


def tensor_all(states) -> QuantumState:
    states = list(states)
    if not states:
        raise StateError("need at least one factor")
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def haar_sample(num_qubits: int, seed: int) -> QuantumState:
    """Haar-random pure state from normalized i.i.d. complex Gaussians."""
    if num_qubits < 1:
        raise StateError(f"num_qubits must be >= 1, got {num_qubits}")
    rng = np.random.default_rng(seed)
    dim = 1 << num_qubits
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return _normalized(num_qubits, vec)


def random_product_state(num_qubits: int, seed: int) -> tuple[QuantumState, list[QuantumState]]:
    """A product of independent Haar single-qubit states; returns (state, factors)."""
    ss = np.random.SeedSequence(seed)
    factors = [haar_sample(1, int(s.generate_state(1, np.uint64)[0])) for s in ss.spawn(num_qubits)]
    return tensor_all(factors), factors


# -- text file format -------------------------------------------------------

def format_state(state: QuantumState) -> str:
    lines = [f"qubits: {state.num_qubits}"]
    for a in state.amplitudes:
        lines.append(f"{float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> QuantumState:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines or not lines[0].startswith("qubits:"):
        raise StateError("state file must start with 'qubits: N'")
    try:
        n = int(lines[0].split(":", 1)[1])
    except ValueError as exc:
        raise StateError(f"bad qubit count line {lines[0]!r}") from exc
    if n < 1 or n > MAX_QUBITS:
        raise StateError(f"qubit count {n} out of range")
    body = lines[1:]
    if len(body) != 1 << n:
        raise StateError(f"expected {1 << n} amplitude lines, found {len(body)}")
    amps = []
    for k, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise StateError(f"amplitude line {k} must hold 're im', got {ln!r}")
        amps.append(complex(float(parts[0]), float(parts[1])))
    return make_state(n, amps)


def read_state(path) -> QuantumState:
    return parse_state(Path(path).read_text())


def write_state(state: QuantumState, path) -> None:
    Path(path).write_text(format_state(state))
