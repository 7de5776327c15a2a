"""Random circuit generators shared by the test modules."""
import numpy as np
from hypothesis import strategies as st

from qkc.circuit import CONTINUOUS, STD_FINITE, Circuit, Gate


def random_finite_circuit(rng: np.random.Generator, max_qubits: int = 6, max_gates: int = 40) -> Circuit:
    n = int(rng.integers(1, max_qubits + 1))
    gates = []
    for _ in range(int(rng.integers(0, max_gates + 1))):
        if n > 1 and rng.random() < 0.3:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
        else:
            gates.append(Gate(str(rng.choice(["H", "T", "Tdg"])), (int(rng.integers(n)),)))
    return Circuit(n, STD_FINITE.id, tuple(gates))


def random_continuous_circuit(rng: np.random.Generator, n: int, count: int) -> Circuit:
    gates = []
    for _ in range(count):
        if n > 1 and rng.random() < 0.3:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
        else:
            gates.append(Gate(str(rng.choice(["Rz", "Ry"])), (int(rng.integers(n)),), float(rng.uniform(-np.pi, np.pi))))
    return Circuit(n, CONTINUOUS.id, tuple(gates))


@st.composite
def finite_circuits(draw, max_qubits=6, max_gates=40):
    return random_finite_circuit(np.random.default_rng(draw(st.integers(0, 2**32 - 1))), max_qubits, max_gates)
