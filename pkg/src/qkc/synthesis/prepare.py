"""Exact preparation over the continuous basis {Rz, Ry, CNOT}.

Magnitudes are loaded qubit by qubit with uniformly controlled Ry rotations,
then the phase diagonal is peeled off from the last qubit backwards with
uniformly controlled Rz rotations.  A uniformly controlled rotation on k
controls costs at most 2^k rotations and 2^k CNOTs (Gray-code ladder), so a
generic N-qubit target needs at most 4 * 2^N gates.

Angles whose branch carries zero amplitude are free; they are filled with the
mean of the constrained angles, which turns the multiplexors of sparse
targets (basis kets) into plain rotations or nothing at all.

During the Ry stage the target qubit is still |0>, so only the first column
of each multiplexor matters.  When every constrained angle is 0 or pi the
multiplexor is a classical bit flip f(controls); if f is affine over GF(2)
with few terms it is emitted as CNOTs (plus Ry(pi) for the constant), which
is how GHZ-like targets come out as a CNOT chain.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from ..circuit import CONTINUOUS, Circuit, Gate
from ..state import QuantumState

PREP_GATE_CONSTANT = 4  # gate count <= PREP_GATE_CONSTANT * 2^N


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _fill(angles: np.ndarray, defined: np.ndarray) -> np.ndarray:
    out = np.array(angles, dtype=float)
    if defined.all():
        return out
    fill = float(np.mean(out[defined])) if defined.any() else 0.0
    out[~defined] = fill
    return out


def multiplexed_rotation(axis: str, angles, controls: list[int], target: int) -> list[Gate]:
    """Uniformly controlled rotation: R(angles[p]) on target when controls read p.

    ``controls[0]`` is the most significant bit of ``p``.
    """
    angles = np.asarray(angles, dtype=float)
    k = len(controls)
    if angles.size != 1 << k:
        raise ValueError("need one angle per control pattern")
    if np.all(angles == angles[0]):
        return [Gate(axis, (target,), float(angles[0]))] if angles[0] != 0.0 else []
    size = 1 << k
    gray = np.array([_gray(i) for i in range(size)])
    p = np.arange(size)
    parity = np.array([[bin(int(a) & int(b)).count("1") & 1 for b in gray] for a in p])
    sign = 1.0 - 2.0 * parity          # sign[p, i] = (-1)^{popcount(p & g_i)}
    alphas = sign.T @ angles / size
    gates: list[Gate] = []
    for i in range(size):
        if alphas[i] != 0.0:
            gates.append(Gate(axis, (target,), float(alphas[i])))
        bit = (int(gray[i]) ^ _gray((i + 1) % size)).bit_length() - 1
        gates.append(Gate("CNOT", (controls[k - 1 - bit], target)))
    return gates


def _affine_flip(theta: np.ndarray, defined: np.ndarray, k: int, max_terms: int = 3):
    """Return (const, control positions) if theta/pi is an affine GF(2) function."""
    if not defined.any():
        return None
    vals = theta[defined]
    if not np.all((vals == 0.0) | (vals == np.pi)):
        return None
    pats = np.flatnonzero(defined)
    f = (vals == np.pi).astype(int)
    bits = (pats[:, None] >> (k - 1 - np.arange(k))[None, :]) & 1
    for w in range(0, min(k, max_terms) + 1):
        for subset in combinations(range(k), w):
            lin = bits[:, list(subset)].sum(axis=1) & 1 if w else np.zeros(len(pats), dtype=int)
            for const in (0, 1):
                if np.array_equal(lin ^ const, f):
                    return const, subset
    return None


def _cancel_adjacent_cnots(gates: list[Gate]) -> list[Gate]:
    out: list[Gate] = []
    for g in gates:
        if out and g.name == "CNOT" and out[-1] == g:
            out.pop()
        else:
            out.append(g)
    return out


def prepare_exact(target: QuantumState) -> Circuit:
    """CONTINUOUS-basis circuit C with C|0>_N equal to ``target`` (phase included)."""
    n = target.num_qubits
    amps = np.asarray(target.amplitudes)
    mag2 = np.abs(amps) ** 2
    gates: list[Gate] = []

    for k in range(n):
        blocks = mag2.reshape(1 << k, 2, -1).sum(axis=2)
        n0, n1 = np.sqrt(blocks[:, 0]), np.sqrt(blocks[:, 1])
        defined = (n0 > 0) | (n1 > 0)
        raw = 2.0 * np.arctan2(n1, n0)
        flip = _affine_flip(raw, defined, k) if k else None
        if flip is not None and (flip[1] or flip[0]):
            const, subset = flip
            if const:
                gates.append(Gate("Ry", (k,), float(np.pi)))
            gates += [Gate("CNOT", (c, k)) for c in subset]
            continue
        gates += multiplexed_rotation("Ry", _fill(raw, defined), list(range(k)), k)

    phase = np.angle(amps)
    defined = amps != 0
    for q in range(n - 1, -1, -1):
        ph = phase.reshape(-1, 2)
        dfd = defined.reshape(-1, 2)
        both = dfd[:, 0] & dfd[:, 1]
        theta = _fill(ph[:, 1] - ph[:, 0], both)
        reduced = np.zeros(len(ph))
        reduced[both] = 0.5 * (ph[both, 0] + ph[both, 1])
        only0 = dfd[:, 0] & ~dfd[:, 1]
        only1 = dfd[:, 1] & ~dfd[:, 0]
        reduced[only0] = ph[only0, 0] + theta[only0] / 2
        reduced[only1] = ph[only1, 1] - theta[only1] / 2
        gates += multiplexed_rotation("Rz", theta, list(range(q)), q)
        phase, defined = reduced, dfd.any(axis=1)

    return Circuit(n, CONTINUOUS.id, tuple(_cancel_adjacent_cnots(gates)), float(phase[0]))
