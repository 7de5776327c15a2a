"""Bit-exact codes for finite-basis circuits.

Bit strings are Python ``str`` objects over '0'/'1'; they hash, slice and
compare cheaply and print readably.

OMEGA_BIN
    gamma(N) gamma(g+1) then, per gate, the opcode (index in the basis
    mnemonic list) in ceil(log2 |B|) bits followed by each operand in
    ceil(log2 N) bits.  Everything is fixed-width after the two Elias-gamma
    headers, so the code is prefix-free.
OMEGA_TXT
    The circuit text format (without the bookkeeping phase line), one 8-bit
    character per symbol.  The gate-count header line makes it prefix-free.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from math import ceil, log2
from pathlib import Path

from .circuit import STD_FINITE, Circuit, Gate, GateBasis, builtin_basis, format_circuit, parse_circuit, validate
from .errors import (
    CircuitError,
    DecodeError,
    OpcodeRangeError,
    OperandRangeError,
    TrailingBitsError,
    TruncatedStreamError,
)

OMEGA_BIN = "OMEGA_BIN"
OMEGA_TXT = "OMEGA_TXT"
CODE_IDS = (OMEGA_BIN, OMEGA_TXT)
FILE_MAGIC = 0xE5


@dataclass(frozen=True)
class CodeSpec:
    code_id: str
    basis: GateBasis = STD_FINITE

    def __post_init__(self):
        if self.code_id not in CODE_IDS:
            raise ValueError(f"unknown code {self.code_id!r}; known: {CODE_IDS}")


@dataclass(frozen=True)
class EncodedString:
    bits: str
    code_id: str
    basis_id: str

    def __len__(self):
        return len(self.bits)


def width(count: int) -> int:
    """Bits needed to index ``count`` symbols (0 when there is only one)."""
    return ceil(log2(count)) if count > 1 else 0


def gamma(n: int) -> str:
    """Elias gamma code of a positive integer."""
    if n < 1:
        raise ValueError(f"gamma codes positive integers, got {n}")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def read_gamma(bits: str, pos: int) -> tuple[int, int]:
    """Decode one gamma code starting at ``pos``; return (value, next position)."""
    z = pos
    while z < len(bits) and bits[z] == "0":
        z += 1
    nbits = z - pos + 1
    end = z + nbits
    if end > len(bits):
        raise TruncatedStreamError(f"stream ends inside an Elias-gamma field at bit {pos}")
    return int(bits[z:end], 2), end


def bin_length(num_qubits: int, gates, basis: GateBasis) -> int:
    """Length in bits of the OMEGA_BIN code, computed without encoding."""
    op_w, q_w = width(len(basis.gate_defs)), width(num_qubits)
    body = sum(op_w + q_w * len(g.qubits) for g in gates)
    return len(gamma(num_qubits)) + len(gamma(len(gates) + 1)) + body


def _check(circuit: Circuit, code: CodeSpec) -> None:
    basis = code.basis
    if not basis.finite:
        raise CircuitError(f"basis {basis.id} is continuous; lower the circuit first")
    if circuit.basis_id != basis.id:
        raise CircuitError(f"circuit basis {circuit.basis_id} does not match code basis {basis.id}")
    if any(g.param is not None for g in circuit.gates):
        raise CircuitError("continuous parameter present; only finite-basis circuits are encodable")
    problems = validate(circuit, basis)
    if problems:
        raise CircuitError("; ".join(problems))


def encode(circuit: Circuit, code: CodeSpec) -> EncodedString:
    _check(circuit, code)
    basis = code.basis
    if code.code_id == OMEGA_TXT:
        text = format_circuit(circuit, include_phase=False)
        bits = "".join(format(b, "08b") for b in text.encode("ascii"))
        return EncodedString(bits, OMEGA_TXT, basis.id)
    op_w, q_w = width(len(basis.gate_defs)), width(circuit.num_qubits)
    names = basis.mnemonics
    parts = [gamma(circuit.num_qubits), gamma(len(circuit.gates) + 1)]
    fmt_op = f"0{op_w}b"
    fmt_q = f"0{q_w}b"
    for g in circuit.gates:
        if op_w:
            parts.append(format(names.index(g.name), fmt_op))
        if q_w:
            parts.extend(format(q, fmt_q) for q in g.qubits)
    return EncodedString("".join(parts), OMEGA_BIN, basis.id)


def _decode_bin(bits: str, basis: GateBasis) -> Circuit:
    n, pos = read_gamma(bits, 0)
    count, pos = read_gamma(bits, pos)
    count -= 1
    defs = basis.gate_defs
    op_w, q_w = width(len(defs)), width(n)
    gates = []
    for k in range(count):
        if pos + op_w > len(bits):
            raise TruncatedStreamError(f"stream ends inside gate {k}")
        op = int(bits[pos:pos + op_w], 2) if op_w else 0
        pos += op_w
        if op >= len(defs):
            raise OpcodeRangeError(f"gate {k}: opcode {op} >= basis size {len(defs)}")
        gd = defs[op]
        if pos + q_w * gd.arity > len(bits):
            raise TruncatedStreamError(f"stream ends inside gate {k}")
        qs = []
        for _ in range(gd.arity):
            q = int(bits[pos:pos + q_w], 2) if q_w else 0
            pos += q_w
            if q >= n:
                raise OperandRangeError(f"gate {k}: qubit {q} out of range for {n} qubits")
            qs.append(q)
        gates.append(Gate(gd.mnemonic, tuple(qs)))
    if pos != len(bits):
        raise TrailingBitsError(f"{len(bits) - pos} trailing bits after {count} gates")
    circ = Circuit(n, basis.id, tuple(gates))
    problems = validate(circ, basis)
    if problems:
        raise DecodeError("; ".join(problems))
    return circ


def _decode_txt(bits: str, basis: GateBasis) -> Circuit:
    if len(bits) % 8:
        raise TruncatedStreamError("text code length is not a whole number of bytes")
    raw = bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"non-ASCII byte in text code: {exc}") from None
    if not text.endswith("\n"):
        raise TruncatedStreamError("text code does not end with a newline")
    try:
        circ = parse_circuit(text)
    except CircuitError as exc:
        raise DecodeError(str(exc)) from None
    if circ.basis_id != basis.id:
        raise DecodeError(f"text declares basis {circ.basis_id}, expected {basis.id}")
    if format_circuit(circ, include_phase=False) != text:
        raise DecodeError("text is not in canonical form")
    return circ


def decode(es: EncodedString, basis: GateBasis) -> Circuit:
    if es.basis_id != basis.id:
        raise DecodeError(f"encoded for basis {es.basis_id}, decoding with {basis.id}")
    if es.code_id == OMEGA_BIN:
        return _decode_bin(es.bits, basis)
    if es.code_id == OMEGA_TXT:
        return _decode_txt(es.bits, basis)
    raise DecodeError(f"unknown code {es.code_id!r}")


def translate(es: EncodedString, src: CodeSpec, dst: CodeSpec) -> EncodedString:
    """The fixed dictionary between two codes: decode under ``src``, re-encode under ``dst``."""
    if src.basis.id != dst.basis.id:
        raise ValueError("codes must share a basis")
    if es.code_id != src.code_id:
        raise DecodeError(f"string is {es.code_id}, translator expects {src.code_id}")
    return encode(decode(es, src.basis), dst)


# -- files -------------------------------------------------------------------

def pack_bits(bits: str) -> bytes:
    if not bits:
        return b""
    padded = bits + "0" * (-len(bits) % 8)
    return int(padded, 2).to_bytes(len(padded) // 8, "big")


def unpack_bits(data: bytes, nbits: int) -> str:
    if len(data) != (nbits + 7) // 8:
        raise TruncatedStreamError(f"truncated payload: expected {(nbits + 7) // 8} bytes, found {len(data)}")
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), f"0{len(data) * 8}b")[:nbits]


def write_encoded(es: EncodedString, path) -> None:
    bid = es.basis_id.encode("ascii")
    head = struct.pack("<BBB", FILE_MAGIC, CODE_IDS.index(es.code_id), len(bid)) + bid
    Path(path).write_bytes(head + struct.pack("<Q", len(es.bits)) + pack_bits(es.bits))


def read_encoded(path) -> EncodedString:
    data = Path(path).read_bytes()
    if not data or data[0] != FILE_MAGIC:
        raise DecodeError(f"{path}: not an encoded-circuit file")
    if len(data) < 3:
        raise TruncatedStreamError(f"{path}: truncated header")
    code, blen = data[1], data[2]
    if code >= len(CODE_IDS):
        raise DecodeError(f"{path}: unknown code byte {code}")
    if len(data) < 3 + blen + 8:
        raise TruncatedStreamError(f"{path}: truncated header")
    bid = data[3:3 + blen].decode("ascii")
    (nbits,) = struct.unpack("<Q", data[3 + blen:11 + blen])
    bits = unpack_bits(data[11 + blen:], nbits)
    builtin_basis(bid)
    return EncodedString(bits, CODE_IDS[code], bid)
