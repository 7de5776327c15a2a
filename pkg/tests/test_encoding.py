import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import finite_circuits, random_finite_circuit
from qkc.circuit import CONTINUOUS, STD_FINITE, Circuit, Gate, format_circuit
from qkc.compress import compress, compressed_length, decompress
from qkc.encoding import (
    OMEGA_BIN,
    OMEGA_TXT,
    CodeSpec,
    EncodedString,
    bin_length,
    decode,
    encode,
    gamma,
    read_encoded,
    read_gamma,
    translate,
    write_encoded,
)
from qkc.errors import (
    CircuitError,
    DecodeError,
    OpcodeRangeError,
    TrailingBitsError,
    TruncatedStreamError,
)

BIN = CodeSpec(OMEGA_BIN)
TXT = CodeSpec(OMEGA_TXT)
GHZ2 = Circuit(2, "STD_FINITE", (Gate("H", (0,)), Gate("CNOT", (0, 1))))


def count_bits(c: Circuit) -> int:
    """Independent length counter: |gamma(n)| = 2 floor(log2 n) + 1."""
    def g(n):
        return 2 * (n.bit_length() - 1) + 1
    q = (c.num_qubits - 1).bit_length()
    return g(c.num_qubits) + g(len(c) + 1) + sum(2 + q * len(x.qubits) for x in c.gates)


class TestGamma:
    @pytest.mark.parametrize("n,code", [(1, "1"), (2, "010"), (3, "011"), (4, "00100"), (9, "0001001")])
    def test_values(self, n, code):
        assert gamma(n) == code

    @given(st.integers(1, 10**12))
    def test_round_trip(self, n):
        assert read_gamma(gamma(n) + "1", 0) == (n, len(gamma(n)))

    def test_zero_refused(self):
        with pytest.raises(ValueError):
            gamma(0)


class TestEncode:
    def test_empty_two_qubits(self):
        es = encode(Circuit(2, "STD_FINITE"), BIN)
        assert es.bits == "010" + "1"

    def test_ghz2_bits(self):
        # gamma(2) gamma(3) | H:00 q0 | CNOT:11 q0 q1
        assert encode(GHZ2, BIN).bits == "010" + "011" + "00" "0" + "11" "0" "1"

    def test_txt_length(self):
        assert len(encode(GHZ2, TXT)) == 8 * len(format_circuit(GHZ2, include_phase=False))

    def test_phase_never_encoded(self):
        shifted = Circuit(2, "STD_FINITE", GHZ2.gates, 1.25)
        assert encode(shifted, BIN) == encode(GHZ2, BIN)
        assert encode(shifted, TXT) == encode(GHZ2, TXT)

    def test_continuous_refused(self):
        c = Circuit(1, CONTINUOUS.id, (Gate("Rz", (0,), 0.5),))
        with pytest.raises(CircuitError):
            encode(c, BIN)

    @given(finite_circuits())
    @settings(max_examples=200, deadline=None)
    def test_length_law(self, c):
        es = encode(c, BIN)
        assert len(es) == bin_length(c.num_qubits, c.gates, STD_FINITE) == count_bits(c)

    @given(finite_circuits())
    @settings(max_examples=50, deadline=None)
    def test_deterministic(self, c):
        assert encode(c, BIN) == encode(c, BIN)


class TestDecode:
    @given(finite_circuits())
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, c):
        for code in (BIN, TXT):
            assert decode(encode(c, code), STD_FINITE).same_gates(c)

    @given(finite_circuits(max_gates=10))
    @settings(max_examples=60, deadline=None)
    def test_prefixes_rejected(self, c):
        bits = encode(c, BIN).bits
        for k in range(len(bits)):
            with pytest.raises(DecodeError):
                decode(EncodedString(bits[:k], OMEGA_BIN, "STD_FINITE"), STD_FINITE)

    def test_truncated_mid_gate(self):
        bits = encode(GHZ2, BIN).bits[:-2]
        with pytest.raises(TruncatedStreamError):
            decode(EncodedString(bits, OMEGA_BIN, "STD_FINITE"), STD_FINITE)

    def test_trailing_bits(self):
        bits = encode(GHZ2, BIN).bits + "0"
        with pytest.raises(TrailingBitsError):
            decode(EncodedString(bits, OMEGA_BIN, "STD_FINITE"), STD_FINITE)

    def test_opcode_range(self):
        three = type(STD_FINITE)("THREE", STD_FINITE.gate_defs[:3], True)
        # width 2 opcodes, value 3 does not exist in a 3-gate basis
        bits = gamma(1) + gamma(2) + "11"
        with pytest.raises(OpcodeRangeError):
            decode(EncodedString(bits, OMEGA_BIN, "THREE"), three)

    def test_txt_must_be_canonical(self):
        text = format_circuit(GHZ2, include_phase=False).replace("H 0", "H  0")
        bits = "".join(format(b, "08b") for b in text.encode())
        with pytest.raises(DecodeError):
            decode(EncodedString(bits, OMEGA_TXT, "STD_FINITE"), STD_FINITE)


class TestTranslate:
    def test_ghz2(self):
        es = translate(encode(GHZ2, BIN), BIN, TXT)
        assert es.code_id == OMEGA_TXT
        assert decode(es, STD_FINITE).same_gates(GHZ2)

    @given(finite_circuits())
    @settings(max_examples=50, deadline=None)
    def test_both_ways(self, c):
        back = translate(translate(encode(c, BIN), BIN, TXT), TXT, BIN)
        assert back == encode(c, BIN)


class TestEncodedFile:
    def test_round_trip(self, tmp_path):
        es = encode(random_finite_circuit(np.random.default_rng(3)), BIN)
        write_encoded(es, tmp_path / "x.enc")
        assert read_encoded(tmp_path / "x.enc") == es

    def test_truncated(self, tmp_path):
        write_encoded(encode(GHZ2, BIN), tmp_path / "x.enc")
        data = (tmp_path / "x.enc").read_bytes()
        for cut in (2, len(data) - 1):
            (tmp_path / "y.enc").write_bytes(data[:cut])
            with pytest.raises(TruncatedStreamError):
                read_encoded(tmp_path / "y.enc")


class TestCompressor:
    def test_all_zero(self):
        assert compressed_length("0" * 1024) < 200

    def test_empty(self):
        assert decompress(compress("")) == ""

    def test_periodic_gate_block(self):
        rng = np.random.default_rng(0)
        block = random_finite_circuit(rng, max_qubits=4, max_gates=64)
        block = Circuit(4, "STD_FINITE", tuple(Gate(g.name, tuple(q % 4 for q in g.qubits)) for g in block.gates))
        while len(block) < 64:
            block = Circuit(4, "STD_FINITE", block.gates + (Gate("H", (0,)),))
        rep = Circuit(4, "STD_FINITE", block.gates[:64] * 128)
        es = encode(rep, BIN)
        assert len(compress(es)) < 0.25 * len(es)

    @given(st.text(alphabet="01", max_size=600))
    @settings(max_examples=300, deadline=None)
    def test_lossless_and_bounded(self, x):
        z = compress(x)
        assert decompress(z) == x
        assert len(z) <= len(x) + 1

    @given(st.text(alphabet="01", min_size=1, max_size=40), st.integers(2, 60))
    @settings(max_examples=100, deadline=None)
    def test_repeats(self, unit, times):
        x = unit * times
        assert decompress(compress(x)) == x

    def test_long_periodic_is_logarithmic(self):
        unit = "0110100110010110" * 2
        sizes = [compressed_length(unit * k) for k in (64, 256, 1024)]
        assert sizes[2] - sizes[1] <= sizes[1] - sizes[0] + 8
        assert sizes[2] < 200

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            compress("0120")

    def test_corrupt_stream(self):
        z = compress("01" * 200)
        with pytest.raises(DecodeError):
            decompress(z[:-3])
