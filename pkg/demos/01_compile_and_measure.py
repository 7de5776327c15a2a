"""From amplitudes to a bit count.

A state is compiled into a finite-basis circuit, the circuit is written as
a prefix-free bit string, and the bit string is compressed.  The compressed
length is an upper bound on how much information it takes to describe the
state at the chosen precision.

    python3 demos/01_compile_and_measure.py
"""
from qkc.circuit import STD_FINITE, format_circuit
from qkc.complexity import bound_generic
from qkc.compress import compress
from qkc.encoding import CodeSpec, encode
from qkc.state import ghz_state, haar_sample
from qkc.synthesis import build_sk_cache, compile_state

cache = build_sk_cache(STD_FINITE, 12)
print(f"net: {len(cache)} words, covering radius {cache.epsilon0:.3f}\n")

# A GHZ state needs no approximation at all: H and CNOT are basis gates.
circ, rep = compile_state(ghz_state(3), 1e-3, STD_FINITE, cache)
print(format_circuit(circ))
print(f"fidelity {rep.fidelity:.12f}\n")

# A Haar-random state is another matter.
code = CodeSpec("OMEGA_BIN", STD_FINITE)
print(" eps     gates  raw bits  compressed  2^N log2(1/eps)")
for eps in (1e-1, 1e-2, 1e-3):
    circ, rep = compile_state(haar_sample(3, 42), eps, STD_FINITE, cache)
    es = encode(circ, code)
    print(f"{eps:6.0e} {len(circ):7d} {len(es):9d} {len(compress(es)):11d} {bound_generic(3, eps):16.1f}")

# SK words reuse a small vocabulary of net entries, so about half the raw bits go.
print("\nshare kept by the compressor:", round(len(compress(es)) / len(es), 3))
