"""Structured states are cheap to describe.

Product states, graph states and short superpositions of product states all
admit circuits far shorter than a generic preparation.  complexity_estimate
tries each applicable strategy and keeps the shortest compressed code.

    python3 demos/02_structure_helps.py
"""
from qkc.circuit import STD_FINITE
from qkc.complexity import complexity_estimate
from qkc.entanglement import basis_expansion, graph_state, random_graph, schmidt_measure_bounds
from qkc.state import ghz_state, haar_sample, random_product_state
from qkc.synthesis import build_sk_cache

cache = build_sk_cache(STD_FINITE, 12)
eps = 1e-2


def show(label, report):
    parts = ", ".join(f"{r.strategy}={r.compressed_bits}" for r in report.results)
    print(f"{label:<18} K_hat={report.k_hat:<6} ({parts})")


show("Haar, N=4", complexity_estimate(haar_sample(4, 1), eps, STD_FINITE, cache))

product, _ = random_product_state(4, 1)
show("product, N=4", complexity_estimate(product, eps, STD_FINITE, cache))

edges = random_graph(5, 2)
show("graph, N=5", complexity_estimate(graph_state(5, edges), eps, STD_FINITE, cache, graph=edges))

ghz = ghz_state(5)
rep = complexity_estimate(ghz, eps, STD_FINITE, cache, decomposition=basis_expansion(ghz))
show("GHZ, N=5", rep)
print(f"  ancilla route succeeds with probability {rep.result('SCHMIDT_ANCILLA').success_probability:.3f}")

# The Schmidt measure is only bracketed: ranks give the floor, witnesses the ceiling.
# A generic 3-qubit state is a sum of two product terms, so Haar_3 also pins to 1.
for name, s in (("GHZ_5", ghz), ("Haar_3", haar_sample(3, 0))):
    b = schmidt_measure_bounds(s)
    print(f"{name}: {b.lower:.3f} <= E_S <= {b.upper:.3f}")
