"""Upper bounds on the algorithmic complexity of pure quantum states.

A state is compiled into a circuit over a finite gate basis, the circuit is
serialized to bits, and the compressed bit length is reported as an upper
bound.  See README.md for a tour.
"""
__version__ = "0.1.0"
