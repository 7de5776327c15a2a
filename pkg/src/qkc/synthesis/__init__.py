"""State preparation: exact continuous circuits and their finite-basis lowering."""
from .compile import CompileReport, compile_product, compile_state, lower_circuit
from .prepare import PREP_GATE_CONSTANT, multiplexed_rotation, prepare_exact
from .sk import (
    SKCache,
    approximate,
    build_sk_cache,
    distance,
    load_sk_cache,
    save_sk_cache,
    sk_approximate,
    sk_plain,
)

__all__ = [
    "CompileReport", "compile_product", "compile_state", "lower_circuit",
    "PREP_GATE_CONSTANT", "multiplexed_rotation", "prepare_exact",
    "SKCache", "approximate", "build_sk_cache", "distance", "load_sk_cache",
    "save_sk_cache", "sk_approximate", "sk_plain",
]
