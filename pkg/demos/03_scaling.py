"""How description length grows with precision and with size.

Runs three small sweeps and prints the tables the CLI would write as CSV.
Larger runs: `qkc scaling --kind eps --n 3 --eps 0.1,0.01,0.001 --samples 50`.

    python3 demos/03_scaling.py
"""
from qkc.circuit import STD_FINITE
from qkc.experiments import EPS_SCALING, N_SCALING, PRODUCT_SCALING, ExperimentConfig, run_scaling
from qkc.synthesis import build_sk_cache

cache = build_sk_cache(STD_FINITE, 12)

sweeps = [
    ("precision, N=3", ExperimentConfig(EPS_SCALING, (3,), (1e-1, 1e-2, 1e-3), 8)),
    ("size, Haar", ExperimentConfig(N_SCALING, (2, 3, 4), (1e-1,), 8)),
    ("size, product", ExperimentConfig(PRODUCT_SCALING, (2, 4, 6, 8), (1e-2,), 8)),
]
for title, cfg in sweeps:
    rep = run_scaling(cfg, cache)
    print(f"\n{title}")
    print("  control   mean compressed bits   bits/control")
    for t in rep.table:
        print(f"  {t['x']:7.2f}   {t['mean_compressed_bits']:20.1f}   {t['ratio']:12.2f}")
    print(f"  pearson r {rep.fit['pearson_r']:.3f}, ratio band {rep.fit['ratio_band']:.2f}")
