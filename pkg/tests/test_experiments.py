import json

import numpy as np
import pytest

from qkc.experiments import (
    ENSEMBLE,
    EPS_SCALING,
    N_SCALING,
    PRODUCT_SCALING,
    ExperimentConfig,
    control_value,
    run_ensemble,
    run_scaling,
    sample_seed,
)


class TestSeeds:
    def test_pure_function(self):
        assert sample_seed(7, 3) == sample_seed(7, 3)
        assert len({sample_seed(7, i) for i in range(1000)}) == 1000
        assert sample_seed(7, 0) != sample_seed(8, 0)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(kind="NOPE"), dict(samples=0), dict(eps_values=(1.5,)), dict(n_values=()),
    ])
    def test_rejected(self, kw):
        base = dict(kind=ENSEMBLE, n_values=(2,), eps_values=(0.1,), samples=3)
        with pytest.raises(ValueError):
            ExperimentConfig(**{**base, **kw})

    def test_control_values(self):
        assert control_value(EPS_SCALING, 3, 0.125) == 3.0
        assert control_value(N_SCALING, 4, 0.1) == 16.0
        assert control_value(PRODUCT_SCALING, 2, 0.5) == 4.0


class TestEnsemble:
    def test_rows(self, cache):
        rep = run_ensemble(ExperimentConfig(ENSEMBLE, (2,), (0.1,), 10, seed=7), cache)
        assert len(rep.rows) == 10
        assert [r.index for r in rep.rows] == list(range(10))
        assert all(r.ok and r.fidelity >= 0.9 for r in rep.rows)

    def test_repeatable(self, cache, tmp_path):
        outs = []
        for k in range(2):
            out = tmp_path / f"e{k}.csv"
            run_ensemble(ExperimentConfig(ENSEMBLE, (2,), (0.1,), 6, seed=3, output=str(out)), cache)
            outs.append((out.read_bytes(), out.with_suffix(".json").read_bytes()))
        assert outs[0] == outs[1]

    def test_workers_do_not_change_output(self, cache, tmp_path):
        a = run_ensemble(ExperimentConfig(ENSEMBLE, (2,), (0.1,), 5, seed=1), cache, workers=1)
        b = run_ensemble(ExperimentConfig(ENSEMBLE, (2,), (0.1,), 5, seed=1), cache, workers=3)
        assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()

    def test_overlay_monotone(self, cache):
        rep = run_ensemble(ExperimentConfig(ENSEMBLE, (2,), (0.1,), 4, seed=2), cache)
        vals = [v for _, v in json.loads(rep.to_json())["overlays"]["compressible_fraction"]]
        assert vals == sorted(vals)

    def test_needs_single_point(self, cache):
        with pytest.raises(ValueError):
            run_ensemble(ExperimentConfig(ENSEMBLE, (2, 3), (0.1,), 2), cache)


class TestScaling:
    def test_eps_monotone(self, cache):
        rep = run_scaling(ExperimentConfig(EPS_SCALING, (2,), (1e-1, 1e-2, 1e-3), 6, seed=4), cache)
        means = [t["mean_compressed_bits"] for t in rep.table]
        assert means == sorted(means)
        assert rep.fit["pearson_r"] > 0.9
        assert "sk_exponent" in rep.fit

    def test_product_rows(self, cache, tmp_path):
        out = tmp_path / "p.csv"
        rep = run_scaling(ExperimentConfig(PRODUCT_SCALING, (2, 3, 4), (1e-2,), 2, output=str(out)), cache)
        assert [t["n"] for t in rep.table] == [2, 3, 4]
        assert out.exists() and out.with_suffix(".samples.csv").exists()
        header = out.read_text().splitlines()[0].split(",")
        assert header[:3] == ["x", "n", "eps"]
        assert np.isfinite(rep.fit["ratio_band"])

    def test_needs_three_points(self, cache):
        with pytest.raises(ValueError):
            run_scaling(ExperimentConfig(N_SCALING, (2, 3), (0.1,), 2), cache)
