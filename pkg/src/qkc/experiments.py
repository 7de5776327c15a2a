"""Seeded ensemble and scaling experiments.

Sample i of an experiment with master seed S uses the seed derived from
SeedSequence([S, i]), so every sample is a pure function of (S, i) and the
rows do not depend on how many worker processes share the work.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import log2
from pathlib import Path
from statistics import mean, median
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .circuit import GateBasis, builtin_basis
from .complexity import bound_generic, compressible_fraction_bound
from .compress import compress
from .encoding import OMEGA_BIN, CodeSpec, encode
from .errors import QKCError
from .state import haar_sample, random_product_state
from .synthesis.compile import compile_product, compile_state
from .synthesis.sk import SKCache

ENSEMBLE = "ENSEMBLE"
EPS_SCALING = "EPS_SCALING"
N_SCALING = "N_SCALING"
PRODUCT_SCALING = "PRODUCT_SCALING"
KINDS = (ENSEMBLE, EPS_SCALING, N_SCALING, PRODUCT_SCALING)

ROW_FIELDS = ("index", "seed", "n", "eps", "gates", "raw_bits", "compressed_bits", "fidelity", "segments", "status")


def sample_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n_values: tuple[int, ...]
    eps_values: tuple[float, ...]
    samples: int
    seed: int = 0
    basis_id: str = "STD_FINITE"
    sk_l0: int = 12
    output: Optional[str] = None
    code_id: str = OMEGA_BIN

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if not self.n_values or not self.eps_values:
            raise ValueError("need at least one N and one eps")
        if any(not 0.0 < e < 1.0 for e in self.eps_values):
            raise ValueError("eps values must lie in (0, 1)")
        if any(n < 1 for n in self.n_values):
            raise ValueError("N values must be >= 1")

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(n, e) for n in self.n_values for e in self.eps_values]


@dataclass(frozen=True)
class SampleRow:
    index: int
    seed: int
    n: int
    eps: float
    gates: int
    raw_bits: int
    compressed_bits: int
    fidelity: float
    segments: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _run_sample(job) -> SampleRow:
    kind, n, eps, index, seed, basis, cache, code_id = job
    try:
        if kind == PRODUCT_SCALING:
            _, factors = random_product_state(n, seed)
            circ, rep = compile_product(factors, eps, basis, cache)
        else:
            circ, rep = compile_state(haar_sample(n, seed), eps, basis, cache)
        es = encode(circ, CodeSpec(code_id, basis))
        return SampleRow(index, seed, n, eps, len(circ), len(es), len(compress(es)),
                         rep.fidelity, rep.continuous_count)
    except QKCError as exc:
        return SampleRow(index, seed, n, eps, 0, 0, 0, float("nan"), 0, f"error: {exc}")


_WORKER_CACHE: Optional[SKCache] = None


def _init_worker(cache: SKCache) -> None:
    global _WORKER_CACHE
    _WORKER_CACHE = cache


def _run_in_worker(job) -> SampleRow:
    return _run_sample(job[:6] + (_WORKER_CACHE,) + job[7:])


def _run_jobs(jobs: list, cache: SKCache, workers: int) -> list[SampleRow]:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_sample(j) for j in jobs]
    light = [j[:6] + (None,) + j[7:] for j in jobs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(cache,)) as pool:
        return list(pool.map(_run_in_worker, light, chunksize=1))  # map keeps job order


def _jobs(cfg: ExperimentConfig, basis: GateBasis, cache: SKCache) -> list:
    jobs = []
    for n, eps in cfg.points:
        for i in range(cfg.samples):
            jobs.append((cfg.kind, n, eps, i, sample_seed(cfg.seed, i), basis, cache, cfg.code_id))
    return jobs


def _summary(values: Sequence[float]) -> dict:
    if not values:
        return {"mean": None, "median": None, "min": None, "max": None}
    return {"mean": mean(values), "median": median(values), "min": min(values), "max": max(values)}


@dataclass
class EnsembleReport:
    config: ExperimentConfig
    rows: list[SampleRow]
    summary: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return rows_csv(self.rows)

    def to_json(self) -> str:
        doc = {
            "tool": "qkc", "version": __version__, "config": _config_dict(self.config),
            "summary": self.summary, "overlays": self.overlays,
            "failures": sum(not r.ok for r in self.rows),
        }
        return json.dumps(doc, indent=2) + "\n"


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d.pop("output")  # where a report is written is not part of its content
    return d


def rows_csv(rows: Sequence[SampleRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([getattr(r, f) if not isinstance(getattr(r, f), float) else repr(getattr(r, f))
                    for f in ROW_FIELDS])
    return buf.getvalue()


def run_ensemble(cfg: ExperimentConfig, cache: SKCache, workers: int = 1) -> EnsembleReport:
    """Haar samples at a single (N, eps), one row per sample."""
    if cfg.kind != ENSEMBLE:
        raise ValueError("run_ensemble needs kind ENSEMBLE")
    if len(cfg.points) != 1:
        raise ValueError("an ensemble has exactly one N and one eps")
    basis = builtin_basis(cfg.basis_id)
    rows = _run_jobs(_jobs(cfg, basis, cache), cache, workers)
    ok = [r for r in rows if r.ok]
    n, eps = cfg.points[0]
    comp = [r.compressed_bits for r in ok]
    summary = {
        "compressed_bits": _summary(comp),
        "raw_bits": _summary([r.raw_bits for r in ok]),
        "gates": _summary([r.gates for r in ok]),
        "min_fidelity": min((r.fidelity for r in ok), default=None),
    }
    top = max(comp) if comp else 0
    ks = sorted({0, *range(0, top + 1, max(1, top // 16)), top})
    overlays = {
        "generic_bound_bits": bound_generic(n, eps),
        "compressible_fraction": [[k, compressible_fraction_bound(n, eps, k)] for k in ks],
    }
    report = EnsembleReport(cfg, rows, summary, overlays)
    _write(cfg, report.to_csv(), report.to_json())
    return report


@dataclass
class ScalingReport:
    config: ExperimentConfig
    rows: list[SampleRow]
    table: list[dict]
    fit: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["x", "n", "eps", "samples", "mean_gates", "mean_raw_bits", "mean_compressed_bits", "ratio"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for t in self.table:
            w.writerow([repr(t[c]) if isinstance(t[c], float) else t[c] for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"tool": "qkc", "version": __version__, "config": _config_dict(self.config),
               "table": self.table, "fit": self.fit}
        return json.dumps(doc, indent=2) + "\n"


def control_value(kind: str, n: int, eps: float) -> float:
    """The abscissa each scaling law is linear in."""
    if kind == EPS_SCALING:
        return log2(1.0 / eps)
    if kind == N_SCALING:
        return float(1 << n)
    if kind == PRODUCT_SCALING:
        return n * log2(n / eps)
    raise ValueError(f"no control variable for {kind}")


def run_scaling(cfg: ExperimentConfig, cache: SKCache, workers: int = 1) -> ScalingReport:
    """Sweep eps (EPS_SCALING) or N (N_SCALING, PRODUCT_SCALING); fit mean bits vs the control variable."""
    if cfg.kind == ENSEMBLE:
        raise ValueError("use run_ensemble for ENSEMBLE")
    if cfg.kind == EPS_SCALING and len(cfg.n_values) != 1:
        raise ValueError("EPS_SCALING fixes a single N")
    if cfg.kind != EPS_SCALING and len(cfg.eps_values) != 1:
        raise ValueError(f"{cfg.kind} fixes a single eps")
    if len(cfg.points) < 3:
        raise ValueError("a scaling fit needs at least 3 sweep points")
    basis = builtin_basis(cfg.basis_id)
    rows = _run_jobs(_jobs(cfg, basis, cache), cache, workers)
    table = []
    for n, eps in cfg.points:
        ok = [r for r in rows if r.n == n and r.eps == eps and r.ok]
        x = control_value(cfg.kind, n, eps)
        mc = mean(r.compressed_bits for r in ok) if ok else float("nan")
        table.append({
            "x": x, "n": n, "eps": eps, "samples": len(ok),
            "mean_gates": mean(r.gates for r in ok) if ok else float("nan"),
            "mean_raw_bits": mean(r.raw_bits for r in ok) if ok else float("nan"),
            "mean_compressed_bits": mc,
            "ratio": mc / x,
        })
    xs = np.array([t["x"] for t in table])
    ys = np.array([t["mean_compressed_bits"] for t in table])
    lin = stats.linregress(xs, ys)
    ratios = ys / xs
    fit = {
        "slope": float(lin.slope),
        "intercept": float(lin.intercept),
        "pearson_r": float(lin.rvalue),
        "ratio_min": float(ratios.min()),
        "ratio_max": float(ratios.max()),
        "ratio_band": float(ratios.max() / ratios.min()),
    }
    if cfg.kind == EPS_SCALING:
        # gates ~ log^c(1/eps): slope of log(mean gates) against log(log2(1/eps))
        g = np.array([t["mean_gates"] for t in table])
        if np.all(g > 0):
            fit["sk_exponent"] = float(stats.linregress(np.log(xs), np.log(g)).slope)
    report = ScalingReport(cfg, rows, table, fit)
    _write(cfg, report.to_csv(), report.to_json(), rows_csv(rows))
    return report


def _write(cfg: ExperimentConfig, csv_text: str, json_text: str, samples: Optional[str] = None) -> None:
    """CSV at cfg.output, JSON next to it; scaling runs add a per-sample CSV."""
    if cfg.output is None:
        return
    out = Path(cfg.output)
    out.write_text(csv_text)
    out.with_suffix(".json").write_text(json_text)
    if samples is not None:
        out.with_suffix(".samples.csv").write_text(samples)
