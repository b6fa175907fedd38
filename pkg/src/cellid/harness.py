"""Repeated optimizer runs, RMSE/runtime statistics, histograms and report files."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from cellid.errors import CellIdError
from cellid.objective import DEFAULT_PENALTY_VOLTAGE, ObjectiveSpec, rmse_over_suite
from cellid.optimizers import (
    GaConfig,
    LsConfig,
    PsoConfig,
    fit_ga,
    fit_ls,
    fit_pso,
    make_bounds,
    sample_uniform,
)
from cellid.spm import ESTIMAND_NAMES, CellParameters, EstimandVector

METHODS = ("ls", "pso", "ga")
DEFAULT_REPETITIONS = {"ls": 100, "pso": 20, "ga": 20}
DEFAULT_BIN_MV = {"ls": 10.0, "pso": 1.0, "ga": 1.0}
RUNS_HEADER = ["run", "seed", "wall_time_s", "fitting_rmse_mv", "validation_rmse_mv", *ESTIMAND_NAMES]


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    method: str
    repetitions: int | None = None
    base_seed: int = 0
    config: LsConfig | PsoConfig | GaConfig | None = None
    lo_factor: float = 0.5
    hi_factor: float = 1.5
    penalty_voltage: float = DEFAULT_PENALTY_VOLTAGE
    pooling: str = "pooled"
    hist_bin_mv: float | None = None
    workers: int = 1
    # LS only: explicit starting points; sampled uniformly from the box with base_seed when None.
    inits: list[EstimandVector] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.repetitions is None:
            object.__setattr__(self, "repetitions", DEFAULT_REPETITIONS[self.method])
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.hist_bin_mv is None:
            object.__setattr__(self, "hist_bin_mv", DEFAULT_BIN_MV[self.method])
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.inits is not None and len(self.inits) < self.repetitions:
            raise ValueError(f"need {self.repetitions} initial vectors, got {len(self.inits)}")


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    wall_time: float
    fitting_rmse_mv: float
    validation_rmse_mv: float
    best: EstimandVector
    best_cost: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class Histogram:
    bin_width_mv: float
    bins: tuple[tuple[float, int], ...] = ()

    @property
    def total(self) -> int:
        return sum(c for _, c in self.bins)


def make_histogram(values, bin_width_mv: float) -> Histogram:
    """Left-closed bins ``[k*w, (k+1)*w)`` spanning the smallest to largest value."""
    if not bin_width_mv > 0:
        raise ValueError(f"bin width must be > 0, got {bin_width_mv}")
    values = [float(v) for v in values]
    if not values:
        return Histogram(bin_width_mv)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("histogram values must be finite")
    counts: dict[int, int] = {}
    for v in values:
        k = math.floor(v / bin_width_mv)
        # division can land one ulp short of an exact edge
        if (k + 1) * bin_width_mv <= v:
            k += 1
        counts[k] = counts.get(k, 0) + 1
    lo, hi = min(counts), max(counts)
    return Histogram(bin_width_mv, tuple((k * bin_width_mv, counts.get(k, 0)) for k in range(lo, hi + 1)))


def describe(values) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(np.mean(arr)),
        "sd": float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0,
        "min": float(np.min(arr)),
        "max": float(np.max(arr)),
    }


@dataclass(frozen=True, eq=False)
class BenchReport:
    method: str
    records: list[RunRecord]
    hist_bin_mv: float
    pooling: str = "pooled"
    aggregates: dict = field(init=False)
    hist_fitting: Histogram = field(init=False)
    hist_validation: Histogram = field(init=False)

    def __post_init__(self):
        recs = sorted(self.records, key=lambda r: r.run)
        object.__setattr__(self, "records", recs)
        object.__setattr__(self, "aggregates", {
            "runtime_s": describe([r.wall_time for r in recs]),
            "fitting_rmse_mv": describe([r.fitting_rmse_mv for r in recs]),
            "validation_rmse_mv": describe([r.validation_rmse_mv for r in recs]),
        })
        object.__setattr__(self, "hist_fitting", make_histogram([r.fitting_rmse_mv for r in recs], self.hist_bin_mv))
        object.__setattr__(self, "hist_validation",
                           make_histogram([r.validation_rmse_mv for r in recs], self.hist_bin_mv))

    @property
    def repetitions(self) -> int:
        return len(self.records)

    def summary(self) -> dict:
        return {
            "method": self.method,
            "repetitions": self.repetitions,
            **self.aggregates,
            "validation_pooling": self.pooling,
            "hist_bin_mv": self.hist_bin_mv,
            "failed_runs": [{"run": r.run, "error": r.error} for r in self.records if r.error],
        }


def _optimize(plan: ExperimentPlan, run: int, suite, cell: CellParameters) -> RunRecord:
    bounds = make_bounds(cell.estimands, plan.lo_factor, plan.hi_factor)
    spec = ObjectiveSpec(suite.fitting, cell, plan.penalty_voltage)
    seed = plan.base_seed + run
    error = None
    started = time.perf_counter()
    if plan.method == "ls":
        init = plan.inits[run]
        try:
            result = fit_ls(init, bounds, spec, plan.config or LsConfig(), seed=seed)
            best, cost = result.best, result.best_cost
        except CellIdError as exc:
            best, cost, error = init, math.nan, str(exc)
    elif plan.method == "pso":
        result = fit_pso(bounds, spec, replace(plan.config or PsoConfig(), seed=seed))
        best, cost = result.best, result.best_cost
    else:
        result = fit_ga(bounds, spec, replace(plan.config or GaConfig(), seed=seed))
        best, cost = result.best, result.best_cost
    wall = time.perf_counter() - started
    fit_mv, val_mv = rmse_over_suite(best, suite, cell, plan.penalty_voltage, plan.pooling)
    return RunRecord(run, seed, wall, fit_mv, val_mv, best, cost, error)


def run_experiment(plan: ExperimentPlan, suite, cell: CellParameters) -> BenchReport:
    """Execute ``plan.repetitions`` independent runs; run ``k`` uses seed ``base_seed + k``."""
    if plan.method == "ls" and plan.inits is None:
        bounds = make_bounds(cell.estimands, plan.lo_factor, plan.hi_factor)
        plan = replace(plan, inits=sample_uniform(bounds, plan.repetitions, plan.base_seed))
    runs = range(plan.repetitions)
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            records = list(pool.map(_optimize, [plan] * len(runs), runs, [suite] * len(runs), [cell] * len(runs)))
    else:
        records = [_optimize(plan, k, suite, cell) for k in runs]
    return BenchReport(plan.method, records, plan.hist_bin_mv, plan.pooling)


def _write_histogram(hist: Histogram, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lower_edge_mv", "count"])
        writer.writerows([repr(edge), count] for edge, count in hist.bins)


def emit_report(report: BenchReport, dir_path) -> list[Path]:
    out = Path(dir_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        runs_path = out / "runs.csv"
        with open(runs_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RUNS_HEADER)
            for r in report.records:
                writer.writerow([r.run, r.seed, repr(r.wall_time), repr(r.fitting_rmse_mv),
                                 repr(r.validation_rmse_mv), *(repr(v) for v in r.best.as_array())])
        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(report.summary(), indent=2) + "\n")
        hist_fit, hist_val = out / "hist_fitting.csv", out / "hist_validation.csv"
        _write_histogram(report.hist_fitting, hist_fit)
        _write_histogram(report.hist_validation, hist_val)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return [runs_path, summary_path, hist_fit, hist_val]
