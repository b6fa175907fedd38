"""Voltage residuals and RMSE of a trial parameter vector against recorded traces.

The objective is total: any trial that cannot be simulated over the whole
trace (physically inconsistent estimands, a stoichiometry excursion part-way
through) still yields a finite outcome, with every sample that could not be
compared charged ``penalty_voltage``. Voltage cutoffs are *not* applied when
simulating a trial: the recorded trace already fixes the comparison window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from cellid.errors import CellIdError
from cellid.spm import CellParameters, EstimandVector, voltage_path
from cellid.traces import Trace

DEFAULT_PENALTY_VOLTAGE = 10.0


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    dataset: Trace
    cell: CellParameters
    penalty_voltage: float = DEFAULT_PENALTY_VOLTAGE

    def __post_init__(self):
        if len(self.dataset) == 0:
            raise ValueError("objective dataset is empty")
        if not self.penalty_voltage > 1.0:
            raise ValueError(f"penalty_voltage must exceed any plausible voltage error, got {self.penalty_voltage}")

    @property
    def fixed(self):
        return self.cell.fixed

    def simulate(self, trial: EstimandVector) -> np.ndarray | None:
        """Trial voltage over the dataset's current; ``None`` if it cannot start."""
        if trial.violations():
            return None
        try:
            return voltage_path(self.cell.with_estimands(trial), self.dataset.current, self.dataset.dt)
        except CellIdError:
            return None

    def residual_vector(self, x) -> np.ndarray:
        """Residuals for a raw 11-vector in canonical order (optimizer fast path)."""
        trial = x if isinstance(x, EstimandVector) else EstimandVector.from_array(x)
        data = self.dataset.voltage
        res = np.full(data.size, self.penalty_voltage)
        v = self.simulate(trial)
        if v is not None:
            res[: v.size] = v - data[: v.size]
        return res

    __call__ = residual_vector


@dataclass(frozen=True, eq=False)
class EvalOutcome:
    rmse_mv: float
    residuals: np.ndarray
    valid: bool
    n_compared: int

    @property
    def cost(self) -> float:
        return float(np.dot(self.residuals, self.residuals))


def rmse_mv(res: np.ndarray) -> float:
    return 1000.0 * float(np.sqrt(np.mean(np.square(res))))


def residuals(trial: EstimandVector, spec: ObjectiveSpec) -> EvalOutcome:
    data = spec.dataset.voltage
    res = np.full(data.size, spec.penalty_voltage)
    v = spec.simulate(trial)
    n = 0 if v is None else v.size
    if n:
        res[:n] = v - data[:n]
    return EvalOutcome(rmse_mv(res), res, n == data.size, n)


def pooled_rmse_mv(outcomes: Iterable[EvalOutcome], pooling: str = "pooled") -> float:
    """Combine per-trace outcomes.

    ``"pooled"`` weights every sample equally across traces; ``"per_trace"``
    averages the per-trace RMSE values.
    """
    outcomes = list(outcomes)
    if pooling == "pooled":
        total = sum(float(np.dot(o.residuals, o.residuals)) for o in outcomes)
        count = sum(o.residuals.size for o in outcomes)
        return 1000.0 * float(np.sqrt(total / count))
    if pooling == "per_trace":
        return float(np.mean([o.rmse_mv for o in outcomes]))
    raise ValueError(f"unknown pooling rule {pooling!r}")


def rmse_over_suite(trial: EstimandVector, suite, cell: CellParameters,
                    penalty_voltage: float = DEFAULT_PENALTY_VOLTAGE,
                    pooling: str = "pooled") -> tuple[float, float]:
    """(fitting RMSE, validation RMSE) in millivolts for ``trial`` on ``suite``."""
    fit = residuals(trial, ObjectiveSpec(suite.fitting, cell, penalty_voltage))
    val = [residuals(trial, ObjectiveSpec(t, cell, penalty_voltage)) for t in suite.validation]
    return fit.rmse_mv, pooled_rmse_mv(val, pooling)
