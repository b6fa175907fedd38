"""Shared pieces of the three optimizers: the bound box, unit-cube mapping,
objective wrapping and the result record."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from cellid.spm import ESTIMAND_NAMES, EstimandVector

ResidualFn = Callable[[np.ndarray], np.ndarray]


class StopReason(str, enum.Enum):
    MAX_ITER = "max_iter"
    TOLERANCE = "tolerance"


@dataclass(frozen=True, eq=False)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != (len(ESTIMAND_NAMES),) or upper.shape != lower.shape:
            raise ValueError(f"bounds must have {len(ESTIMAND_NAMES)} components")
        if not (np.all(lower > 0) and np.all(upper > lower)):
            raise ValueError("bounds require 0 < lower < upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def from_unit(self, u) -> np.ndarray:
        # clip guards the last ulp so mapped points never leave the box
        return np.clip(self.lower + np.asarray(u, dtype=float) * self.width, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def make_bounds(reference: EstimandVector, lo_factor: float = 0.5, hi_factor: float = 1.5) -> Bounds:
    if not 0 < lo_factor < hi_factor:
        raise ValueError(f"need 0 < lo_factor < hi_factor, got ({lo_factor}, {hi_factor})")
    ref = reference.as_array()
    if np.any(ref <= 0):
        bad = [n for n, v in zip(ESTIMAND_NAMES, ref) if v <= 0]
        raise ValueError(f"reference components must be positive: {bad}")
    return Bounds(lo_factor * ref, hi_factor * ref)


def sample_uniform(bounds: Bounds, n: int, seed) -> list[EstimandVector]:
    """``n`` componentwise-uniform draws in the box.

    Draws are generated row by row, so the first ``k`` vectors for a seed do
    not depend on ``n``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = np.random.default_rng(seed).random((n, len(ESTIMAND_NAMES)))
    return [EstimandVector.from_array(bounds.from_unit(row)) for row in u]


def residual_function(objective) -> ResidualFn:
    """Accept an ``ObjectiveSpec`` or any callable mapping an 11-vector to residuals."""
    fn = getattr(objective, "residual_vector", objective)
    if not callable(fn):
        raise TypeError("objective must be an ObjectiveSpec or a callable returning residuals")
    return fn


class UnitProblem:
    """Sum-of-squares objective on the unit cube, with an evaluation counter."""

    def __init__(self, objective, bounds: Bounds):
        self.fn = residual_function(objective)
        self.bounds = bounds
        self.evaluations = 0

    def residuals(self, u: np.ndarray) -> np.ndarray:
        x = self.bounds.from_unit(u)
        self.evaluations += 1
        return np.asarray(self.fn(x), dtype=float)

    def cost(self, u: np.ndarray) -> float:
        r = self.residuals(u)
        return float(np.dot(r, r))


@dataclass(frozen=True, eq=False)
class OptResult:
    method: str
    best: EstimandVector
    best_cost: float
    evaluations: int
    iterations: int
    wall_time: float
    seed: int | None
    converged_by: StopReason
    history: tuple[float, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "best": self.best.as_dict(),
            "best_cost": self.best_cost,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time,
            "seed": self.seed,
            "converged_by": self.converged_by.value,
        }


def finish(method: str, problem: UnitProblem, u_best: np.ndarray, iterations: int, started: float,
           seed, stop: StopReason, history=()) -> OptResult:
    """Build the result, re-evaluating the objective at the returned point."""
    x_best = problem.bounds.from_unit(u_best)
    r = np.asarray(problem.fn(x_best), dtype=float)
    problem.evaluations += 1
    return OptResult(
        method=method,
        best=EstimandVector.from_array(x_best),
        best_cost=float(np.dot(r, r)),
        evaluations=problem.evaluations,
        iterations=iterations,
        wall_time=time.perf_counter() - started,
        seed=seed,
        converged_by=stop,
        history=tuple(history),
    )
