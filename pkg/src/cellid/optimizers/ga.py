"""Real-coded genetic algorithm on the unit cube.

Each generation keeps the best ``elitism`` individuals, picks
``parents_mating`` parents by linear rank selection (with replacement), and fills the rest of
the population with single-point crossover children of consecutive parent
pairs. Every gene of a child is then reset to a fresh uniform value with
probability ``mutation_rate``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from cellid.optimizers.common import Bounds, OptResult, StopReason, UnitProblem, finish
from cellid.spm import ESTIMAND_NAMES


@dataclass(frozen=True)
class GaConfig:
    generations: int = 300
    parents_mating: int = 4
    population: int = 50
    genes: int = len(ESTIMAND_NAMES)
    mutation_rate: float = 0.1
    elitism: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.genes != len(ESTIMAND_NAMES):
            raise ValueError(f"genes must be {len(ESTIMAND_NAMES)}")
        if not 2 <= self.parents_mating <= self.population:
            raise ValueError("need 2 <= parents_mating <= population")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")

    @classmethod
    def from_dict(cls, data: dict, seed: int | None = None) -> GaConfig:
        keys = ("generations", "parents_mating", "population", "genes", "mutation_rate", "elitism")
        return cls(**{k: data[k] for k in keys if k in data}, seed=seed)


def rank_select(fitness_order: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` indices independently with probability proportional to rank.

    ``fitness_order`` lists individuals best first; the best gets weight N,
    the worst weight 1. Draws are with replacement, so a strong individual
    can fill several parent slots.
    """
    n = fitness_order.size
    weights = np.arange(n, 0, -1, dtype=float)
    return rng.choice(fitness_order, size=count, replace=True, p=weights / weights.sum())


def fit_ga(bounds: Bounds, objective, cfg: GaConfig | None = None,
           initial_population: np.ndarray | None = None) -> OptResult:
    """Minimize the sum of squared residuals with a genetic algorithm.

    ``initial_population`` optionally supplies the starting individuals in
    physical units (shape ``(population, 11)``).
    """
    cfg = cfg or GaConfig()
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    problem = UnitProblem(objective, bounds)
    n, dim = cfg.population, cfg.genes

    if initial_population is None:
        pop = rng.random((n, dim))
    else:
        pop = np.clip(bounds.to_unit(initial_population), 0.0, 1.0)
        if pop.shape != (n, dim):
            raise ValueError(f"initial population must have shape {(n, dim)}")
    cost = np.array([problem.cost(ind) for ind in pop])
    history = [float(cost.min())]
    n_children = n - cfg.elitism

    for _ in range(cfg.generations):
        order = np.argsort(cost, kind="stable")
        elite = order[: cfg.elitism]
        parents = pop[rank_select(order, cfg.parents_mating, rng)]

        cut = rng.integers(1, dim, size=n_children)
        first = parents[np.arange(n_children) % cfg.parents_mating]
        second = parents[(np.arange(n_children) + 1) % cfg.parents_mating]
        children = np.where(np.arange(dim) < cut[:, None], first, second)
        mutate = rng.random((n_children, dim)) < cfg.mutation_rate
        children[mutate] = rng.random(int(mutate.sum()))

        pop = np.vstack([pop[elite], children])
        cost = np.concatenate([cost[elite], [problem.cost(c) for c in children]])
        history.append(float(cost.min()))

    best = pop[int(np.argmin(cost))]
    return finish("ga", problem, best, cfg.generations, started, cfg.seed, StopReason.MAX_ITER, history)
