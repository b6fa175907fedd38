"""Global-best particle swarm optimization on the unit cube."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from cellid.optimizers.common import Bounds, OptResult, StopReason, UnitProblem, finish


@dataclass(frozen=True)
class PsoConfig:
    """Swarm settings. Inertia and acceleration defaults are the usual
    constriction-coefficient values (chi = 0.72984, chi * 2.05 = 1.49618)."""

    swarm_size: int = 40
    max_iterations: int = 100
    min_func_tolerance: float = 1e-8
    inertia: float = 0.72984
    cognitive: float = 1.49618
    social: float = 1.49618
    seed: int | None = None

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.inertia > 0 and self.cognitive > 0 and self.social > 0 and self.min_func_tolerance > 0):
            raise ValueError("PSO coefficients and tolerance must be > 0")

    @classmethod
    def from_dict(cls, data: dict, seed: int | None = None) -> PsoConfig:
        keys = ("swarm_size", "max_iterations", "min_func_tolerance", "inertia", "cognitive", "social")
        return cls(**{k: data[k] for k in keys if k in data}, seed=seed)


def fit_pso(bounds: Bounds, objective, cfg: PsoConfig | None = None) -> OptResult:
    """Minimize the sum of squared residuals with a particle swarm.

    Velocities are clamped to one box width per iteration and positions to
    the box, so every evaluation happens inside the bounds. A velocity
    component that would carry a particle through a face is zeroed;
    otherwise particles keep pushing against the wall and the swarm stalls
    there. The search ends
    after ``max_iterations`` swarm updates, or as soon as an improvement of
    the swarm best is smaller than ``min_func_tolerance``.
    """
    cfg = cfg or PsoConfig()
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    problem = UnitProblem(objective, bounds)
    n, dim = cfg.swarm_size, bounds.lower.size

    x = rng.random((n, dim))
    v = rng.uniform(-1.0, 1.0, (n, dim))
    f = np.array([problem.cost(p) for p in x])
    p_best, f_best = x.copy(), f.copy()
    g = int(np.argmin(f_best))
    g_best, fg = p_best[g].copy(), f_best[g]
    history = [fg]

    stop = StopReason.MAX_ITER
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        r_p = rng.random((n, dim))
        r_g = rng.random((n, dim))
        v = cfg.inertia * v + cfg.cognitive * r_p * (p_best - x) + cfg.social * r_g * (g_best - x)
        np.clip(v, -1.0, 1.0, out=v)
        x = x + v
        # absorbing walls: a particle leaving the box stops on the face
        hit = (x < 0.0) | (x > 1.0)
        v[hit] = 0.0
        np.clip(x, 0.0, 1.0, out=x)
        f = np.array([problem.cost(p) for p in x])

        better = f < f_best
        p_best[better] = x[better]
        f_best[better] = f[better]
        i_min = int(np.argmin(f_best))
        if f_best[i_min] < fg:
            gain = fg - f_best[i_min]
            g_best, fg = p_best[i_min].copy(), f_best[i_min]
            history.append(fg)
            if gain < cfg.min_func_tolerance:
                stop = StopReason.TOLERANCE
                break

    return finish("pso", problem, g_best, iterations, started, cfg.seed, stop, history)
