"""Bounded nonlinear least squares: reflective Levenberg-Marquardt.

Works on the unit cube. Each iteration builds a forward-difference Jacobian,
solves the column-scaled damped Gauss-Newton system through one SVD, and
folds any step that crosses a box face back into the box by reflection.
Steps are accepted only if they lower the cost, so the accepted-cost history
is non-increasing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from cellid.errors import OptimizerError
from cellid.optimizers.common import Bounds, OptResult, StopReason, UnitProblem, finish
from cellid.spm import EstimandVector

_LAMBDA_INIT = 1e-3
_LAMBDA_MIN = 1e-12
_LAMBDA_MAX = 1e12


@dataclass(frozen=True)
class LsConfig:
    max_iterations: int = 200
    cost_tolerance: float = 1e-8
    step_tolerance: float = 1e-8
    gradient_tolerance: float = 1e-8
    fd_rel_step: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("cost_tolerance", "step_tolerance", "gradient_tolerance", "fd_rel_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_dict(cls, data: dict) -> LsConfig:
        keys = ("max_iterations", "cost_tolerance", "step_tolerance", "gradient_tolerance", "fd_rel_step")
        return cls(**{k: data[k] for k in keys if k in data})


def reflect_into_unit(u: np.ndarray) -> np.ndarray:
    """Mirror coordinates at the faces of [0, 1] until they land inside."""
    u = np.mod(np.asarray(u, dtype=float), 2.0)
    return np.where(u > 1.0, 2.0 - u, u)


def fd_jacobian(fun, u: np.ndarray, r0: np.ndarray, rel_step: float) -> np.ndarray:
    """Forward differences on the unit cube, stepping backwards at the upper face.

    The step is ``rel_step`` in unit coordinates, i.e. a fixed fraction of
    each parameter's bound width.
    """
    jac = np.empty((r0.size, u.size))
    for i in range(u.size):
        h = rel_step if u[i] + rel_step <= 1.0 else -rel_step
        shifted = u.copy()
        shifted[i] += h
        jac[:, i] = (fun(shifted) - r0) / h
    return jac


def fit_ls(init: EstimandVector, bounds: Bounds, objective, cfg: LsConfig | None = None,
           seed: int | None = None) -> OptResult:
    cfg = cfg or LsConfig()
    started = time.perf_counter()
    u = bounds.to_unit(init.as_array())
    if not np.all((u > 0.0) & (u < 1.0)):
        raise OptimizerError("initial point must lie strictly inside the bounds")
    simulate = getattr(objective, "simulate", None)
    if simulate is not None and simulate(init) is None:
        raise OptimizerError(f"objective is penalized on every sample at the initial point: {init.violations()}")

    problem = UnitProblem(objective, bounds)
    r = problem.residuals(u)
    cost = float(np.dot(r, r))
    history = [cost]
    lam = _LAMBDA_INIT
    stop = StopReason.MAX_ITER
    iterations = 0

    while iterations < cfg.max_iterations:
        if cost == 0.0:
            stop = StopReason.TOLERANCE
            break
        iterations += 1
        jac = fd_jacobian(problem.residuals, u, r, cfg.fd_rel_step)
        grad = jac.T @ r
        if np.max(np.abs(grad)) < cfg.gradient_tolerance:
            stop = StopReason.TOLERANCE
            break

        # Marquardt column scaling; an all-zero column is left unscaled.
        scale = np.linalg.norm(jac, axis=0)
        scale[scale == 0.0] = 1.0
        left, sing, right_t = np.linalg.svd(jac / scale, full_matrices=False)
        proj = left.T @ r

        accepted = False
        while lam <= _LAMBDA_MAX:
            step = -(right_t.T @ (sing / (sing**2 + lam) * proj)) / scale
            u_new = reflect_into_unit(u + step)
            r_new = problem.residuals(u_new)
            cost_new = float(np.dot(r_new, r_new))
            if cost_new < cost:
                accepted = True
                lam = max(lam / 3.0, _LAMBDA_MIN)
                break
            lam *= 4.0
        if not accepted:
            stop = StopReason.TOLERANCE
            break

        moved = np.linalg.norm(u_new - u)
        decrease = cost - cost_new
        u, r, cost = u_new, r_new, cost_new
        history.append(cost)
        if decrease <= cfg.cost_tolerance * history[-2] or moved <= cfg.step_tolerance * (
            cfg.step_tolerance + np.linalg.norm(u)
        ):
            stop = StopReason.TOLERANCE
            break

    return finish("ls", problem, u, iterations, started, seed, stop, history)
