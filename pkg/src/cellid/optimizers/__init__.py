"""Bounded optimizers over the 11-dimensional estimand box."""

from cellid.optimizers.common import (
    Bounds,
    OptResult,
    StopReason,
    make_bounds,
    sample_uniform,
)
from cellid.optimizers.ga import GaConfig, fit_ga
from cellid.optimizers.ls import LsConfig, fd_jacobian, fit_ls
from cellid.optimizers.pso import PsoConfig, fit_pso

__all__ = [
    "Bounds", "GaConfig", "LsConfig", "OptResult", "PsoConfig", "StopReason",
    "fd_jacobian", "fit_ga", "fit_ls", "fit_pso", "make_bounds", "sample_uniform",
]
