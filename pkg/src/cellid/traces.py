"""Current profiles and simulated/recorded voltage traces."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from cellid.errors import DatasetError


class Termination(str, enum.Enum):
    PROFILE_END = "profile_end"
    V_MIN = "v_min"
    V_MAX = "v_max"
    INVALID = "invalid"


@dataclass(frozen=True)
class CurrentProfile:
    """Uniformly sampled current demand in amperes (charge positive)."""

    name: str
    dt: float
    samples: np.ndarray
    c_rate: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("a current profile needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("current samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True, eq=False)
class Trace:
    """Time/current/voltage record; ``t[k] = (k + 1) * dt``."""

    profile_name: str
    dt: float
    t: np.ndarray
    current: np.ndarray
    voltage: np.ndarray
    termination: Termination = Termination.PROFILE_END
    c_rate: float | None = None

    def __post_init__(self):
        n = len(self.t)
        if len(self.current) != n or len(self.voltage) != n:
            raise DatasetError("t, current and voltage must have equal length")
        if not np.all(np.isfinite(self.voltage)):
            raise DatasetError("voltage must be finite on every row")

    def __len__(self):
        return len(self.t)

    def as_profile(self) -> CurrentProfile:
        return CurrentProfile(self.profile_name, self.dt, self.current, self.c_rate)

    def same_as(self, other: Trace, rtol: float = 0.0) -> bool:
        if (self.profile_name, self.dt, self.termination, self.c_rate) != (
            other.profile_name, other.dt, other.termination, other.c_rate
        ) or len(self) != len(other):
            return False
        return all(np.allclose(a, b, rtol=rtol, atol=0.0)
                   for a, b in ((self.t, other.t), (self.current, other.current),
                                (self.voltage, other.voltage)))


Dataset = Trace
