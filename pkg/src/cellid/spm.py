"""Discretized single particle model (SPM) of a lithium-ion cell.

Each electrode is a single spherical particle whose solid diffusion is
reduced to two states with the parabolic-profile approximation: the
volume-average concentration and the volume-average concentration flux.
The four states advance with an explicit affine update at a fixed sampling
period; surface concentrations, Butler-Volmer overpotentials and the terminal
voltage are algebraic outputs of the state and the applied current.

Sign convention: current > 0 charges the cell (lithiates the negative
particle), current < 0 discharges it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from cellid.errors import InvalidParameterError, InvalidStateError, StabilityError
from cellid.traces import CurrentProfile, Termination, Trace

FARADAY = 96485.33212
GAS_CONSTANT = 8.314462618

ESTIMAND_NAMES = (
    "c_n0",
    "c_p0",
    "r_eff_n",
    "r_eff_p",
    "eps_n",
    "eps_p",
    "D_n",
    "D_p",
    "R0",
    "c_max_n",
    "c_max_p",
)


@dataclass(frozen=True)
class PhysicalConstants:
    faraday: float = field(default=FARADAY, init=False)
    gas_constant: float = field(default=GAS_CONSTANT, init=False)


@dataclass(frozen=True)
class EstimandVector:
    """The 11 identifiable parameters, in canonical order.

    Construction does not validate: optimizers routinely build vectors that
    are physically inconsistent (e.g. ``c_n0 > c_max_n``). Use
    :meth:`violations` or :meth:`validate` where consistency matters.
    """

    c_n0: float
    c_p0: float
    r_eff_n: float
    r_eff_p: float
    eps_n: float
    eps_p: float
    D_n: float
    D_p: float
    R0: float
    c_max_n: float
    c_max_p: float

    @classmethod
    def from_array(cls, values: Sequence[float]) -> EstimandVector:
        values = np.asarray(values, dtype=float)
        if values.shape != (len(ESTIMAND_NAMES),):
            raise ValueError(f"expected {len(ESTIMAND_NAMES)} values, got shape {values.shape}")
        return cls(*(float(v) for v in values))

    @classmethod
    def from_dict(cls, data: dict) -> EstimandVector:
        missing = [n for n in ESTIMAND_NAMES if n not in data]
        if missing:
            raise ValueError(f"missing estimands: {missing}")
        return cls(**{n: float(data[n]) for n in ESTIMAND_NAMES})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in ESTIMAND_NAMES], dtype=float)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def violations(self) -> list[str]:
        out = [f"{n} must be finite and > 0" for n in ESTIMAND_NAMES
               if not (np.isfinite(getattr(self, n)) and getattr(self, n) > 0)]
        if self.eps_n >= 1:
            out.append("eps_n must be < 1")
        if self.eps_p >= 1:
            out.append("eps_p must be < 1")
        if self.c_n0 >= self.c_max_n:
            out.append("c_n0 must be < c_max_n")
        if self.c_p0 >= self.c_max_p:
            out.append("c_p0 must be < c_max_p")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise InvalidParameterError("; ".join(problems))


@dataclass(frozen=True)
class FixedCellConfig:
    """Quantities grouped out of the estimation, plus operating limits."""

    R_s_n: float
    R_s_p: float
    a_n: float
    a_p: float
    L_n: float
    L_p: float
    c_e: float
    temperature: float
    nominal_capacity: float
    v_min: float = 2.5
    v_max: float = 4.3

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("v_min", "v_max"):
                continue
            value = getattr(self, f.name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{f.name} must be finite and > 0, got {value!r}")
        if not self.v_min < self.v_max:
            raise InvalidParameterError(f"v_min ({self.v_min}) must be below v_max ({self.v_max})")

    @classmethod
    def from_dict(cls, data: dict) -> FixedCellConfig:
        return cls(**{f.name: float(data[f.name]) for f in fields(cls) if f.name in data})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class OcpCurve:
    """Open-circuit potential as a function of stoichiometry.

    Two representations are supported. ``kind="analytic"`` evaluates::

        offset + linear*x + sum(A*exp(k*x)) + sum(B*tanh(s*(x - c)))

    with ``exp_terms = ((A, k), ...)`` and ``tanh_terms = ((B, s, c), ...)``.
    ``kind="table"`` linearly interpolates ``(theta, potential)`` samples and
    holds the end values outside the sampled range.
    """

    kind: str
    offset: float = 0.0
    linear: float = 0.0
    exp_terms: tuple[tuple[float, float], ...] = ()
    tanh_terms: tuple[tuple[float, float, float], ...] = ()
    theta: tuple[float, ...] = ()
    potential: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.kind == "analytic":
            terms = [self.offset, self.linear, *np.ravel(self.exp_terms), *np.ravel(self.tanh_terms)]
            if not np.all(np.isfinite(terms)):
                raise InvalidParameterError("OCP coefficients must be finite")
            if any(len(t) != 2 for t in self.exp_terms) or any(len(t) != 3 for t in self.tanh_terms):
                raise InvalidParameterError("OCP exp terms take (amp, rate); tanh terms take (amp, slope, center)")
        elif self.kind == "table":
            th = np.asarray(self.theta, dtype=float)
            u = np.asarray(self.potential, dtype=float)
            if th.ndim != 1 or th.size < 2 or th.shape != u.shape:
                raise InvalidParameterError("OCP table needs >= 2 matching theta/potential samples")
            if np.any(np.diff(th) <= 0):
                raise InvalidParameterError("OCP table theta samples must be strictly increasing")
            if not (np.all(np.isfinite(th)) and np.all(np.isfinite(u))):
                raise InvalidParameterError("OCP table values must be finite")
        else:
            raise InvalidParameterError(f"unknown OCP kind {self.kind!r}")

    def __call__(self, theta):
        x = np.asarray(theta, dtype=float)
        if self.kind == "table":
            return np.interp(x, self.theta, self.potential)
        u = self.offset + self.linear * x
        for amp, rate in self.exp_terms:
            u = u + amp * np.exp(rate * x)
        for amp, slope, center in self.tanh_terms:
            u = u + amp * np.tanh(slope * (x - center))
        return u

    @classmethod
    def from_dict(cls, data: dict) -> OcpCurve:
        kind = data.get("kind")
        if kind == "table":
            return cls(kind="table", theta=tuple(data["theta"]), potential=tuple(data["potential"]),
                       label=data.get("label", ""))
        return cls(
            kind=kind,
            offset=float(data.get("offset", 0.0)),
            linear=float(data.get("linear", 0.0)),
            exp_terms=tuple(tuple(float(v) for v in t) for t in data.get("exp", ())),
            tanh_terms=tuple(tuple(float(v) for v in t) for t in data.get("tanh", ())),
            label=data.get("label", ""),
        )

    def as_dict(self) -> dict:
        if self.kind == "table":
            return {"kind": "table", "label": self.label, "theta": list(self.theta),
                    "potential": list(self.potential)}
        return {"kind": "analytic", "label": self.label, "offset": self.offset, "linear": self.linear,
                "exp": [list(t) for t in self.exp_terms], "tanh": [list(t) for t in self.tanh_terms]}


@dataclass(frozen=True)
class CellParameters:
    estimands: EstimandVector
    fixed: FixedCellConfig
    ocp_n: OcpCurve
    ocp_p: OcpCurve
    constants: PhysicalConstants = PhysicalConstants()

    def with_estimands(self, estimands: EstimandVector) -> CellParameters:
        return replace(self, estimands=estimands)

    # Electrode active-material volumes a_i*L_i*eps_i [m^3].
    @property
    def active_volume_n(self) -> float:
        return self.fixed.a_n * self.fixed.L_n * self.estimands.eps_n

    @property
    def active_volume_p(self) -> float:
        return self.fixed.a_p * self.fixed.L_p * self.estimands.eps_p

    @property
    def area_n(self) -> float:
        """Total reacting surface S_n = 3*a_n*L_n*eps_n/R_s_n [m^2]."""
        return 3.0 * self.active_volume_n / self.fixed.R_s_n

    @property
    def area_p(self) -> float:
        return 3.0 * self.active_volume_p / self.fixed.R_s_p


@dataclass(frozen=True)
class SimState:
    cbar_n: float
    cbar_p: float
    cfbar_n: float
    cfbar_p: float

    def check(self, params: CellParameters) -> None:
        est = params.estimands
        if not 0.0 <= self.cbar_n <= est.c_max_n:
            raise InvalidStateError(f"cbar_n={self.cbar_n} outside [0, {est.c_max_n}]")
        if not 0.0 <= self.cbar_p <= est.c_max_p:
            raise InvalidStateError(f"cbar_p={self.cbar_p} outside [0, {est.c_max_p}]")


def decay_factors(params: CellParameters, dt: float) -> tuple[float, float]:
    """Per-step decay of the average flux states, ``1 - 30*D*dt/R_s^2``."""
    est, fx = params.estimands, params.fixed
    return (1.0 - 30.0 * est.D_n * dt / fx.R_s_n**2,
            1.0 - 30.0 * est.D_p * dt / fx.R_s_p**2)


def check_stability(params: CellParameters, dt: float) -> None:
    if not dt > 0:
        raise StabilityError(f"dt must be > 0, got {dt}")
    est, fx = params.estimands, params.fixed
    for name, d, r in (("negative", est.D_n, fx.R_s_n), ("positive", est.D_p, fx.R_s_p)):
        ratio = 30.0 * d * dt / r**2
        if not ratio < 1.0:
            raise StabilityError(f"dt={dt} s unstable for {name} electrode (30*D*dt/R_s^2 = {ratio:.3g})")


def init_state(params: CellParameters) -> SimState:
    params.estimands.validate()
    return SimState(params.estimands.c_n0, params.estimands.c_p0, 0.0, 0.0)


def step_state(state: SimState, current: float, dt: float, params: CellParameters) -> SimState:
    check_stability(params, dt)
    fx, F = params.fixed, params.constants.faraday
    vn, vp = params.active_volume_n, params.active_volume_p
    kn, kp = decay_factors(params, dt)
    return SimState(
        cbar_n=state.cbar_n + dt * current / (F * vn),
        cbar_p=state.cbar_p - dt * current / (F * vp),
        cfbar_n=kn * state.cfbar_n + 15.0 * dt * current / (2.0 * F * fx.R_s_n * vn),
        cfbar_p=kp * state.cfbar_p - 15.0 * dt * current / (2.0 * F * fx.R_s_p * vp),
    )


def _feedthrough(params: CellParameters) -> tuple[float, float]:
    # Direct current-to-surface-concentration gains of the output equation.
    est, fx, F = params.estimands, params.fixed, params.constants.faraday
    gn = fx.R_s_n / (35.0 * est.D_n) * fx.R_s_n / (3.0 * F * params.active_volume_n)
    gp = fx.R_s_p / (35.0 * est.D_p) * fx.R_s_p / (3.0 * F * params.active_volume_p)
    return gn, gp


def surface_concentrations(state: SimState, current: float, params: CellParameters) -> tuple[float, float]:
    fx = params.fixed
    gn, gp = _feedthrough(params)
    c_ss_n = state.cbar_n + 8.0 * fx.R_s_n / 35.0 * state.cfbar_n + gn * current
    c_ss_p = state.cbar_p + 8.0 * fx.R_s_p / 35.0 * state.cfbar_p - gp * current
    return c_ss_n, c_ss_p


def exchange_current(c_ss: float, c_max: float, c_e: float, r_eff: float) -> float:
    if not 0.0 <= c_ss <= c_max:
        raise InvalidStateError(f"surface concentration {c_ss} outside [0, {c_max}]")
    return r_eff * np.sqrt(c_e * c_ss * (c_max - c_ss))


def overpotential(current: float, j0: float, area: float, temperature: float) -> float:
    """Butler-Volmer overpotential in inverse-sinh form.

    ``current`` is the electrode-resolved driving current: pass ``-I`` for
    the negative electrode and ``+I`` for the positive one.
    """
    if not j0 > 0:
        raise InvalidStateError(f"exchange current density must be > 0, got {j0}")
    if not area > 0:
        raise InvalidParameterError(f"reacting area must be > 0, got {area}")
    return 2.0 * GAS_CONSTANT * temperature / FARADAY * np.arcsinh(current / (2.0 * area * j0))


def cell_voltage(state: SimState, current: float, params: CellParameters) -> float:
    est, fx = params.estimands, params.fixed
    c_ss_n, c_ss_p = surface_concentrations(state, current, params)
    theta_n = c_ss_n / est.c_max_n
    theta_p = c_ss_p / est.c_max_p
    if not (0.0 < theta_n < 1.0 and 0.0 < theta_p < 1.0):
        raise InvalidStateError(f"surface stoichiometry out of (0, 1): theta_n={theta_n:.6g}, theta_p={theta_p:.6g}")
    j0_n = exchange_current(c_ss_n, est.c_max_n, fx.c_e, est.r_eff_n)
    j0_p = exchange_current(c_ss_p, est.c_max_p, fx.c_e, est.r_eff_p)
    eta_n = overpotential(-current, j0_n, params.area_n, fx.temperature)
    eta_p = overpotential(current, j0_p, params.area_p, fx.temperature)
    return float(params.ocp_p(theta_p) - params.ocp_n(theta_n) + eta_p - eta_n + current * est.R0)


def voltage_path(params: CellParameters, current: np.ndarray, dt: float) -> np.ndarray:
    """Terminal voltage for every sample of ``current``, vectorized.

    Sample ``k`` applies ``current[k]`` for one period and reports the voltage
    at the end of that period. The returned array stops before the first
    sample whose surface stoichiometry leaves (0, 1), so it may be shorter
    than ``current``. Voltage cutoffs are not applied here.
    """
    check_stability(params, dt)
    est, fx = params.estimands, params.fixed
    F = params.constants.faraday
    current = np.asarray(current, dtype=float)
    vn, vp = params.active_volume_n, params.active_volume_p
    kn, kp = decay_factors(params, dt)
    gn, gp = _feedthrough(params)

    charge = np.cumsum(current) * dt
    cbar_n = est.c_n0 + charge / (F * vn)
    cbar_p = est.c_p0 - charge / (F * vp)
    cf_n = lfilter([15.0 * dt / (2.0 * F * fx.R_s_n * vn)], [1.0, -kn], current)
    cf_p = lfilter([-15.0 * dt / (2.0 * F * fx.R_s_p * vp)], [1.0, -kp], current)
    theta_n = (cbar_n + 8.0 * fx.R_s_n / 35.0 * cf_n + gn * current) / est.c_max_n
    theta_p = (cbar_p + 8.0 * fx.R_s_p / 35.0 * cf_p - gp * current) / est.c_max_p

    bad = ~((theta_n > 0.0) & (theta_n < 1.0) & (theta_p > 0.0) & (theta_p < 1.0))
    n = int(np.argmax(bad)) if bad.any() else current.size
    current, theta_n, theta_p = current[:n], theta_n[:n], theta_p[:n]

    # j0 = r_eff*c_max*sqrt(c_e*theta*(1-theta)), the exchange-current law in stoichiometry form
    j0_n = est.r_eff_n * est.c_max_n * np.sqrt(fx.c_e * theta_n * (1.0 - theta_n))
    j0_p = est.r_eff_p * est.c_max_p * np.sqrt(fx.c_e * theta_p * (1.0 - theta_p))
    thermal = 2.0 * GAS_CONSTANT * fx.temperature / FARADAY
    eta_n = thermal * np.arcsinh(-current / (2.0 * params.area_n * j0_n))
    eta_p = thermal * np.arcsinh(current / (2.0 * params.area_p * j0_p))
    return params.ocp_p(theta_p) - params.ocp_n(theta_n) + eta_p - eta_n + current * est.R0


def simulate_profile(params: CellParameters, profile: CurrentProfile, apply_cutoffs: bool = True) -> Trace:
    """Run ``profile`` through the model from the initial rest state.

    Stops before the first sample that leaves the voltage window (when
    ``apply_cutoffs``) or the valid stoichiometry range; the returned trace
    holds only the samples before that point.
    """
    init_state(params)
    current = np.asarray(profile.samples, dtype=float)
    voltage = voltage_path(params, current, profile.dt)
    n = voltage.size
    termination = Termination.PROFILE_END if n == current.size else Termination.INVALID
    if apply_cutoffs:
        fx = params.fixed
        low, high = voltage < fx.v_min, voltage > fx.v_max
        out = low | high
        if out.any():
            n = int(np.argmax(out))
            termination = Termination.V_MIN if low[n] else Termination.V_MAX
    t = profile.dt * np.arange(1, n + 1, dtype=float)
    return Trace(profile_name=profile.name, dt=profile.dt, t=t, current=current[:n].copy(),
                 voltage=voltage[:n].copy(), termination=termination, c_rate=profile.c_rate)
