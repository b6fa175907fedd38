"""Current profiles, the fitting/validation dataset suite, and trace files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cellid.config import default_dst_template
from cellid.errors import DatasetError, InvalidStateError
from cellid.spm import CellParameters, simulate_profile
from cellid.traces import CurrentProfile, Dataset, Termination, Trace

__all__ = [
    "CurrentProfile", "Dataset", "DatasetSuite", "ProtocolConfig", "Trace", "build_suite",
    "cc_name", "make_cc_discharge", "make_dst", "read_suite", "read_trace", "write_suite", "write_trace",
]

CSV_HEADER = "t_s,current_a,voltage_v"
CSV_FORMAT = "%.12e"


@dataclass(frozen=True)
class ProtocolConfig:
    dt: float = 1.0
    fitting_c_rate: float = 0.5
    c_rates: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    cc_window_factor: float = 1.5
    dst_repetitions: int = 100

    @classmethod
    def from_dict(cls, data: dict) -> ProtocolConfig:
        return cls(
            dt=float(data["dt_s"]),
            fitting_c_rate=float(data["fitting_c_rate"]),
            c_rates=tuple(float(r) for r in data["c_rates"]),
            cc_window_factor=float(data["cc_window_factor"]),
            dst_repetitions=int(data["dst_repetitions"]),
        )


@dataclass(frozen=True, eq=False)
class DatasetSuite:
    fitting: Trace
    validation: list[Trace] = field(default_factory=list)

    @property
    def traces(self) -> list[Trace]:
        return [self.fitting, *self.validation]


def cc_name(c_rate: float) -> str:
    return f"cc_{c_rate:g}C"


def make_cc_discharge(c_rate: float, params: CellParameters, max_hours: float, dt: float = 1.0) -> CurrentProfile:
    """Constant-current discharge at ``c_rate`` lasting ``max_hours``.

    The window is meant to be over-long; the simulator cuts it at ``v_min``.
    """
    if not c_rate > 0:
        raise ValueError(f"c_rate must be positive, got {c_rate}")
    if not max_hours > 0:
        raise ValueError(f"max_hours must be positive, got {max_hours}")
    n = int(round(max_hours * 3600.0 / dt))
    current = -c_rate * params.fixed.nominal_capacity
    return CurrentProfile(cc_name(c_rate), dt, np.full(n, current), c_rate=c_rate)


def dst_cycle(params: CellParameters, template: dict | None = None, dt: float = 1.0) -> np.ndarray:
    """One DST cycle sampled at ``dt``; fractions scale the 1C current."""
    template = template or default_dst_template()
    one_c = params.fixed.nominal_capacity
    parts = []
    for step in template["steps"]:
        count = step["duration_s"] / dt
        if abs(count - round(count)) > 1e-9 or round(count) < 1:
            raise ValueError(f"DST step of {step['duration_s']} s is not a whole number of {dt} s samples")
        parts.append(np.full(int(round(count)), step["fraction"] * one_c))
    return np.concatenate(parts)


def make_dst(params: CellParameters, repetitions: int, template: dict | None = None, dt: float = 1.0) -> CurrentProfile:
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    return CurrentProfile("dst", dt, np.tile(dst_cycle(params, template, dt), repetitions))


def build_suite(params: CellParameters, protocol: ProtocolConfig | None = None,
                dst_template: dict | None = None) -> DatasetSuite:
    """Simulate every protocol profile; the fitting-rate trace is held out for fitting."""
    protocol = protocol or ProtocolConfig()
    if protocol.fitting_c_rate not in protocol.c_rates:
        raise ValueError(f"fitting rate {protocol.fitting_c_rate} is not among the protocol C-rates")
    profiles = [make_cc_discharge(r, params, protocol.cc_window_factor / r, protocol.dt)
                for r in sorted(protocol.c_rates)]
    profiles.append(make_dst(params, protocol.dst_repetitions, dst_template, protocol.dt))

    fitting, validation = None, []
    for profile in profiles:
        trace = simulate_profile(params, profile)
        if trace.termination is Termination.INVALID or len(trace) == 0:
            raise InvalidStateError(f"profile {profile.name} left the valid state range after {len(trace)} samples")
        if profile.c_rate == protocol.fitting_c_rate:
            fitting = trace
        else:
            validation.append(trace)
    return DatasetSuite(fitting, validation)


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_trace(trace: Trace, path: str | Path) -> None:
    path = Path(path)
    if len(trace) == 0:
        raise DatasetError(f"{path}: empty dataset")
    rows = np.column_stack([trace.t, trace.current, trace.voltage])
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        np.savetxt(fh, rows, fmt=CSV_FORMAT, delimiter=",")
    meta = {"profile_name": trace.profile_name, "dt_s": trace.dt, "termination": trace.termination.value}
    if trace.c_rate is not None:
        meta["c_rate"] = trace.c_rate
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_trace(path: str | Path) -> Trace:
    path = Path(path)
    try:
        meta = json.loads(_sidecar(path).read_text())
        dt = float(meta["dt_s"])
        termination = Termination(meta["termination"])
        name = str(meta["profile_name"])
    except FileNotFoundError:
        raise DatasetError(f"{_sidecar(path)}: metadata sidecar not found") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise DatasetError(f"{_sidecar(path)}: bad metadata ({exc})") from None

    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise DatasetError(f"{path}: malformed header {header!r}, expected {CSV_HEADER!r}")
        body = [line for line in fh.read().splitlines() if line.strip()]
    if not body:
        raise DatasetError(f"{path}: empty dataset")
    try:
        rows = np.array([[float(v) for v in line.split(",")] for line in body], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"{path}: unparseable number ({exc})") from None
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise DatasetError(f"{path}: expected 3 columns per row")
    if not np.all(np.isfinite(rows)):
        raise DatasetError(f"{path}: non-finite value")
    t = rows[:, 0]
    if len(t) > 1 and not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-9 * dt):
        raise DatasetError(f"{path}: non-uniform timestamps (expected spacing {dt} s)")
    c_rate = meta.get("c_rate")
    return Trace(name, dt, t, rows[:, 1], rows[:, 2], termination,
                 None if c_rate is None else float(c_rate))


def write_suite(suite: DatasetSuite, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for role, trace in [("fitting", suite.fitting)] + [("validation", v) for v in suite.validation]:
        fname = f"{trace.profile_name}.csv"
        write_trace(trace, out_dir / fname)
        entries.append({"name": trace.profile_name, "file": fname, "role": role, "c_rate": trace.c_rate,
                        "samples": len(trace), "termination": trace.termination.value})
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"version": 1, "traces": entries}, indent=2) + "\n")
    return manifest


def read_suite(directory: str | Path) -> DatasetSuite:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text())
        entries = manifest["traces"]
    except FileNotFoundError:
        raise DatasetError(f"{directory}: no manifest.json (generate the suite first)") from None
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"{directory / 'manifest.json'}: malformed ({exc})") from None
    fitting = [e for e in entries if e.get("role") == "fitting"]
    if len(fitting) != 1:
        raise DatasetError(f"{directory / 'manifest.json'}: expected exactly one fitting trace, found {len(fitting)}")
    validation = [read_trace(directory / e["file"]) for e in entries if e.get("role") == "validation"]
    return DatasetSuite(read_trace(directory / fitting[0]["file"]), validation)

