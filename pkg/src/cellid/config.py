"""Loading and validating the checked-in JSON configuration.

A configuration directory holds four files: ``cell.json`` (fixed geometry,
OCP curves and the reference estimands), ``protocol.json`` (dataset
generation), ``optimizers.json`` (bounds, objective and optimizer settings)
and ``dst_template.json``. The packaged defaults live in ``cellid/data``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from cellid.errors import CellIdError, ConfigError
from cellid.spm import ESTIMAND_NAMES, CellParameters, EstimandVector, FixedCellConfig, OcpCurve

CONFIG_ENV = "CELLID_CONFIG_DIR"
DEFAULT_CONFIG_DIR = Path(__file__).parent / "data"
CONFIG_FILES = ("cell.json", "protocol.json", "optimizers.json", "dst_template.json")

_pos = {"type": "number", "exclusiveMinimum": 0}
_num = {"type": "number"}
_count = {"type": "integer", "minimum": 1}

_OCP_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "analytic"},
                "offset": _num,
                "linear": _num,
                "exp": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
                "tanh": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
            },
        },
        {
            "required": ["theta", "potential"],
            "properties": {
                "kind": {"const": "table"},
                "theta": {"type": "array", "items": _num, "minItems": 2},
                "potential": {"type": "array", "items": _num, "minItems": 2},
            },
        },
    ],
}

CELL_SCHEMA = {
    "type": "object",
    "required": ["fixed", "reference", "ocp_n", "ocp_p"],
    "properties": {
        "fixed": {
            "type": "object",
            "required": ["R_s_n", "R_s_p", "a_n", "a_p", "L_n", "L_p", "c_e", "temperature", "nominal_capacity"],
            "properties": {
                **{k: _pos for k in ("R_s_n", "R_s_p", "a_n", "a_p", "L_n", "L_p", "c_e", "temperature",
                                     "nominal_capacity")},
                "v_min": _num,
                "v_max": _num,
            },
            "additionalProperties": False,
        },
        "reference": {
            "type": "object",
            "required": list(ESTIMAND_NAMES),
            "properties": {k: _pos for k in ESTIMAND_NAMES},
            "additionalProperties": False,
        },
        "ocp_n": _OCP_SCHEMA,
        "ocp_p": _OCP_SCHEMA,
    },
}

PROTOCOL_SCHEMA = {
    "type": "object",
    "required": ["dt_s", "fitting_c_rate", "c_rates", "cc_window_factor", "dst_repetitions"],
    "properties": {
        "dt_s": _pos,
        "fitting_c_rate": _pos,
        "c_rates": {"type": "array", "items": _pos, "minItems": 1, "uniqueItems": True},
        "cc_window_factor": _pos,
        "dst_repetitions": _count,
    },
}

OPTIMIZERS_SCHEMA = {
    "type": "object",
    "required": ["bounds", "objective", "ls", "pso", "ga"],
    "properties": {
        "bounds": {
            "type": "object",
            "required": ["lo_factor", "hi_factor"],
            "properties": {"lo_factor": _pos, "hi_factor": _pos},
        },
        "objective": {
            "type": "object",
            "properties": {
                "penalty_voltage": _pos,
                "validation_pooling": {"enum": ["pooled", "per_trace"]},
            },
        },
        "ls": {
            "type": "object",
            "properties": {
                "max_iterations": _count,
                "cost_tolerance": _pos,
                "step_tolerance": _pos,
                "gradient_tolerance": _pos,
                "fd_rel_step": _pos,
                "n_starts": _count,
                "repetitions": _count,
            },
            "additionalProperties": False,
        },
        "pso": {
            "type": "object",
            "properties": {
                "swarm_size": {"type": "integer", "minimum": 2},
                "max_iterations": _count,
                "min_func_tolerance": _pos,
                "inertia": _pos,
                "cognitive": _pos,
                "social": _pos,
                "repetitions": _count,
            },
            "additionalProperties": False,
        },
        "ga": {
            "type": "object",
            "properties": {
                "generations": _count,
                "parents_mating": {"type": "integer", "minimum": 2},
                "population": {"type": "integer", "minimum": 2},
                "genes": {"const": len(ESTIMAND_NAMES)},
                "mutation_rate": {"type": "number", "minimum": 0, "maximum": 1},
                "elitism": {"type": "integer", "minimum": 0},
                "repetitions": _count,
            },
            "additionalProperties": False,
        },
    },
}

DST_SCHEMA = {
    "type": "object",
    "required": ["steps"],
    "properties": {
        "steps": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["duration_s", "fraction"],
                "properties": {"duration_s": _pos, "fraction": {"type": "number", "minimum": -1, "maximum": 1}},
            },
        },
    },
}

SCHEMAS = {
    "cell.json": CELL_SCHEMA,
    "protocol.json": PROTOCOL_SCHEMA,
    "optimizers.json": OPTIMIZERS_SCHEMA,
    "dst_template.json": DST_SCHEMA,
}


def _field_path(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def load_json(path: Path, schema: dict | None = None) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if schema is not None:
        errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(data), key=lambda e: list(e.path))
        if errors:
            details = "; ".join(f"{_field_path(e)}: {e.message}" for e in errors)
            raise ConfigError(f"{path}: {details}")
    return data


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one configuration directory."""

    root: Path
    cell: dict
    protocol: dict
    optimizers: dict
    dst_template: dict

    def cell_parameters(self) -> CellParameters:
        cell = self.cell
        try:
            params = CellParameters(
                estimands=EstimandVector.from_dict(cell["reference"]),
                fixed=FixedCellConfig.from_dict(cell["fixed"]),
                ocp_n=OcpCurve.from_dict(cell["ocp_n"]),
                ocp_p=OcpCurve.from_dict(cell["ocp_p"]),
            )
            params.estimands.validate()
        except CellIdError as exc:
            raise ConfigError(f"{self.root / 'cell.json'}: {exc}") from None
        return params


def resolve_config_dir(explicit: str | os.PathLike | None = None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(CONFIG_ENV)
    if env:
        return Path(env)
    return DEFAULT_CONFIG_DIR


def load_config(directory: str | os.PathLike | None = None) -> RunConfig:
    root = resolve_config_dir(directory)
    if not root.is_dir():
        raise ConfigError(f"{root}: configuration directory not found")
    loaded = {name: load_json(root / name, SCHEMAS[name]) for name in CONFIG_FILES}
    cfg = RunConfig(root, loaded["cell.json"], loaded["protocol.json"], loaded["optimizers.json"],
                    loaded["dst_template.json"])
    bounds = cfg.optimizers["bounds"]
    if not bounds["lo_factor"] < bounds["hi_factor"]:
        raise ConfigError(f"{root / 'optimizers.json'}: bounds/lo_factor must be below bounds/hi_factor")
    cfg.cell_parameters()
    return cfg


def default_cell_parameters() -> CellParameters:
    return RunConfig(DEFAULT_CONFIG_DIR, load_json(DEFAULT_CONFIG_DIR / "cell.json", CELL_SCHEMA),
                     {}, {}, {}).cell_parameters()


def default_dst_template() -> dict:
    return load_json(DEFAULT_CONFIG_DIR / "dst_template.json", DST_SCHEMA)
