"""Command-line entry point: ``cellid {simulate,generate,fit,bench}``.

Exit codes: 0 success, 2 configuration or validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from cellid.config import load_config
from cellid.errors import ConfigError, DatasetError, InvalidParameterError, StabilityError
from cellid.harness import METHODS, ExperimentPlan, emit_report, run_experiment
from cellid.objective import ObjectiveSpec, rmse_over_suite
from cellid.optimizers import GaConfig, LsConfig, PsoConfig, fit_ga, fit_ls, fit_pso, make_bounds, sample_uniform
from cellid.protocols import ProtocolConfig, build_suite, make_cc_discharge, make_dst, read_suite, write_suite, write_trace
from cellid.spm import simulate_profile

log = logging.getLogger("cellid")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    """Bad command-line input detected before any work starts."""


def _parse_profile(text: str):
    if text == "dst":
        return "dst", None
    kind, _, rate = text.partition(":")
    if kind != "cc" or not rate:
        raise UsageError(f"unknown profile {text!r}; use cc:<c-rate> or dst")
    try:
        c_rate = float(rate)
    except ValueError:
        raise UsageError(f"bad C-rate in profile {text!r}") from None
    if not c_rate > 0:
        raise UsageError(f"c_rate must be positive, got {c_rate:g}")
    return "cc", c_rate


def _optimizer_config(method: str, cfg) -> LsConfig | PsoConfig | GaConfig:
    section = cfg.optimizers[method]
    return {"ls": LsConfig, "pso": PsoConfig, "ga": GaConfig}[method].from_dict(section)


def _load_suite(path: str | None):
    if not path:
        raise UsageError("--suite is required")
    if not Path(path, "manifest.json").is_file():
        raise DatasetError(f"{path}: suite not found (run `cellid generate --out {path}` first)")
    return read_suite(path)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    kind, c_rate = _parse_profile(args.profile)
    if not args.out:
        raise UsageError("--out is required")
    params = cfg.cell_parameters()
    protocol = ProtocolConfig.from_dict(cfg.protocol)
    if kind == "cc":
        profile = make_cc_discharge(c_rate, params, protocol.cc_window_factor / c_rate, protocol.dt)
    else:
        profile = make_dst(params, args.reps or protocol.dst_repetitions, cfg.dst_template, protocol.dt)
    trace = simulate_profile(params, profile)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_trace(trace, args.out)
    log.info("%s: %d samples, termination %s", args.out, len(trace), trace.termination.value)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    if not args.out:
        raise UsageError("--out is required")
    params = cfg.cell_parameters()
    suite = build_suite(params, ProtocolConfig.from_dict(cfg.protocol), cfg.dst_template)
    manifest = write_suite(suite, args.out)
    log.info("wrote %d traces and %s", len(suite.traces), manifest)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}")
    if not args.out:
        raise UsageError("--out is required")
    suite = _load_suite(args.suite)
    cell = cfg.cell_parameters()
    opt_cfg = _optimizer_config(args.method, cfg)
    b = cfg.optimizers["bounds"]
    bounds = make_bounds(cell.estimands, b["lo_factor"], b["hi_factor"])
    obj = cfg.optimizers["objective"]
    penalty = obj.get("penalty_voltage", 10.0)
    pooling = obj.get("validation_pooling", "pooled")
    spec = ObjectiveSpec(suite.fitting, cell, penalty)

    extra = {}
    if args.method == "ls":
        n_starts = cfg.optimizers["ls"].get("n_starts", 100)
        if not 0 <= args.init_index < n_starts:
            raise UsageError(f"--init-index must be in [0, {n_starts})")
        init = sample_uniform(bounds, n_starts, args.seed)[args.init_index]
        result = fit_ls(init, bounds, spec, opt_cfg, seed=args.seed)
        extra["init_index"] = args.init_index
    elif args.method == "pso":
        result = fit_pso(bounds, spec, replace(opt_cfg, seed=args.seed))
    else:
        result = fit_ga(bounds, spec, replace(opt_cfg, seed=args.seed))

    fit_mv, val_mv = rmse_over_suite(result.best, suite, cell, penalty, pooling)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {**result.as_dict(), **extra, "fitting_rmse_mv": fit_mv, "validation_rmse_mv": val_mv}
    path = out / "result.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    log.info("%s: fitting %.4g mV, validation %.4g mV", path, fit_mv, val_mv)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}")
    if not args.out:
        raise UsageError("--out is required")
    suite = _load_suite(args.suite)
    cell = cfg.cell_parameters()
    section = cfg.optimizers[args.method]
    obj = cfg.optimizers["objective"]
    b = cfg.optimizers["bounds"]
    plan = ExperimentPlan(
        method=args.method,
        repetitions=args.reps or section.get("repetitions"),
        base_seed=args.seed,
        config=_optimizer_config(args.method, cfg),
        lo_factor=b["lo_factor"],
        hi_factor=b["hi_factor"],
        penalty_voltage=obj.get("penalty_voltage", 10.0),
        pooling=obj.get("validation_pooling", "pooled"),
        workers=args.workers,
    )
    report = run_experiment(plan, suite, cell)
    emit_report(report, args.out)
    agg = report.aggregates
    log.info("%s x%d: fitting %.4g mV (SD %.3g), validation %.4g mV (SD %.3g)", args.method, report.repetitions,
             agg["fitting_rmse_mv"]["mean"], agg["fitting_rmse_mv"]["sd"],
             agg["validation_rmse_mv"]["mean"], agg["validation_rmse_mv"]["sd"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellid", description="SPM parameter identification benchmark")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration directory (default: $CELLID_CONFIG_DIR, then packaged)")
    common.add_argument("--out", help="output file (simulate) or directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate one profile to a trace CSV")
    p.add_argument("--profile", required=True, help="cc:<c-rate> or dst")
    p.add_argument("--reps", type=int, help="DST cycles (default from protocol.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", parents=[common], help="write the fitting and validation suite")
    p.set_defaults(func=cmd_generate)

    for name, func, text in (("fit", cmd_fit, "single optimizer run"), ("bench", cmd_bench, "repeated runs")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--method", required=True, choices=METHODS)
        p.add_argument("--suite", required=True, help="directory written by `generate`")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
        if name == "fit":
            p.add_argument("--init-index", type=int, default=0, help="LS start among the sampled inits")
        else:
            p.add_argument("--reps", type=int, help="repetitions (default from optimizers.json)")
            p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, DatasetError, InvalidParameterError, StabilityError, ValueError) as exc:
        print(f"cellid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"cellid {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
