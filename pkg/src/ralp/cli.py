"""Command-line front end.

Commands: profile | split | volumes | simulate | catalog.  Reports are
machine-readable (JSON, or CSV for volume tables) and byte-stable across
identical invocations.  Exit codes: 0 ok, 2 parse/validation error,
3 unknown catalog name, 4 bad flag value, 5 cluster capacity exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

from .catalog import UnknownModelError, catalog_lookup, catalog_names
from .costmodel import (
    StrategyKind,
    compare_strategies,
    gpu_assignments,
    rows_to_csv,
    rows_to_json,
    volume_ring,
)
from .descriptor import DescriptorError, parse_model
from .layers import ModelGraph
from .profiler import ProfilerConfig, SkewnessMode, profile
from .simulator import CapacityError, ScenarioError, parse_scenario, simulate_run

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNKNOWN_CATALOG = 3
EXIT_BAD_FLAG = 4
EXIT_CAPACITY = 5

GIB = float(1 << 30)


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_model(ref: str) -> ModelGraph:
    """Resolve a model reference: a path when it looks like one, else a
    catalog name."""
    if ref.endswith(".model") or "/" in ref or "\\" in ref:
        path = Path(ref)
        if not path.is_file():
            raise _CliError(EXIT_PARSE, f"cannot read model descriptor {ref!r}: no such file")
        try:
            return parse_model(path.read_text())
        except DescriptorError as exc:
            raise _CliError(EXIT_PARSE, f"{ref}: {exc}") from exc
    try:
        return catalog_lookup(ref)
    except UnknownModelError as exc:
        raise _CliError(EXIT_UNKNOWN_CATALOG, str(exc.args[0])) from exc
    except DescriptorError as exc:
        raise _CliError(EXIT_PARSE, f"{ref}: {exc}") from exc


def _profiler_config(args) -> ProfilerConfig:
    try:
        mode = SkewnessMode(args.mode)
    except ValueError:
        raise _CliError(EXIT_BAD_FLAG, f"unknown skewness mode {args.mode!r}") from None
    return ProfilerConfig(threshold=args.threshold, mode=mode)


def _cmd_profile(args) -> int:
    model = _load_model(args.model)
    report = profile(model, _profiler_config(args))
    print(report.to_json())
    return EXIT_OK


def _cmd_split(args) -> int:
    model = _load_model(args.model)
    report = profile(model, _profiler_config(args))
    print(
        json.dumps(
            {
                "model": report.model_name,
                "skewness": report.skewness,
                "threshold": report.threshold,
                "eligible": report.eligible,
                "split_index": report.split_index,
                "split_cost_bytes": report.split_cost_bytes,
                "recommendation": report.recommendation,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _parse_strategies(raw: str) -> list[StrategyKind]:
    if raw == "all":
        return [StrategyKind.BASELINE_PS, StrategyKind.RALP, StrategyKind.RING_ALLREDUCE]
    kinds = []
    for token in raw.split(","):
        token = token.strip()
        try:
            kinds.append(StrategyKind(token))
        except ValueError:
            raise _CliError(
                EXIT_BAD_FLAG,
                f"unknown strategy {token!r} (expected baseline, ralp, ring, or all)",
            ) from None
    return kinds


def _cmd_volumes(args) -> int:
    if args.reproduce_table3:
        return _reproduce_table3()
    model = _load_model(args.model)
    try:
        workers = [int(w) for w in args.workers.split(",")]
    except ValueError:
        raise _CliError(EXIT_BAD_FLAG, f"bad --workers value {args.workers!r}") from None
    if any(w < 1 for w in workers):
        raise _CliError(EXIT_BAD_FLAG, "--workers values must be >= 1")
    kinds = _parse_strategies(args.strategies)
    rows = compare_strategies(model, workers, kinds, split_index=args.split)
    if args.format == "json":
        print(rows_to_json(rows))
    else:
        print(rows_to_csv(rows), end="")
    if args.gpus:
        print(json.dumps({"gpu_assignments": gpu_assignments(args.gpus)}, indent=2))
    return EXIT_OK


def _reproduce_table3() -> int:
    """Per-step transfer sizes for the three reference benchmarks at W=8
    synchronizing machines (printed in binary GB to match the reported
    figures)."""
    print("model,model_size_gb,ring_w8_gb")
    for name in ("alexnet", "inception-v3", "vgg11"):
        model = catalog_lookup(name)
        ring = volume_ring(model, 8).total_bytes_per_step
        print(f"{name},{model.total_param_bytes / GIB:.2f},{ring / GIB:.2f}")
    return EXIT_OK


def _bundled_scenario(name: str) -> Path:
    return Path(str(resources.files("ralp") / "scenarios" / name))


def _cmd_simulate(args) -> int:
    if args.steps is not None and args.steps < 1:
        raise _CliError(EXIT_PARSE, f"--steps must be >= 1, got {args.steps}")
    path = Path(args.scenario)
    if not path.is_file():
        bundled = _bundled_scenario(path.name)
        if bundled.is_file():
            path = bundled
        else:
            raise _CliError(EXIT_PARSE, f"cannot read scenario {args.scenario!r}: no such file")

    def resolve(ref: str) -> ModelGraph:
        if ref.endswith(".model") or "/" in ref:
            candidate = (path.parent / ref) if not Path(ref).is_absolute() else Path(ref)
            if candidate.is_file():
                return parse_model(candidate.read_text())
        return _load_model(ref)

    try:
        scenario = parse_scenario(path.read_text(), resolve)
    except CapacityError as exc:
        raise _CliError(EXIT_CAPACITY, str(exc)) from exc
    except (ScenarioError, DescriptorError) as exc:
        raise _CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    if args.steps is not None:
        scenario = dataclasses.replace(scenario, steps=args.steps)
    try:
        report = simulate_run(scenario)
    except CapacityError as exc:
        raise _CliError(EXIT_CAPACITY, str(exc)) from exc

    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.timeline:
        Path(args.timeline).write_text(report.timeline_csv())
    for job in report.jobs:
        print(
            f"{job.job}: strategy={job.strategy} workers={job.worker_count} "
            f"step_time={job.avg_step_time:.6f}s images_per_sec={job.images_per_sec:.1f} "
            f"comm_fraction={job.comm_fraction:.3f} wire_bytes={job.bytes_on_wire_per_step}"
        )
    return EXIT_OK


def _cmd_catalog(args) -> int:
    names = catalog_names()
    if args.json:
        payload = []
        for name in names:
            model = catalog_lookup(name)
            payload.append(
                {
                    "name": name,
                    "layers": model.num_layers,
                    "batch_size": model.batch_size,
                    "total_param_bytes": model.total_param_bytes,
                }
            )
        print(json.dumps(payload, indent=2))
    else:
        for name in names:
            model = catalog_lookup(name)
            print(
                f"{name:16s} layers={model.num_layers:3d} batch={model.batch_size:3d} "
                f"size={model.total_param_bytes / GIB:.2f}GB"
            )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ralp",
        description="Profile CNN models for resource-aware layer placement, "
        "tabulate per-step communication volumes, and simulate training on a "
        "modeled cluster.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_profile_flags(p):
        p.add_argument("model", help="catalog name or descriptor path")
        p.add_argument("--threshold", type=float, default=-0.5,
                       help="skewness eligibility cutoff (default -0.5)")
        p.add_argument("--mode", default="index_weighted",
                       help="index_weighted (default) or literal_values")

    p_profile = sub.add_parser("profile", help="full profile report (JSON)")
    add_profile_flags(p_profile)
    p_profile.set_defaults(fn=_cmd_profile)

    p_split = sub.add_parser("split", help="split decision only (JSON)")
    add_profile_flags(p_split)
    p_split.set_defaults(fn=_cmd_split)

    p_vol = sub.add_parser("volumes", help="per-step communication volume table")
    p_vol.add_argument("model")
    p_vol.add_argument("--workers", default="8", help="comma-separated worker counts")
    p_vol.add_argument("--strategies", default="all",
                       help="comma-separated subset of baseline,ralp,ring, or all")
    p_vol.add_argument("--split", type=int, default=None,
                       help="override the profiled split layer for the ralp rows")
    p_vol.add_argument("--format", choices=("csv", "json"), default="csv")
    p_vol.add_argument("--gpus", type=int, default=None,
                       help="also print worker/PS device accounting for this GPU budget")
    p_vol.add_argument("--reproduce-table3", action="store_true",
                       help="print the three-benchmark reference table at W=8")
    p_vol.set_defaults(fn=_cmd_volumes)

    p_sim = sub.add_parser("simulate", help="run a scenario file")
    p_sim.add_argument("scenario", help="scenario path (bundled names also work)")
    p_sim.add_argument("--steps", type=int, default=None, help="override scenario step count")
    p_sim.add_argument("--out", default=None, help="write the full JSON report here")
    p_sim.add_argument("--timeline", default=None, help="write the per-step category CSV here")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_cat = sub.add_parser("catalog", help="list bundled benchmark models")
    p_cat.add_argument("--json", action="store_true")
    p_cat.set_defaults(fn=_cmd_catalog)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    raise SystemExit(main())
