"""
fieldnet command line.

    fieldnet validate --scenario farm.yaml [--graph farm.graphml]
    fieldnet run      --scenario farm.yaml|env-iot [--seed N] [--horizon 30d] [--trace P] [--metrics P]
    fieldnet sweep    --scenario env-iot --locations 1,5,10 --intervals 24h,6h --repeats 3 [--out P]
    fieldnet preset   env-iot|jose [--locations N] [--interval 6h] [--sensors-per-type N] [--write P]

Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from src.cli.sweep import fit_trend, plan_cells, run_sweep, write_sweep
from src.core.config import config
from src.core.errors import InvalidOption, ScenarioInvalid, SimulationError, UnknownPreset
from src.core.events import event_bus
from src.core.logging import print_log_event, setup_logging
from src.kernel.stats import RunStats
from src.scenario.builder import build_simulation
from src.scenario.export import TraceWriter, write_metrics
from src.scenario.models import ScenarioSpec, parse_duration
from src.scenario.parser import check_scenario, load_scenario, serialize_scenario
from src.scenario.presets import PRESETS, get_preset
from src.scenario.topology import ForwardingGraph

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


# Argument types


def duration(text: str) -> int:
    try:
        return parse_duration(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 2**64 - 1:
        raise argparse.ArgumentTypeError(f"seed {value} outside [0, 2^64-1]")
    return value


def int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def duration_list(text: str) -> List[int]:
    values = [duration(part.strip()) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fieldnet", description="IoT / fog / cloud discrete-event simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="mirror log lines on stderr")
    parser.add_argument("--log-file", default=None, help=f"log file (default {config.LOG_FILE})")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p):
        p.add_argument("--scenario", required=True, help="scenario file, or a preset name")

    def run_args(p):
        p.add_argument("--seed", type=seed, default=None)
        p.add_argument("--horizon", type=duration, default=None, help="overrides the document horizon")
        p.add_argument("--trace", type=Path, default=None, help="trace CSV path")
        p.add_argument("--metrics", type=Path, default=None, help="metrics JSON path")

    p = sub.add_parser("validate", help="check a scenario and print its diagnostics")
    scenario_arg(p)
    p.add_argument("--graph", type=Path, default=None, help="also write the forwarding graph as GraphML")

    p = sub.add_parser("run", help="run one simulation")
    scenario_arg(p)
    run_args(p)

    p = sub.add_parser("sweep", help="run a locations x intervals grid")
    scenario_arg(p)
    p.add_argument("--locations", type=int_list, default=[1])
    p.add_argument("--intervals", type=duration_list, default=None)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=seed, default=None)
    p.add_argument("--horizon", type=duration, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, default=None, help="sweep CSV path")

    p = sub.add_parser("preset", help="build and run a case-study preset")
    p.add_argument("name", help=f"one of: {', '.join(sorted(PRESETS))}")
    p.add_argument("--locations", type=int, default=None)
    p.add_argument("--interval", type=duration, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--sensors-per-type", type=int, default=None)
    p.add_argument("--write", type=Path, default=None, help="write the scenario document instead of running it")
    run_args(p)
    return parser


# Commands


def resolve_scenario(ref: str) -> ScenarioSpec:
    """A path to a scenario document, or the name of a preset when no such file exists."""
    if not Path(ref).exists() and ref in PRESETS:
        return get_preset(ref)
    return load_scenario(ref)


def default_output(spec: ScenarioSpec, seed_value: int, suffix: str) -> Path:
    return Path(config.OUTPUT_DIR) / f"{spec.name}-{seed_value}{suffix}"


def execute(
    spec: ScenarioSpec,
    seed_value: Optional[int],
    horizon: Optional[int],
    trace_path: Optional[Path],
    metrics_path: Optional[Path],
) -> RunStats:
    sim = build_simulation(spec, seed=seed_value, horizon=horizon)
    trace_path = trace_path or default_output(spec, sim.seed, ".trace.csv")
    metrics_path = metrics_path or default_output(spec, sim.seed, ".metrics.json")
    writer = TraceWriter(trace_path).attach(sim.bus)
    try:
        stats = sim.run()
    finally:
        writer.close()
    write_metrics(stats, metrics_path, spec.name, sim.seed)
    print(
        f"{spec.name}: {stats.events_processed} events, {stats.packets_sent} packets sent "
        f"({stats.packets_delivered} delivered, {stats.packets_lost} lost), "
        f"{sum(stats.energy_J.values()):.1f} J host energy, "
        f"{stats.wall_clock_ms:.0f} ms -> {metrics_path}"
    )
    return stats


def cmd_validate(args) -> int:
    spec = resolve_scenario(args.scenario)
    diagnostics = check_scenario(spec)
    if diagnostics:
        raise ScenarioInvalid(diagnostics, args.scenario)
    if args.graph is not None:
        ForwardingGraph.from_spec(spec).export_graphml(str(args.graph))
    print(f"{args.scenario}: OK ({spec.node_count()} nodes, {spec.sensor_count()} sensors)")
    return EXIT_OK


def cmd_run(args) -> int:
    spec = resolve_scenario(args.scenario)
    execute(spec, args.seed, args.horizon, args.trace, args.metrics)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        plan_cells(args.locations, args.intervals or [None], args.repeats, args.seed or 0)
    except ValueError as e:
        raise InvalidOption(str(e)) from e
    spec = resolve_scenario(args.scenario)
    table = asyncio.run(
        run_sweep(spec, args.locations, args.intervals, args.repeats, args.seed, args.horizon, args.workers)
    )
    out = args.out or Path(config.OUTPUT_DIR) / f"{spec.name}-sweep.csv"
    write_sweep(table, out)
    failed = int((table["error"] != "").sum())
    print(f"{spec.name}: {len(table)} runs ({failed} failed) -> {out}")
    if len(args.locations) > 1 and failed == 0:
        slope, r2 = fit_trend(table, "locations")
        print(f"wall_ms vs locations: slope={slope:.3f} ms/location, R^2={r2:.3f}")
    return EXIT_OK


def cmd_preset(args) -> int:
    spec = get_preset(
        args.name,
        locations=args.locations,
        interval=args.interval,
        days=args.days,
        sensors_per_type=args.sensors_per_type,
        seed=args.seed,
    )
    if args.write is not None:
        args.write.parent.mkdir(parents=True, exist_ok=True)
        args.write.write_text(serialize_scenario(spec), encoding="utf-8")
        print(f"{args.name}: {spec.node_count()} nodes -> {args.write}")
        return EXIT_OK
    print(f"{args.name}: {spec.node_count()} nodes, {spec.sensor_count()} sensors")
    execute(spec, args.seed, args.horizon, args.trace, args.metrics)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "preset": cmd_preset}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    setup_logging(log_file=args.log_file)
    if args.verbose:
        event_bus.subscribe(print_log_event, topic="log")
    try:
        return COMMANDS[args.command](args)
    except ScenarioInvalid as e:
        for diagnostic in e.diagnostics:
            print(diagnostic, file=sys.stderr)
        print(f"{len(e.diagnostics)} diagnostic(s)", file=sys.stderr)
        return EXIT_USAGE
    except (UnknownPreset, InvalidOption) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        if args.verbose:
            event_bus.unsubscribe(print_log_event)


def run() -> None:
    sys.exit(main())
