"""Command-line entry point: run missions, read telemetry back, Monte Carlo fault sweeps."""

from __future__ import annotations

import argparse
import collections
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigurationError, ParseError, StreamIntegrityError
from .faults import FaultProfile, random_fault_schedule
from .mission import run_mission
from .rng import child_seeds, stream
from .telemetry import aggregate_report, read_stream, write_stream
from .world import ScenarioSpec, World

EXIT_OK = 0
EXIT_FAULT = 2
EXIT_CONFIG = 3
EXIT_INTEGRITY = 4


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission and write its telemetry")
    run.add_argument("--config", type=Path, help="mission JSON (default: bundled urc10 mission)")
    run.add_argument("--seed", type=_u64, help="master seed (default: the config's seed)")
    run.add_argument("--out", help="telemetry NDJSON path, '-' for stdout")

    report = sub.add_parser("report", help="aggregate a telemetry file and check its integrity")
    report.add_argument("telemetry", help="NDJSON file, '-' for stdin")

    mc = sub.add_parser("montecarlo", help="run many missions under random fault schedules")
    mc.add_argument("--config", type=Path)
    mc.add_argument("--runs", type=_positive_int, default=100)
    mc.add_argument("--fault-profile", type=Path, help="fault profile JSON (default: built-in)")
    mc.add_argument("--seed", type=_u64)
    mc.add_argument("--sites", type=_positive_int,
                    help="truncate the scenario to this many sites (faster sweeps)")

    validate = sub.add_parser("validate", help="schema-check a mission config and its references")
    validate.add_argument("--config", type=Path)
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    world = World.from_scenario(seed, config.scenario)
    result = run_mission(config, world, seed)
    report_stream = sys.stdout
    if args.out == "-":
        write_stream(result.events, sys.stdout)
        report_stream = sys.stderr
    elif args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_stream(result.events, fh)
    print(result.report.format_text(), file=report_stream)
    return EXIT_OK if result.report.complete else EXIT_FAULT


def _cmd_report(args) -> int:
    if args.telemetry == "-":
        report = aggregate_report(read_stream(sys.stdin))
    else:
        try:
            fh = open(args.telemetry, encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read {args.telemetry}: {exc}") from None
        with fh:
            report = aggregate_report(read_stream(fh))
    print(report.format_text())
    return EXIT_INTEGRITY if report.integrity_mismatches else EXIT_OK


def outcome_label(report) -> str:
    if report.fault_reason:
        return f"{report.end_phase}: {report.fault_reason}"
    return str(report.end_phase)


def _cmd_montecarlo(args) -> int:
    config = load_config(args.config)
    profile = FaultProfile.load(args.fault_profile) if args.fault_profile else FaultProfile()
    seed = config.seed if args.seed is None else args.seed
    spec = config.scenario
    if args.sites is not None and args.sites < spec.n_sites:
        spec = ScenarioSpec(args.sites, spec.profile,
                            {i: o for i, o in spec.explicit_sites.items() if i < args.sites},
                            spec.name)
    outcomes = collections.Counter()
    for run_seed in child_seeds(seed, args.runs):
        schedule = random_fault_schedule(stream(run_seed, "faults"), profile)
        world = World.from_scenario(run_seed, spec)
        result = run_mission(config, world, run_seed, fault_schedule=schedule)
        outcomes[outcome_label(result.report)] += 1
    width = max(len(k) for k in outcomes)
    print(f"{'outcome':<{width}}  {'runs':>6}  {'freq':>6}")
    for label, count in sorted(outcomes.items(), key=lambda kv: (-kv[1], kv[0])):
        print(f"{label:<{width}}  {count:>6}  {count / args.runs:>6.3f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"ok: scenario {config.scenario.name or config.scenario_ref} "
          f"({config.scenario.n_sites} sites), {len(config.fault_schedule)} scheduled faults")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "report": _cmd_report,
    "montecarlo": _cmd_montecarlo,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"plsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StreamIntegrityError, ParseError) as exc:
        print(f"plsim: stream integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
