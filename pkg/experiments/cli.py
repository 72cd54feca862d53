#!/usr/bin/env python
"""Command-line front end.

    python -m experiments.cli model eval --n 20 --f 6 --p 0.98
    python -m experiments.cli model required-retx --n 4 --f 1 --u 1 --p 0.9
    python -m experiments.cli model overhead --n 4 --f 1
    python -m experiments.cli sim run --scenario data/scenarios/fig2.yaml
    python -m experiments.cli sim sweep --scenario data/scenarios/fig2.yaml --axis ber --range 0 13e-5 1e-5
    python -m experiments.cli compare --csv results/fig2.csv
    python -m experiments.cli figures fig2 --output-dir results

Exit codes: 0 success, 1 usage, 2 configuration, 3 comparison below threshold.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from core import settings
from core.errors import InvalidConfig, PerfModelError
from core.models import ScenarioSpec
from core.scenario import load_scenario, validate
from experiments.compare import DEFAULT_MIN_FRACTION, compare
from experiments.presets import PRESETS, run_preset
from experiments.report import ScenarioResult, emit_csv, load_csv
from experiments.sweep import AXES, evaluate_point, grid, model_columns, model_scenario, sweep
from services.analytic import (
    message_count,
    message_model_for,
    node_addition_overhead,
    preprepare_overhead,
    required_retransmissions,
)

logger = logging.getLogger("experiments.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_COMPARISON = 3


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this tool reserves 2 for configuration errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- model ---


def _model_spec(args: argparse.Namespace) -> ScenarioSpec:
    if (args.p is None) == (args.ber is None):
        raise UsageError("give exactly one of --p and --ber")
    return model_scenario(
        args.n,
        args.f,
        p=args.p,
        ber=args.ber,
        payload_bytes=args.payload_bytes,
        reply_threshold=args.reply_threshold,
        transport=args.transport,
        repeats=args.repeats,
        repeats_preprepare=args.repeats_preprepare,
        max_retx=args.max_retx,
    )


def cmd_model_eval(args: argparse.Namespace) -> int:
    spec = _model_spec(args)
    columns = model_columns(spec)
    bound = columns["model_lower_bound"]
    print(f"p_msg                 {message_model_for(spec).p_msg:.6f}")
    print(f"P_succ                {columns['model_p_succ']:.6f}")
    print(f"expected_replies      {columns['model_expected_replies']:.6f}")
    print(f"lower_bound           {'n/a (f=0)' if bound is None else f'{bound:.6f}'}")
    print(f"switch_to_tcp         {columns['switch_to_tcp']}")
    return EXIT_OK


def cmd_model_required_retx(args: argparse.Namespace) -> int:
    r = required_retransmissions(args.n, args.f, args.u, args.p, udp=args.udp)
    print(r)
    return EXIT_OK


def cmd_model_overhead(args: argparse.Namespace) -> int:
    base = message_count(args.n, args.f, 0)
    print(f"messages (r_pp=0)     {base}")
    print(f"messages (r_pp={args.r_pp})     {message_count(args.n, args.f, args.r_pp)}")
    print(f"pre-prepare overhead  {preprepare_overhead(args.n, args.f, args.r_pp):.2%}")
    if args.n_to is not None:
        print(f"n={args.n}->{args.n_to} overhead  {node_addition_overhead(args.n, args.n_to, args.f):.2%}")
    return EXIT_OK


# --- sim ---


def _load(args: argparse.Namespace) -> ScenarioSpec:
    if not args.scenario:
        raise UsageError("--scenario is required")
    spec = load_scenario(args.scenario)
    overrides = {"seed": args.seed, "requests": args.requests, "repetitions": args.repetitions}
    overrides = {key: value for key, value in overrides.items() if value is not None}
    return validate(spec.model_copy(update=overrides)) if overrides else spec


def _emit(result: ScenarioResult, output: Optional[str]) -> None:
    if output:
        emit_csv(result, output)
    else:
        emit_csv(result, sys.stdout)


def _axis_values(args: argparse.Namespace) -> list[float]:
    if args.values:
        return [float(value) for value in args.values.split(",") if value.strip()]
    if args.range:
        return grid(*args.range)
    raise UsageError("give --values or --range")


def cmd_sim_run(args: argparse.Namespace) -> int:
    spec = _load(args)
    row = evaluate_point(spec, workers=args.workers)
    _emit(ScenarioResult(scenario_id=spec.scenario_id, axis_name=row.axis_name, rows=[row]), args.output)
    return EXIT_OK


def _run_sweep(args: argparse.Namespace) -> ScenarioResult:
    spec = _load(args)
    return sweep(spec, args.axis, _axis_values(args), workers=args.workers, progress=not args.quiet)


def cmd_sim_sweep(args: argparse.Namespace) -> int:
    result = _run_sweep(args)
    _emit(result, args.output)
    failed = [row for row in result.rows if row.error]
    for row in failed:
        print(f"{row.axis_name}={row.axis_value}: {row.error}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    if args.csv:
        result = load_csv(args.csv)
    else:
        if not args.axis:
            raise UsageError("compare needs --csv or --scenario with --axis")
        result = _run_sweep(args)
        if args.output:
            emit_csv(result, args.output)
    verdict = compare(result, min_fraction=args.min_fraction)
    for row in verdict.rows:
        marker = "inside " if row.inside_ci else "OUTSIDE"
        print(
            f"{row.scenario_id:<24} {row.axis_value!s:>10}  sim={row.success_rate:.4f}  "
            f"model={row.model_p_succ:.4f}  |diff|={row.abs_error:.4f}  {marker}"
        )
    print(f"{verdict.fraction_inside:.1%} of {len(verdict.rows)} rows inside the 95% CI (need {args.min_fraction:.0%})")
    return EXIT_OK if verdict.passed else EXIT_COMPARISON


def cmd_figures(args: argparse.Namespace) -> int:
    if args.list or not args.preset:
        for name, preset in PRESETS.items():
            print(f"{name:<18} {preset.description}")
        return EXIT_OK
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}, expected one of {', '.join(PRESETS)}")
    result = run_preset(
        args.preset,
        seed=args.seed,
        requests=args.requests,
        repetitions=args.repetitions,
        workers=args.workers,
        progress=not args.quiet,
    )
    output = args.output or str(Path(args.output_dir or settings.OUTPUT_DIR) / f"{args.preset}.csv")
    emit_csv(result, output)
    print(output)
    return EXIT_OK


# --- parser ---


def _global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", type=str, help="Scenario YAML file.")
    parser.add_argument("--seed", type=int, help="Override the scenario seed.")
    parser.add_argument("--output", "-o", type=str, help="Output CSV path (default: stdout).")
    parser.add_argument("--requests", type=int, help="Override requests per repetition.")
    parser.add_argument("--repetitions", type=int, help="Override the number of repetitions.")
    parser.add_argument("--workers", type=int, default=settings.WORKERS, help="Worker processes for repetitions.")
    parser.add_argument("--quiet", action="store_true", help="No progress bar.")
    parser.add_argument("--log-level", type=str, default=None, help="Logging level (default from PBFTPERF_LOG_LEVEL).")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, required=True, help="Replica count.")
    parser.add_argument("--f", type=int, required=True, help="Tolerated faults.")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="pbftperf", description="PBFT over lossy channels: analytic model and simulator")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    model = commands.add_parser("model", help="Closed-form model.")
    model_commands = model.add_subparsers(dest="model_command", required=True, parser_class=ArgumentParser)

    evaluate = model_commands.add_parser("eval", help="P_succ, expected replies and bound.")
    _model_flags(evaluate)
    evaluate.add_argument("--p", type=float, help="End-to-end packet success probability.")
    evaluate.add_argument("--ber", type=float, help="Bit error rate per link.")
    evaluate.add_argument("--payload-bytes", type=int, default=128)
    evaluate.add_argument("--reply-threshold", type=int, default=None)
    evaluate.add_argument("--transport", choices=["udp", "tcp"], default="udp")
    evaluate.add_argument("--repeats", type=int, default=1, help="UDP send count for every phase.")
    evaluate.add_argument("--repeats-preprepare", type=int, default=None, help="UDP send count for PRE-PREPARE.")
    evaluate.add_argument("--max-retx", type=int, default=12, help="TCP retransmission cap.")
    evaluate.set_defaults(handler=cmd_model_eval)

    retx = model_commands.add_parser("required-retx", help="Retransmissions needed for 2f+1 expected replies.")
    _model_flags(retx)
    retx.add_argument("--u", type=int, default=1, help="Segments per message.")
    retx.add_argument("--p", type=float, required=True, help="Packet success probability p(l).")
    retx.add_argument("--udp", action="store_true", help="Per-attempt success p instead of p^2 (UDP copies).")
    retx.set_defaults(handler=cmd_model_required_retx)

    overhead = model_commands.add_parser("overhead", help="Message-count overheads.")
    _model_flags(overhead)
    overhead.add_argument("--r-pp", type=int, default=1, help="PRE-PREPARE retransmissions.")
    overhead.add_argument("--n-to", type=int, default=None, help="Compare against a larger deployment.")
    overhead.set_defaults(handler=cmd_model_overhead)

    sim = commands.add_parser("sim", help="Discrete-event simulation.")
    sim_commands = sim.add_subparsers(dest="sim_command", required=True, parser_class=ArgumentParser)
    sim_run = sim_commands.add_parser("run", help="Simulate one scenario.")
    _global_flags(sim_run)
    sim_run.set_defaults(handler=cmd_sim_run)
    sim_sweep = sim_commands.add_parser("sweep", help="Simulate a scenario over an axis.")
    _global_flags(sim_sweep)
    _sweep_flags(sim_sweep, required=True)
    sim_sweep.set_defaults(handler=cmd_sim_sweep)

    comparison = commands.add_parser("compare", help="Check simulated success against the model's CI.")
    _global_flags(comparison)
    _sweep_flags(comparison, required=False)
    comparison.add_argument("--csv", type=str, help="Previously emitted sweep CSV.")
    comparison.add_argument("--min-fraction", type=float, default=DEFAULT_MIN_FRACTION)
    comparison.set_defaults(handler=cmd_compare)

    figures = commands.add_parser("figures", help="Emit the CSV of a named preset.")
    _global_flags(figures)
    figures.add_argument("preset", nargs="?", help=f"One of: {', '.join(PRESETS)}")
    figures.add_argument("--output-dir", type=str, default=None)
    figures.add_argument("--list", action="store_true", help="List presets.")
    figures.set_defaults(handler=cmd_figures)
    return parser


def _sweep_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--axis", choices=AXES, required=required)
    parser.add_argument("--values", type=str, help="Comma separated axis values.")
    parser.add_argument("--range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings.configure_logging(getattr(args, "log_level", None))
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidConfig as exc:
        logger.error("Invalid configuration")
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except (PerfModelError, ValueError, FileNotFoundError) as exc:
        logger.error(f"{exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
