# cli.py
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Callable, Dict, Sequence

from loguru import logger

from .core.base import SmartBalError
from .core.scenario import StrategyProfile
from .runner import Experiment, ExperimentConfig

LOG_FORMAT = " <level>{level}</level> | {message}"


def enable_debug_logging() -> None:
    # switch to debug on stderr
    logger.remove()
    logger.add(sys.stderr, level="DEBUG", format=LOG_FORMAT)
    logger.enable("smartbal")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, metavar="N", help="root seed")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes")
    common.add_argument("-d", "--debug", action="store_true", help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="smartbal",
        description="Smart balancing game: grid simulation, settlement, equilibria and EWA learning.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="one scenario and strategy profile to a trace CSV")
    sim.add_argument("--profile", default="11", help="strategy profile, e.g. 10 or 1,1 (default 11)")
    sim.add_argument("--scenario", type=int, default=0, metavar="I",
                     help="index of the configured scenario (default 0)")
    sim.add_argument("--t-game", type=float, dest="t_game", help="override T_game [min]")
    sim.add_argument("--ramp", type=float, help="override the ramp rate [%%/min]")

    sub.add_parser("payoffs", parents=[common], help="normalized payoff tables")
    sub.add_parser("equilibria", parents=[common], help="Nash equilibria and risk dominance")

    run = sub.add_parser("ewa-run", parents=[common], help="one EWA learning trajectory")
    run.add_argument("--mechanism", default="DE", choices=("DE", "NL"))
    run.add_argument("--scenario-id", dest="scenario_id", help="e.g. T10_r20 (default: first)")

    sub.add_parser("ewa-sweep", parents=[common], help="EWA parameter sweep")
    sub.add_parser("reproduce", parents=[common], help="the full pipeline")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    return config.with_overrides(output_dir=args.out, root_seed=args.seed, jobs=args.jobs)


def _simulate(exp: Experiment, args: argparse.Namespace) -> None:
    scenarios = exp.config.scenarios
    if not 0 <= args.scenario < len(scenarios):
        raise ValueError(f"--scenario {args.scenario} out of range (0..{len(scenarios) - 1})")
    scenario = scenarios[args.scenario]
    changes = {}
    if args.t_game is not None:
        changes["t_game"] = args.t_game
    if args.ramp is not None:
        changes["ramp_pct_per_min"] = args.ramp
    if changes:
        scenario = replace(scenario, **changes)
    exp.write_trace(scenario, StrategyProfile.parse(args.profile))


def _ewa_run(exp: Experiment, args: argparse.Namespace) -> None:
    exp.write_trajectory(exp.find_table(args.mechanism, args.scenario_id))


COMMANDS: Dict[str, Callable[[Experiment, argparse.Namespace], object]] = {
    "simulate": _simulate,
    "payoffs": lambda exp, _: exp.write_payoffs(),
    "equilibria": lambda exp, _: exp.write_equilibria(),
    "ewa-run": _ewa_run,
    "ewa-sweep": lambda exp, _: exp.write_sweep(),
    "reproduce": lambda exp, _: exp.run(),
}


def cli_entry(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.debug:
        enable_debug_logging()
        logger.debug("cli_entry: command={}, args={!r}", args.command, vars(args))

    try:
        config = load_config(args)
        with Experiment(config) as exp:
            COMMANDS[args.command](exp, args)
            written = exp.written
    except (SmartBalError, ValueError, OSError) as exc:
        logger.error("{} failed: {}", args.command, exc)
        return 1

    logger.info("{}: wrote {} file(s) to {}.", args.command, len(written), config.output_dir)
    return 0


def main() -> None:
    raise SystemExit(cli_entry())

