"""CLI entry point for the Tavis-Cummings quasi-probability engine."""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Sequence

if __package__ in {None, ""}:
    from pathlib import Path as _Path
    import sys as _sys

    _base = str(_Path(__file__).resolve().parent)
    if _base not in _sys.path:
        _sys.path.append(_base)
    import utils
    from errors import ConfigError, SimulationError, exit_code_for
    from presets import PRESETS, get_preset, list_presets
    from runner import run_experiment
    from workflows.orchestrator import run_batch
else:
    from . import utils
    from .errors import ConfigError, SimulationError, exit_code_for
    from .presets import PRESETS, get_preset, list_presets
    from .runner import run_experiment
    from .workflows.orchestrator import run_batch

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulate the open Tavis-Cummings model and record spin quasi-probabilities and photon statistics."
    )
    parser.add_argument(
        "--no-verbose",
        dest="verbose",
        action="store_false",
        help="Only log warnings and errors.",
    )
    parser.set_defaults(verbose=True)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one preset or YAML experiment description.")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="Name of a built-in figure preset (see list-presets).")
    source.add_argument("--config", help="Path to a YAML experiment description.")
    run.add_argument("--out", help="Output directory (default: runs/<name>).")
    run.add_argument(
        "--check-convergence",
        action="store_true",
        help="Re-run at dt/2 and fail with exit code 2 if observables move by more than 1e-6.",
    )

    batch = commands.add_parser("batch", help="Run several presets or configs concurrently.")
    batch.add_argument(
        "--presets",
        nargs="+",
        default=[],
        help="Preset names, or 'all' for every built-in preset.",
    )
    batch.add_argument("--configs", nargs="+", default=[], help="YAML experiment descriptions.")
    batch.add_argument("--workers", type=int, default=None, help="Number of concurrent integrations.")
    batch.add_argument("--out", default="runs", help="Root directory; each run gets its own subdirectory.")
    batch.add_argument("--check-convergence", action="store_true", help="Apply the dt/2 check to every run.")

    commands.add_parser("list-presets", help="List the built-in presets.")

    validate = commands.add_parser("validate", help="Check a YAML experiment description without running it.")
    validate.add_argument("--config", required=True, help="Path to a YAML experiment description.")

    dump = commands.add_parser("dump-preset", help="Print a preset as an editable YAML description.")
    dump.add_argument("name", help="Preset name.")
    dump.add_argument("--out", help="Write to this file instead of standard output.")
    return parser


def _load(args: argparse.Namespace):
    if args.preset:
        try:
            return get_preset(args.preset)
        except KeyError as exc:
            raise ConfigError([str(exc.args[0])]) from None
    return utils.load_config(args.config)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    out_dir = Path(args.out) if args.out else Path("runs") / config.name
    summary = run_experiment(config, out_dir, check_convergence=args.check_convergence, verbose=args.verbose)
    print(f"{summary.name}: wrote {len(summary.files)} files to {summary.output_dir}")
    if args.check_convergence and not summary.diagnostics.get("convergence_passed", True):
        print(
            f"{summary.name}: dt convergence check failed "
            f"(max relative change {summary.diagnostics['convergence_max_relative_change']:.3e})",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_batch(args: argparse.Namespace) -> int:
    presets = list(PRESETS) if args.presets == ["all"] else list(args.presets)
    if not presets and not args.configs:
        raise ConfigError(["batch needs --presets or --configs"])
    workers = args.workers or min(len(presets) + len(args.configs), 8)
    summaries = asyncio.run(
        run_batch(
            presets=presets,
            configs=args.configs,
            out_root=args.out,
            workers=workers,
            check_convergence=args.check_convergence,
            verbose=args.verbose,
        )
    )
    for summary in summaries:
        status = "ok" if summary.success else f"FAILED ({summary.error_type}: {summary.message})"
        print(f"{summary.name}: {status}")
    return max((s.exit_code for s in summaries), default=0)


def _cmd_list(args: argparse.Namespace) -> int:
    width = max(len(name) for name in PRESETS)
    for name, description in list_presets():
        print(f"{name:<{width}}  {description}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = utils.load_config(args.config)
    print(f"{args.config}: valid ({config.family}, {config.n_spins} spins, n_max={config.n_max})")
    return 0


def _cmd_dump(args: argparse.Namespace) -> int:
    try:
        config = get_preset(args.name)
    except KeyError as exc:
        raise ConfigError([str(exc.args[0])]) from None
    if args.out:
        utils.save_config(config, args.out)
    else:
        sys.stdout.write(utils.config_to_yaml(config))
    return 0


COMMANDS = {
    "run": _cmd_run,
    "batch": _cmd_batch,
    "list-presets": _cmd_list,
    "validate": _cmd_validate,
    "dump-preset": _cmd_dump,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return exit_code_for(exc)
    except (SimulationError, ArithmeticError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
