"""Command-line entry point."""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Optional

from pydantic import ValidationError

from src.config import load_settings
from src.normperturb.commands.diagnose import cmd_diagnose
from src.normperturb.commands.evaluate import cmd_eval
from src.normperturb.commands.gen import cmd_gen
from src.normperturb.commands.sweep import cmd_sweep
from src.normperturb.commands.train import cmd_train
from src.normperturb.models.experiment import ConfigError, ExperimentConfig, load_experiment_config
from src.normperturb.models.sweep import PRESETS
from src.normperturb.services.trainer import TrainingDivergedError
from src.normperturb.tensor.tensor import set_anomaly_detection
from src.normperturb.utils.logger import setup_logging


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normperturb",
        description="Normalization Perturbation experiments on a synthetic domain benchmark.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", help="experiment JSON (default: bundled default.json)")
        sub.add_argument(
            "--seed", type=int, help="override the top-level seed (sweep seeds are offset by it)"
        )
        sub.add_argument("--out", help="override the output directory")
        sub.add_argument(
            "--regen", action="store_true", help="regenerate the dataset instead of loading it"
        )
        return sub

    add("gen", "generate the benchmark dataset")
    add("train", "train a network on the source domain")
    for name, help_text in (
        ("eval", "accuracy on source and target domains"),
        ("diagnose", "domain-gap and channel-sensitivity reports"),
    ):
        sub = add(name, help_text)
        sub.add_argument("--checkpoint", help="checkpoint directory (default: <out>/checkpoint)")
    sweep = add("sweep", "train and evaluate an ablation grid")
    sweep.add_argument("--jobs", type=int, help="worker processes (default from settings)")
    sweep.add_argument("--preset", choices=sorted(PRESETS), help="use a built-in ablation grid")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config)
    if args.seed is not None or args.out is not None:
        try:
            config = config.with_overrides(seed=args.seed, output_dir=args.out)
        except ValidationError as exc:
            problems = [f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()]
            raise ConfigError("command-line overrides", problems) from exc
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code.

    Exit codes: 0 success, 1 missing files or failed run, 2 invalid configuration.
    """
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings()
    except ValidationError as exc:
        print(f"invalid NORMPERTURB_* settings: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    setup_logging(settings.log_level)
    set_anomaly_detection(settings.anomaly_detection)

    try:
        config = _load_config(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"{exc.source}: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAILURE

    try:
        if args.command == "gen":
            cmd_gen(config, regenerate=args.regen)
        elif args.command == "train":
            cmd_train(config, regenerate=args.regen)
        elif args.command == "eval":
            cmd_eval(config, checkpoint=args.checkpoint, regenerate=args.regen)
        elif args.command == "diagnose":
            cmd_diagnose(config, checkpoint=args.checkpoint, regenerate=args.regen)
        elif args.command == "sweep":
            jobs = args.jobs if args.jobs is not None else settings.jobs
            if jobs < 1:
                print(f"--jobs must be >= 1, got {jobs}", file=sys.stderr)
                return EXIT_CONFIG
            cmd_sweep(config, jobs=jobs, preset=args.preset, regenerate=args.regen)
    except FileNotFoundError as exc:
        logger.error(f"Missing input: {exc}")
        print(str(exc), file=sys.stderr)
        return EXIT_FAILURE
    except TrainingDivergedError as exc:
        logger.error(f"Run failed: {exc}")
        return EXIT_FAILURE
    except ValueError as exc:
        logger.error(f"Invalid request: {exc}")
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
