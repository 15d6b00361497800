##! @file main.py
##! @brief fairweigh CLI entry point
##!
##! @details
##! Subcommands:
##! - audit: unconstrained model, every metric on every group pair
##! - train: tune against the configured constraints, persist the model
##! - sweep: one tuned model per epsilon, written to tradeoff.csv
##! - compare-grid: hill-climbing vs grid search, comparison.txt and region.csv
##! - gen-synth: write a planted-bias dataset
##!
##! Exit codes: 0 when the command ran (even if constraints were not met),
##! 2 for configuration and data errors, 1 when interrupted.
##!
##! @usage
##! @code
##! python -m fairweigh.main gen-synth --out data/planted_sp.csv
##! python -m fairweigh.main train --config configs/planted_sp.json
##! python -m fairweigh.main sweep --config configs/planted_sp.json --epsilons 0.2,0.1,0.05,0.03
##! @endcode

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .errors import ConfigError, FairweighError
from .orchestrator import Orchestrator, cmd_gen_synth
from .synthetic import VARIANTS, SyntheticSpec
from .utils import DEFAULT_CONFIG, list_available_learners, load_config, merge_configs, validate_config
from .validator import validate_report

##! Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
    datefmt="%H:%M:%S"
)

_LOG = logging.getLogger("fairweigh.main")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

_NEEDS_CONSTRAINTS = {"train", "sweep", "compare-grid"}


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    ##! @brief Parse command-line arguments
    ##! @return argparse.Namespace with parsed arguments
    parser = argparse.ArgumentParser(
        prog="fairweigh",
        description="fairweigh - fairness constraints as example weights",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
            Examples:
            # Generate planted-bias data
            python -m fairweigh.main gen-synth --out data/planted_sp.csv --gap 0.2

            # Audit an unconstrained model
            python -m fairweigh.main audit --config configs/audit.json

            # Train under the configured constraints
            python -m fairweigh.main train --config configs/planted_sp.json --validate

            # Accuracy/fairness trade-off table
            python -m fairweigh.main sweep --config configs/planted_sp.json --epsilons 0.2,0.1,0.05

            # Hill-climbing vs grid search
            python -m fairweigh.main compare-grid --config configs/three_group.json --jobs 4

            # List learner plug-ins
            python -m fairweigh.main --list-learners
        """
    )
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--list-learners", action="store_true", help="List available learners")
    sub = parser.add_subparsers(dest="command")

    def add_run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="Path to JSON run configuration")
        p.add_argument("--out", help="Output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="Seed (overrides config)")
        p.add_argument("--jobs", type=int, help="Worker threads for sweep rows and grid points")
        p.add_argument("--debug", action="store_true", default=argparse.SUPPRESS, help="Enable debug logging")

    add_run_flags(sub.add_parser("audit", help="Report all metrics for an unconstrained model"))
    train = sub.add_parser("train", help="Train under the configured constraints")
    add_run_flags(train)
    train.add_argument("--validate", action="store_true", help="Run validation checks on the report")
    sweep = sub.add_parser("sweep", help="Tune once per epsilon and write tradeoff.csv")
    add_run_flags(sweep)
    sweep.add_argument("--epsilons", required=True, help="Comma-separated epsilon values")
    sweep.add_argument("--validate", action="store_true", help="Run validation checks on the report")
    add_run_flags(sub.add_parser("compare-grid", help="Hill-climbing vs grid search"))

    synth = sub.add_parser("gen-synth", help="Write a planted-bias CSV")
    synth.add_argument("--out", required=True, help="CSV file to write")
    synth.add_argument("--n", type=int, default=SyntheticSpec.n, help="Number of rows")
    synth.add_argument("--groups", type=int, default=SyntheticSpec.groups, help="Number of groups")
    synth.add_argument("--variant", choices=VARIANTS, default=SyntheticSpec.variant,
                       help="sp: planted positive-rate gap; fdr: planted false discovery skew")
    synth.add_argument("--gap", type=float, default=SyntheticSpec.gap, help="Planted SP gap")
    synth.add_argument("--noise", type=float, default=SyntheticSpec.noise, help="Label noise std")
    synth.add_argument("--shift", type=float, default=SyntheticSpec.shift,
                       help="Label boundary of minority groups (fdr)")
    synth.add_argument("--minority-share", type=float, default=SyntheticSpec.minority_share,
                       help="Share of rows outside the first group (fdr)")
    synth.add_argument("--seed", type=int, default=SyntheticSpec.seed, help="Generator seed")
    synth.add_argument("--debug", action="store_true", default=argparse.SUPPRESS, help="Enable debug logging")

    return parser.parse_args(argv)


def parse_epsilons(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--epsilons must be a comma-separated list of numbers, got '{text}'")
    if not values:
        raise ConfigError("--epsilons is empty")
    return values


def list_learners() -> None:
    """Print available learner plug-ins."""
    learners = list_available_learners()
    if not learners:
        print("No learners found in learners/")
        return
    print("\n Available Learners:")
    print("=" * 60)
    for learner in learners:
        print(f"   {learner}")
    print()


def run_command(args: argparse.Namespace) -> int:
    """Load config, run one subcommand and print its text report."""
    if args.command == "gen-synth":
        spec = SyntheticSpec(n=args.n, groups=args.groups, variant=args.variant, gap=args.gap,
                             noise=args.noise, shift=args.shift,
                             minority_share=args.minority_share, seed=args.seed)
        report = cmd_gen_synth(spec, Path(args.out))
        print(json.dumps(report, indent=2))
        return EXIT_OK

    cfg = merge_configs(DEFAULT_CONFIG, load_config(args.config))
    cfg = merge_configs(cfg, {"seed": args.seed, "output.dir": args.out, "jobs": args.jobs})
    run = validate_config(cfg, require_constraints=args.command in _NEEDS_CONSTRAINTS)
    _LOG.info("Loaded config from %s", args.config)

    orch = Orchestrator(run)
    if args.command == "audit":
        report = orch.cmd_audit()
    elif args.command == "train":
        report = orch.cmd_train()
    elif args.command == "sweep":
        report = orch.cmd_sweep(parse_epsilons(args.epsilons))
    else:
        report = orch.cmd_compare_grid()

    print((orch.out_dir / "report.txt").read_text())
    if getattr(args, "validate", False):
        print(validate_report(report))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = parse_arguments(argv)

    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.list_learners:
        list_learners()
        return EXIT_OK
    if not args.command:
        _LOG.error("No command given. Use one of: audit, train, sweep, compare-grid, gen-synth")
        return EXIT_CONFIG

    try:
        return run_command(args)
    except FileNotFoundError as e:
        print(f"error: NotFound: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FairweighError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        _LOG.warning("Interrupted by user")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
