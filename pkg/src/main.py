import os
import sys
import argparse
import logging
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .flow import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, create_main_flow
from .utils.config import MODES, parse_config
from .utils.errors import ConfigError, OttoError

logger = logging.getLogger("main")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str = "info") -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    log_dir = os.getenv("LOG_DIR")
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(log_dir, "otto.log")))
    logging.basicConfig(level=getattr(logging, level.upper()), format=LOG_FORMAT, handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Sudden quantum Otto refrigerator - limit cycles and cycle-time sweeps")
    parser.add_argument("--preset", type=str, help="Bundled parameter preset, e.g. coupled-spin")
    parser.add_argument("--config", type=str, help="YAML config file (overrides the preset)")
    parser.add_argument("--mode", choices=MODES, help="What to run (default: cycle)")
    parser.add_argument("--tau", type=float, help="Cycle time for cycle mode")
    parser.add_argument("--tau-min", type=float, help="Smallest cycle time of the sweep grid")
    parser.add_argument("--tau-max", type=float, help="Largest cycle time of the sweep grid")
    parser.add_argument("--tau-count", type=int, help="Number of sweep grid points")
    parser.add_argument("--tau-spacing", choices=("log", "linear"), help="Sweep grid spacing")
    parser.add_argument("--format", choices=("csv", "json"), help="Output file format")
    parser.add_argument("--out", "-o", type=str, help="Output file path")
    parser.add_argument("--samples-per-segment", type=int, help="Trajectory samples per segment")
    parser.add_argument("--workers", type=int, help="Sweep worker threads (default: $OTTO_WORKERS or 1)")
    parser.add_argument("--dephase", action="store_true", default=None, help="Zero L and C at every segment boundary")
    parser.add_argument("--validate", action="store_true", help="Shortcut for --mode validate")
    parser.add_argument("--corrupt-eeq-sign", action="store_true", default=None, help=argparse.SUPPRESS)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    mode = "validate" if args.validate else args.mode
    verbosity = "debug" if args.verbose else "warning" if args.quiet else None
    return {
        "mode": mode,
        "params.tau_cycle": args.tau,
        "sweep.tau_min": args.tau_min,
        "sweep.tau_max": args.tau_max,
        "sweep.tau_count": args.tau_count,
        "sweep.tau_spacing": args.tau_spacing,
        "output.format": args.format,
        "output.path": args.out,
        "samples_per_segment": args.samples_per_segment,
        "workers": args.workers,
        "dephase": args.dephase,
        "verbosity": verbosity,
        "debug.flip_eeq_sign": args.corrupt_eeq_sign,
    }


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one limit cycle, a cycle-time sweep, the landmark table or the self-checks.

    Returns the process exit code: 0 success, 1 failed checks or solver errors,
    2 configuration errors, 3 unwritable output.
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging("debug" if args.verbose else "warning" if args.quiet else "info")

    try:
        config = parse_config(args.config, overrides_from_args(args), args.preset)
    except ConfigError as e:
        logger.error(f"Configuration error at {e.field_path}: {e}")
        return EXIT_CONFIG
    logging.getLogger().setLevel(getattr(logging, config.verbosity.upper()))

    shared: Dict[str, Any] = {"config": config, "exit_code": EXIT_OK}
    logger.info(f"Mode: {config.mode}, tau_cycle: {config.params.tau_cycle}")
    try:
        create_main_flow().run(shared)
    except OttoError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_VALIDATION
    return shared["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
