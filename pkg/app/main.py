"""
Triwell - command-line entry point.
Nonequilibrium simulator for a triple-well system coupled to a reservoir.

    python -m app.main <scenario> --config <path> [--output <dir>] [--parallel]
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from app import __version__
from app.config import get_settings, parse_config, render_config
from app.errors import ConfigError, TriwellError
from app.models import RunConfig, Scenario
from app.services.pipeline import ScenarioPipeline
from app.storage import ResultStore

logger = logging.getLogger(__name__)


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="triwell", description="Triple-well + reservoir quench simulator.")
    parser.add_argument("scenario", choices=[s.value for s in Scenario], help="What to run.")
    parser.add_argument("--config", required=True, type=Path, help="Flat 'key = value' run file.")
    parser.add_argument("--output", type=Path, default=None, help="Output directory (overrides output_dir).")
    parser.add_argument("--parallel", action="store_true", help="Solve sweep points on worker threads.")
    parser.add_argument("--log-level", default=None, help="Logging level (default from TRIWELL_LOG_LEVEL).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser.parse_args(argv)


def run(cfg: RunConfig, parallel: bool = False) -> int:
    """Run one scenario into cfg.output_dir and return the process exit status."""
    try:
        store = ResultStore(cfg.output_dir)
        store.write_text("config.resolved", render_config(cfg))

        pipeline = ScenarioPipeline(cfg, store=store, parallel=parallel)
        pipeline.run()
    except TriwellError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unhandled error: {e}")
        return 1

    if pipeline.checks_failed:
        return 1
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    settings = get_settings()

    # Configure logging
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        cfg = parse_config(text, source=str(args.config))
    except ConfigError as e:
        logger.error(f"ConfigError: {e}")
        return e.exit_code

    update = {"scenario": Scenario(args.scenario)}
    if args.output is not None:
        update["output_dir"] = str(args.output)
    return run(cfg.model_copy(update=update), parallel=args.parallel)


# ============================================================
# Main Entry Point
# ============================================================

if __name__ == "__main__":
    sys.exit(main())
