# src/__main__.py

import logging
import sys

from src.cli.commands import report_failure, run
from src.cli.config import COMMANDS, RunConfig, build_parser
from src.core.errors import UsageError
from src.core.settings import SettingsManager

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_SOLVER_FLAGS = ("restarts", "damping", "tol", "max_iter", "lambda_window")

logger = logging.getLogger(__name__)


def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def _command_of(argv):
    return next((a for a in argv if a in COMMANDS), None)


def save_defaults(ns, settings):
    """Persist the run and solver flags given on this command line."""
    run_section = {key: getattr(ns, key) for key in ("format", "threads") if getattr(ns, key) is not None}
    solver = {key: getattr(ns, key, None) for key in _SOLVER_FLAGS}
    solver = {key: list(val) if isinstance(val, tuple) else val for key, val in solver.items() if val is not None}
    if settings.save_config(run=run_section, solver=solver):
        logger.info("Saved defaults to %s", settings.config_path)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        setup_logging()
        parser.print_usage(sys.stderr)
        return report_failure(exc, _command_of(argv))
    setup_logging(ns.verbose, ns.quiet)

    settings = SettingsManager()
    if ns.save_defaults:
        save_defaults(ns, settings)
    # Settings fill whatever the command line left open.
    if ns.format is None:
        ns.format = settings.run["format"]
    if ns.threads is None:
        ns.threads = int(settings.run["threads"])
    if ns.seed is None:
        ns.seed = 0
    return run(RunConfig.from_args(ns), settings)


if __name__ == "__main__":
    sys.exit(main())
