"""``canopy-plan`` command line interface.

Exit codes: 0 success, 1 module error, 2 configuration error.  Errors are
reported as a JSON object on stderr.  Artifacts are only written once a
command has fully succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import CanopyError, ConfigError
from .gateway import TextGateway
from .pipeline import STAGES, Scenario, dumps

log = logging.getLogger("canopy_plan")

EXIT_OK, EXIT_MODULE, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canopy-plan", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=(*STAGES, "report"))
    parser.add_argument("--config", required=True,
                        help="scenario YAML file, or 'bundled' for the packaged example")
    parser.add_argument("--output-dir", type=Path)
    parser.add_argument("--sector")
    parser.add_argument("--holdout", type=int)
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--grid-steps", type=int)
    parser.add_argument("--seasonal-period", type=int)
    parser.add_argument("--plant-year", type=int)
    parser.add_argument("--merge-overlaps", action="store_true", default=None)
    parser.add_argument("--offline", action="store_true",
                        help="ignore GATEWAY_URL and always use the template text")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _error(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_status": code}
    if isinstance(exc, ConfigError) and exc.field:
        payload["field"] = exc.field
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
    return code


def _write(output_dir: Path, files: dict[str, str]) -> None:
    """Write every artifact or, on failure, remove the ones already written."""
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, text in files.items():
            path = output_dir / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        "output_dir": str(args.output_dir) if args.output_dir else None,
        "sector": args.sector,
        # an explicit sector also narrows the backtest to that sector
        "backtest_sectors": [args.sector] if args.sector else None,
        "holdout": args.holdout,
        "horizon": args.horizon,
        "grid_steps": args.grid_steps,
        "seasonal_period": args.seasonal_period,
        "plant_year": args.plant_year,
        "merge_overlaps": args.merge_overlaps,
    }
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        return _error(exc, EXIT_CONFIG)

    gateway = None if args.offline else TextGateway.from_env()
    scenario = Scenario(config, gateway)
    try:
        if args.subcommand == "report":
            section, files = scenario.report()
            files = {**files, "summary.json": dumps(section)}
        else:
            section, files = scenario.run_stage(args.subcommand)
            files = {**files, f"{args.subcommand}.json": dumps(section)}
    except ConfigError as exc:
        return _error(exc, EXIT_CONFIG)
    except CanopyError as exc:
        return _error(exc, EXIT_MODULE)
    except OSError as exc:
        return _error(exc, EXIT_MODULE)

    try:
        _write(config.output_dir, files)
    except OSError as exc:
        return _error(exc, EXIT_MODULE)
    log.info("wrote %d artifacts to %s", len(files), config.output_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
