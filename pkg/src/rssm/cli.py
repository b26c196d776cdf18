"""Command line entry point: ``rssm <subcommand> --config PATH [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig
from .experiments import SUBCOMMANDS
from .ifs import InvalidSystemError
from .plotdata import emit_plot_data
from .realization import BudgetExceededError
from .spectral import RecursionDepthError

log = logging.getLogger("rssm")

EXIT_OK, EXIT_FAILURE, EXIT_VALIDATION, EXIT_BUDGET = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rssm", description="Randomly perturbed self-similar measures on the line.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML or JSON experiment file")
        p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        p.add_argument("--trials", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--threads", type=int)
    p = sub.add_parser("plot-data", help="emit .dat columns next to result CSVs")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _error(kind: str, message: str, code: int, out: Path | None) -> int:
    record = {"error": kind, "message": message, "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(record) + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "plot-data":
        try:
            for path in emit_plot_data(args.out):
                log.info("wrote %s", path)
        except FileNotFoundError as exc:
            return _error("missing_input", str(exc), EXIT_VALIDATION, None)
        return EXIT_OK
    overrides = {"seed": args.seed, "trials": args.trials, "depth": args.depth,
                 "threads": args.threads}
    if args.out is not None:
        overrides["output"] = str(args.out)
    try:
        if args.config is not None:
            cfg = ExperimentConfig.load(args.config, **overrides)
        else:
            cfg = ExperimentConfig.from_dict({}, **overrides)
    except OSError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION, args.out)
    except (InvalidSystemError, ValueError, TypeError) as exc:
        return _error("validation", str(exc), EXIT_VALIDATION, args.out)
    out = Path(cfg.raw["output"])
    try:
        SUBCOMMANDS[args.command](cfg, out)
    except BudgetExceededError as exc:
        return _error("budget_exceeded", str(exc), EXIT_BUDGET, out)
    except InvalidSystemError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION, out)
    except RecursionDepthError as exc:
        return _error("recursion_depth", str(exc), EXIT_FAILURE, out)
    log.info("%s finished; results in %s (config %s)", args.command, out, cfg.digest[:12])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
