"""Command-line entry point.

Exit codes: 0 success, 1 domain error (sector, mapping, estimation, fit),
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .fci import solve_fci, spectrum_csv
from .fcidump import read_fcidump

__all__ = ["main", "EXIT_OK", "EXIT_DOMAIN", "EXIT_CONFIG"]

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("defectvqe")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="defectvqe", description="Noisy VQE/QSE toolkit for spin-defect active spaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a TOML run configuration")
    r.add_argument("config", type=Path)
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config key (repeatable)")
    r.add_argument("-o", "--output", help="output directory (same as --set run.output=...)")

    v = sub.add_parser("validate", help="check a configuration and print it fully resolved")
    v.add_argument("config", type=Path)
    v.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")

    f = sub.add_parser("fci", help="exact spectrum of an FCIDUMP file as CSV on stdout")
    f.add_argument("fcidump", type=Path)
    f.add_argument("--electrons", type=int, required=True)
    f.add_argument("--sz", type=float, default=None)
    return p


def _overrides(args: argparse.Namespace) -> list[str]:
    extra = list(args.overrides)
    if getattr(args, "output", None):
        extra.append(f"run.output={json.dumps(args.output)}")
    return extra


def _run(args: argparse.Namespace) -> int:
    from .pipeline import run

    cfg = load_config(args.config, _overrides(args))
    result = run(cfg)
    for path in result.files:
        print(path)
    return EXIT_OK


def _validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _fci(args: argparse.Namespace) -> int:
    if not args.fcidump.is_file():
        raise ConfigError([(str(args.fcidump), "file does not exist")])
    h = read_fcidump(args.fcidump)
    sol = solve_fci(h, args.electrons, args.sz)
    sys.stdout.write(spectrum_csv(sol.energies))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "validate": _validate, "fci": _fci}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(exc.as_json(), file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
