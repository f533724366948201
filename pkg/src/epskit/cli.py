"""``epskit`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 domain or solver error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner
from .config import bundled_config_path, load_config, parse_config
from .entanglement import read_records_csv
from .errors import ConfigError, EpskitError

COMMANDS = ("design", "sweep", "simulate", "stability", "analyze")
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epskit",
        description="Design and simulation toolkit for a displacer-based entangled photon source.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML run configuration (default: the bundled reference config)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config key; may be repeated")
    parser.add_argument("--out", help="output directory (default: run.out from the config)")
    parser.add_argument("--seed", type=_u64, help="master seed for simulate (default: run.seed)")
    parser.add_argument("--materials", help="materials database TOML replacing the bundled one")
    parser.add_argument("--input", help="count-record CSV for analyze")
    parser.add_argument("--quiet", action="store_true", help="do not echo the summary to stdout")
    return parser


def _load(args):
    overrides = list(args.overrides)
    if args.materials:
        overrides.append(f"run.materials={_toml_str(args.materials)}")
    if args.out:
        overrides.append(f"run.out={_toml_str(args.out)}")
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.config:
        return load_config(args.config, overrides)
    text = bundled_config_path().read_text(encoding="utf-8")
    return parse_config(text, overrides, origin="paper.cfg")


def _toml_str(value):
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def run(args):
    cfg = _load(args)
    if args.command == "design":
        artifacts, summary = runner.design(cfg)
    elif args.command == "sweep":
        artifacts, summary = runner.sweep(cfg)
    elif args.command == "simulate":
        artifacts, summary = runner.simulate(cfg, cfg["run"]["seed"])
    elif args.command == "stability":
        artifacts, summary = runner.stability(cfg)
    else:
        if not args.input:
            raise ConfigError("analyze needs --input PATH")
        with open(args.input, newline="", encoding="utf-8") as fh:
            try:
                records = read_records_csv(fh)
            except ValueError as exc:
                raise EpskitError(f"{args.input}: {exc}", module="analyze") from None
        artifacts, summary = runner.analyze(cfg, records, args.input)

    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(artifacts):
        (out / name).write_text(artifacts[name], encoding="utf-8", newline="\n")
    if not args.quiet:
        sys.stdout.write(summary)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"epskit: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EpskitError as exc:
        print(f"epskit: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"epskit: [{args.command}] {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"epskit: [io] {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
