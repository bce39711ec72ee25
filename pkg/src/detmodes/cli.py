"""
Command-line driver.

    detmodes <subcommand> --spec run.yaml --out results/ [--seed N]
             [--set key=value ...]

Subcommands: simulate, diagnose, sync, critical-q, scaling, calibrate-cb,
export-spectra.  The subcommand fixes the experiment (overriding the spec
file's `experiment` key); --set overrides individual keys for sweeps.

Exit codes: 0 success, 2 spec error, 3 runtime error, 4 inconclusive
verdict (critical-q only).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import execute, export_spectra
from .runspec import SpecError, build_spec, parse_override, parse_spec

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_RUNTIME = 3
EXIT_INCONCLUSIVE = 4

RUN_COMMANDS = ("simulate", "diagnose", "sync", "critical-q", "scaling", "calibrate-cb")


def _add_run_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--spec", type=Path, default=None, help="YAML run specification")
    sub.add_argument("--out", type=Path, required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override the spec seed")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one spec key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detmodes",
        description="2D vorticity solver with dyadic-shell diagnostics and "
        "mode-replacement synchronization experiments",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in RUN_COMMANDS:
        sub = subs.add_parser(name, help=f"run the {name} pipeline")
        _add_run_arguments(sub)
    exp = subs.add_parser("export-spectra", help="shell-spectrum CSV from a checkpoint")
    exp.add_argument("checkpoint_dir", type=Path)
    exp.add_argument("out_csv", type=Path)
    exp.add_argument("--name", default="final", help="checkpoint base name")
    return parser


def _resolve_spec(args: argparse.Namespace):
    overrides = dict(parse_override(item) for item in args.overrides)
    overrides["experiment"] = args.command
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.spec is not None:
        return parse_spec(args.spec, overrides)
    return build_spec(overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "export-spectra":
        try:
            export_spectra(args.checkpoint_dir, args.name, args.out_csv)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK

    try:
        spec = _resolve_spec(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC

    try:
        manifest = execute(spec, args.out)
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    print(f"run complete: {args.out} ({len(manifest['files'])} files)")
    if manifest.get("inconclusive"):
        print("critical-q sweep contains inconclusive verdicts", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
