"""Command-line entry point for the experiment runner.

Subcommands::

    excursion-lab run --config <path> [--seed <u64>] [--workers <n>]
    excursion-lab validate --config <path>
    excursion-lab field-dump --config <path> [--seed <u64>] [--workers <n>]

Everything about an experiment lives in the JSON config; the flags only
select the config file, override the master seed, and set the worker
count, so a config plus a seed fully determines the outputs.

Exit codes: 0 success, 2 validation failure, 3 runtime failure,
4 counterexample found (rsw-fuzz only).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    ExperimentConfig,
    TOOL_VERSION,
    run,
    validate,
)

__all__ = [
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_RUNTIME",
    "EXIT_COUNTEREXAMPLE",
    "main",
]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_COUNTEREXAMPLE = 4


def _seed_arg(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return value


def _workers_arg(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return value


def _load_config(path):
    """Parse the config file; diagnostics are returned, not raised."""
    if not Path(path).is_file():
        return None, [f"config: no such file: {path}"]
    try:
        return ExperimentConfig.from_file(path), []
    except ConfigError as exc:
        return None, exc.diagnostics


def _cmd_validate(args):
    cfg, diagnostics = _load_config(args.config)
    if cfg is not None:
        diagnostics = validate(cfg)
    for diag in diagnostics:
        print(diag)
    if diagnostics:
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def _cmd_run(args, force_kind=None):
    cfg, diagnostics = _load_config(args.config)
    if cfg is None:
        for diag in diagnostics:
            print(diag, file=sys.stderr)
        return EXIT_VALIDATION
    cfg = cfg.with_overrides(master_seed=args.seed, workers=args.workers)
    if force_kind is not None and cfg.data.get("kind") != force_kind:
        data = dict(cfg.data)
        data["kind"] = force_kind
        cfg = ExperimentConfig(data=data, source=cfg.source)
    diagnostics = validate(cfg)
    if diagnostics:
        for diag in diagnostics:
            print(diag, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        manifest = run(cfg)
    except ConfigError as exc:
        for diag in exc.diagnostics:
            print(diag, file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failure: partial outputs already removed
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_dir = Path(cfg.out_dir)
    for name in sorted(manifest.outputs):
        print(out_dir / name)
    print(out_dir / "manifest.json")
    n_counterexamples = int(manifest.notes.get("n_counterexamples", 0))
    if cfg.kind == "rsw-fuzz" and n_counterexamples > 0:
        print(f"{n_counterexamples} counterexample(s) found", file=sys.stderr)
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="excursion-lab",
        description="Deterministic experiments on Gaussian excursion-set "
        "percolation.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {TOOL_VERSION}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True, help="path to the JSON config")
    run_p.add_argument("--seed", type=_seed_arg, default=None,
                       help="override mc.master_seed")
    run_p.add_argument("--workers", type=_workers_arg, default=None,
                       help="override mc.workers")
    run_p.set_defaults(handler=_cmd_run)

    val_p = sub.add_parser("validate", help="check a config, print diagnostics")
    val_p.add_argument("--config", required=True, help="path to the JSON config")
    val_p.set_defaults(handler=_cmd_validate)

    fd_p = sub.add_parser(
        "field-dump", help="sample one field to the binary field format"
    )
    fd_p.add_argument("--config", required=True, help="path to the JSON config")
    fd_p.add_argument("--seed", type=_seed_arg, default=None,
                      help="override mc.master_seed")
    fd_p.add_argument("--workers", type=_workers_arg, default=None,
                      help="override mc.workers")
    fd_p.set_defaults(handler=lambda args: _cmd_run(args, force_kind="field-dump"))

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
