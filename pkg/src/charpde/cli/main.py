"""Command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from charpde.cli.config import ConfigError, RunConfig, parse_config
from charpde.cli.run import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, compare, run
from charpde.moc import ErrorBoundInputs, error_bound

logger = logging.getLogger("charpde")


def load_config(path: Path) -> RunConfig:
    return parse_config(path.read_text())


def _resolve_out(cfg: RunConfig, path: Path, override: str | None) -> Path:
    if override:
        return Path(override)
    out = Path(cfg.output_dir)
    return out if out.is_absolute() else path.parent / out


def _print_report(report) -> None:
    for metric, value in report.rows():
        print(f"{metric},{value}")
    for r in report.results:
        logger.info("%s finished in %.3f s", r.method, r.wall_time)


def cmd_run(args: argparse.Namespace, methods=None) -> int:
    path = Path(args.config)
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _resolve_out(cfg, path, args.output)
    report = compare(cfg, out) if methods == "compare" else run(cfg, out)
    _print_report(report)
    for r in report.results:
        if r.exit_code:
            print(f"{r.method}: {r.status}", file=sys.stderr)
    return report.exit_code


def cmd_bound(args: argparse.Namespace) -> int:
    node, state = error_bound(ErrorBoundInputs(args.t_hat, args.f_hat, args.dx, args.dw, args.dt))
    print(f"node_bound,{node!r}")
    print(f"state_bound,{state!r}")
    return EXIT_OK


def _sweep_one(path: str, out_root: str | None) -> tuple[str, int]:
    p = Path(path)
    try:
        cfg = load_config(p)
    except ConfigError as exc:
        print(f"{p}: {exc}", file=sys.stderr)
        return path, EXIT_CONFIG
    base = Path(out_root) if out_root else _resolve_out(cfg, p, None)
    return path, run(cfg, base / p.stem).exit_code


def cmd_sweep(args: argparse.Namespace) -> int:
    paths = sorted(str(p) for p in Path(args.directory).glob("*.cfg"))
    if not paths:
        print(f"no *.cfg files in {args.directory}", file=sys.stderr)
        return EXIT_FAILURE
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, paths, [args.output] * len(paths)))
    else:
        results = [_sweep_one(p, args.output) for p in paths]
    for path, code in results:
        print(f"{path},{code}")
    return EXIT_OK if all(code == EXIT_OK for _, code in results) else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charpde",
        description="Method-of-characteristics and method-of-lines solvers for "
        "first-order quasilinear transport problems.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured method")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides output_dir)")

    p = sub.add_parser("compare", help="run moc and both method-of-lines variants")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides output_dir)")

    p = sub.add_parser("bound", help="print the a priori error bounds")
    p.add_argument("--t-hat", type=float, required=True, help="upper bound on the transit time")
    p.add_argument("--f-hat", type=float, required=True, help="Lipschitz constant of (v, f)")
    p.add_argument("--dx", type=float, required=True)
    p.add_argument("--dw", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)

    p = sub.add_parser("sweep", help="run every *.cfg file in a directory")
    p.add_argument("directory")
    p.add_argument("-j", "--jobs", type=int, default=1)
    p.add_argument("-o", "--output", help="root output directory, one subdirectory per config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_run(args, "compare")
    if args.command == "bound":
        try:
            return cmd_bound(args)
        except ValueError as exc:
            print(exc, file=sys.stderr)
            return EXIT_CONFIG
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
