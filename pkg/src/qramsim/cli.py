"""Command-line entry point: ``python -m qramsim <command>``.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import (
    ConfigError,
    ExperimentConfig,
    atomic_write,
    bounds_rows,
    entropy_rows,
    fit_rows,
    fmt,
    read_csv,
    run_sweep,
    svg_chart,
    validation_suite,
    write_sweep,
)

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _out_dir(args, config: ExperimentConfig | None = None) -> str:
    if args.out:
        return args.out
    if os.environ.get("QRAMSIM_OUT"):
        return os.environ["QRAMSIM_OUT"]
    return config.out_dir if config is not None else "results"


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    workers = args.workers
    if workers is None and os.environ.get("QRAMSIM_WORKERS"):
        try:
            workers = int(os.environ["QRAMSIM_WORKERS"])
        except ValueError:
            raise ConfigError("QRAMSIM_WORKERS must be an integer") from None
    if workers is not None:
        overrides["workers"] = workers
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg


def cmd_sweep(args) -> int:
    cfg = _load(args)
    result = run_sweep(cfg, progress=lambda s: print(s, file=sys.stderr))
    csv_path, json_path = write_sweep(result, _out_dir(args, cfg))
    print(f"wrote {csv_path} and {json_path} ({len(result.rows)} rows, {result.elapsed:.1f} s)")
    if args.svg:
        fits = fit_rows(result.rows, min_logN=1)
        path = os.path.splitext(csv_path)[0] + ".svg"
        atomic_write(path, svg_chart(fits))
        print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    checks = validation_suite(seed=seed, quick=args.quick)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def cmd_fit(args) -> int:
    try:
        rows = read_csv(args.csv)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    fits = fit_rows(rows, args.min_logn)
    text = json.dumps(fits, indent=2) + "\n"
    out = _out_dir(args)
    stem = os.path.join(out, os.path.splitext(os.path.basename(args.csv))[0] + "_fit")
    atomic_write(stem + ".json", text)
    for f in fits:
        slope = "n/a" if f.get("slope") is None else f"{f['slope']:.3f}"
        print(f"{f['variant']} {f['channel']} eps={f['epsilon']}: slope {slope}")
    print(f"wrote {stem}.json")
    if args.svg:
        atomic_write(stem + ".svg", svg_chart(fits))
        print(f"wrote {stem}.svg")
    return EXIT_OK


def cmd_entropy(args) -> int:
    rows = entropy_rows(args.n, args.variant)
    lines = ["level,entropy,closed_form"]
    for r in rows:
        ref = "" if r["closed_form"] == "" else fmt(r["closed_form"])
        lines.append(f"{r['level']},{fmt(r['entropy'])},{ref}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out or os.environ.get("QRAMSIM_OUT"):
        path = os.path.join(_out_dir(args), f"entropy_{args.variant.upper()}_n{args.n}.csv")
        atomic_write(path, text)
    return EXIT_OK


def cmd_bounds(args) -> int:
    print(json.dumps(bounds_rows(_load(args)), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qramsim", description="Noisy QRAM simulation experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--workers", type=int, help="worker processes (env QRAMSIM_WORKERS)")
        sp.add_argument("--out", help="output directory (env QRAMSIM_OUT)")
        sp.add_argument("--svg", action="store_true", help="also write an SVG chart")

    sp = sub.add_parser("sweep", help="fidelity sweep over n and datasets")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate", help="oracle equivalence checks")
    common(sp)
    sp.add_argument("--quick", action="store_true", help="fewer cases and samples")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("fit", help="log-log scaling fit of a sweep CSV")
    sp.add_argument("csv")
    sp.add_argument("--min-logn", type=float, default=3.0)
    common(sp, config=False)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("entropy", help="router entropy per tree level")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--variant", default="BB3")
    common(sp, config=False)
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("bounds", help="analytic bounds for a config")
    common(sp)
    sp.set_defaults(func=cmd_bounds)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
