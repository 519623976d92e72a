"""Command-line interface.

Subcommands: toy, cv, align, noisedemo, weights.  Flags can be overridden
by a JSON config file passed via --config (JSON values take precedence).
The token `inf` in --p-grid denotes the uniform-weights limit.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .harness import (CV_C_GRID, TOY_C_GRID, TOY_P_GRID, BASE_P_GRID,
                      RunConfig, emit_align, emit_cv, emit_noisedemo,
                      emit_toy, emit_weights, parse_p, run_align, run_cv,
                      run_noisedemo, run_toy, run_weights)


def _split_paths(text: str):
    return tuple(p for p in text.split(",") if p)


def _parse_grid(text: str, kind):
    return tuple(kind(tok) for tok in text.split(",") if tok)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpmkl",
        description="lp-norm multiple kernel learning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=None,
                       help="JSON file whose values override the flags")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers over repetitions/classes")

    p = sub.add_parser("toy", help="run a bundled controlled experiment")
    p.add_argument("--experiment", type=int, choices=(1, 2), required=True)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--p-grid", default=",".join(
        "inf" if math.isinf(x) else f"{x:g}" for x in TOY_P_GRID))
    p.add_argument("--c-grid", default=",".join(f"{c:g}" for c in TOY_C_GRID))
    p.add_argument("--width-scale", type=float, default=1.0)
    add_common(p)

    p = sub.add_parser("cv", help="cross-validate precomputed kernels")
    p.add_argument("--kernels", required=True,
                   help="comma-separated kernel files (KMX1 or CSV)")
    p.add_argument("--labels", required=True,
                   help="comma-separated label files (one class each)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--p-grid", default=",".join(
        "inf" if math.isinf(x) else f"{x:g}" for x in BASE_P_GRID))
    p.add_argument("--c-grid", default=",".join(f"{c:g}" for c in CV_C_GRID))
    add_common(p)

    p = sub.add_parser("align", help="alignment matrix and KTA profiles")
    p.add_argument("--kernels", required=True)
    p.add_argument("--labels", default="")
    add_common(p)

    p = sub.add_parser("noisedemo", help="noise-replicate averaging demo")
    p.add_argument("--reps", type=int, default=50, help="number of seeds")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--noise-level", type=float, default=0.5)
    p.add_argument("--c-grid", default=",".join(f"{c:g}" for c in TOY_C_GRID))
    add_common(p)

    p = sub.add_parser("weights", help="export fitted kernel weights")
    p.add_argument("--kernels", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--p-grid", default=",".join(
        "inf" if math.isinf(x) else f"{x:g}" for x in BASE_P_GRID))
    p.add_argument("--c-grid", default=",".join(f"{c:g}" for c in CV_C_GRID))
    p.add_argument("--bins", type=int, default=20)
    add_common(p)

    return parser


def _config_from_args(args) -> RunConfig:
    values = {
        "seed": args.seed,
        "out_dir": args.out,
        "jobs": args.jobs,
    }
    if args.command == "toy":
        values.update(
            task=f"toy{args.experiment}",
            repetitions=args.reps,
            p_grid=_parse_grid(args.p_grid, parse_p),
            C_grid=_parse_grid(args.c_grid, float),
            width_scale=args.width_scale,
        )
    elif args.command == "cv":
        values.update(
            task="cv",
            kernel_paths=_split_paths(args.kernels),
            labels_paths=_split_paths(args.labels),
            folds=args.folds,
            p_grid=_parse_grid(args.p_grid, parse_p),
            C_grid=_parse_grid(args.c_grid, float),
        )
    elif args.command == "align":
        values.update(
            task="align",
            kernel_paths=_split_paths(args.kernels),
            labels_paths=_split_paths(args.labels),
        )
    elif args.command == "noisedemo":
        values.update(
            task="noisedemo",
            repetitions=args.reps,
            noise_replicates=args.replicates,
            noise_level=args.noise_level,
            C_grid=_parse_grid(args.c_grid, float),
        )
    elif args.command == "weights":
        values.update(
            task="weights",
            kernel_paths=_split_paths(args.kernels),
            labels_paths=_split_paths(args.labels),
            p_grid=_parse_grid(args.p_grid, parse_p),
            C_grid=_parse_grid(args.c_grid, float),
            hist_bins=args.bins,
        )
    if args.config:
        with open(args.config, "r", encoding="ascii") as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            if key == "p_grid":
                value = tuple(parse_p(str(tok)) for tok in value)
            elif key in ("C_grid", "kernel_paths", "labels_paths"):
                value = tuple(value)
            values[key] = value
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _config_from_args(args)
    out = config.out_dir
    if config.task in ("toy1", "toy2"):
        result = run_toy(1 if config.task == "toy1" else 2, config)
        emit_toy(result, out)
        for name, report in result.reports.items():
            print(f"{name}: AP {100 * report.mean:.2f} +- {100 * report.std:.2f}")
    elif config.task == "cv":
        result = run_cv(config)
        emit_cv(result, out)
        for cls in result.classes:
            print(f"{cls.class_name}: selected p={cls.selected_p:g} "
                  f"C={cls.selected_C:g} "
                  f"AP {100 * cls.selected_report.mean:.2f}")
    elif config.task == "align":
        result = run_align(config)
        emit_align(result, config, out)
        print(f"wrote alignment matrix for {len(result.kernel_names)} kernels")
    elif config.task == "noisedemo":
        result = run_noisedemo(config)
        emit_noisedemo(result, out)
        for name, report in result.reports.items():
            print(f"{name}: AP {100 * report.mean:.2f} +- {100 * report.std:.2f}")
    elif config.task == "weights":
        result = run_weights(config)
        emit_weights(result, out)
        print(f"wrote {len(result.betas)} weights")
    print(f"outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
