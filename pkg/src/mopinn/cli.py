"""Command-line entry point.

Subcommands:
  run       execute one experiment config, write artifacts to --out
  compare   run ws/mgda/nsga2 on shared data and report hypervolumes
  selftest  validate the optimizers on a problem with a known front

Exit codes: 0 success, 1 every run failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, moo, svgplot
from .errors import ConfigurationError, MopinnError
from .toy import BiQuadratic
from .train import SchedulerConfig, TrainConfig


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None


def _cmd_run(args) -> int:
    raw = _load_json(args.config)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    config = harness.config_from_dict(raw)
    report = harness.run_experiment(config, args.out)
    for line in report.failures:
        print(f"failed: {line}", file=sys.stderr)
    if report.all_failed:
        print("all runs failed", file=sys.stderr)
        return 1
    print(f"wrote {len(report.filtered)} non-dominated points "
          f"({len(report.raw)} raw) to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    raw = _load_json(args.config)
    methods = raw.pop("methods", None)
    if not methods:
        raise ConfigurationError('compare config needs a "methods" section')
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    base = harness.config_from_dict({**raw, "method": "ws"})
    report = harness.compare_methods(base, methods, args.out)
    for method, hv in report.hypervolumes.items():
        print(f"{method}: hypervolume={hv:.6e} "
              f"front={len(report.fronts[method])} "
              f"dominated={report.dominated_count[method]}")
    for line in report.warnings:
        print(f"warning: {line}", file=sys.stderr)
    return 0


def _cmd_selftest(args) -> int:
    """End-to-end optimizer check against a closed-form front."""
    problem = BiQuadratic(a=[0.8, 0.2], b=[-0.3, 0.9])
    config = TrainConfig(
        learning_rate=0.01, epochs=8000, checkpoint_every=500,
        scheduler=SchedulerConfig(factor=0.5, patience=300, min_lr=1e-10))
    ok = True
    points = []

    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        _, point = moo.minimize_weighted(problem, alpha, seed=3, config=config)
        err = float(np.linalg.norm(point.params - problem.ws_minimizer(alpha)))
        good = err < 1e-3
        ok &= good
        points.append(point)
        print(f"ws alpha={alpha:<5} parameter error {err:.2e} "
              f"{'ok' if good else 'FAIL'}")

    for seed in range(5):
        _, point = moo.minimize_mgda(problem, seed=100 + seed, config=config)
        dist = problem.distance_to_segment(point.params)
        measure = moo.critical_measure_at(problem, point.params)
        good = dist < 1e-3 and measure < 1e-6
        ok &= good
        points.append(point)
        print(f"mgda seed={100 + seed} segment distance {dist:.2e} "
              f"criticality {measure:.2e} {'ok' if good else 'FAIL'}")

    image_error = max(
        float(np.min(np.linalg.norm(problem.front_points(4096)
                                    - p.objectives, axis=1)))
        for p in points)
    good = image_error < 1e-3
    ok &= good
    print(f"front image within {image_error:.2e} of the exact front "
          f"{'ok' if good else 'FAIL'}")

    if args.out:
        import os
        os.makedirs(args.out, exist_ok=True)
        moo.save_front_csv(os.path.join(args.out, "selftest_front.csv"), points)
        marks = [(p.loss_data, p.loss_physics, p.method) for p in points]
        with open(os.path.join(args.out, "selftest_front.svg"), "w") as fh:
            fh.write(svgplot.emit_svg(
                marks, "linear", svgplot.SvgStyle(title="selftest front",
                                                  xlabel="loss 1",
                                                  ylabel="loss 2")))
    print("selftest " + ("passed" if ok else "FAILED"))
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mopinn",
        description="Multiobjective training experiments for "
                    "physics-informed networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--workers", type=int)
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare methods on shared data")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--workers", type=int)
    p_cmp.set_defaults(func=_cmd_compare)

    p_self = sub.add_parser("selftest",
                            help="check optimizers against a known front")
    p_self.add_argument("--out")
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except MopinnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
