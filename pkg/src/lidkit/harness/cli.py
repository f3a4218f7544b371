"""Command line interface: ``lidkit {sample,estimate,sweep,verify,demo-sde}``.

Exit codes: 0 on success, 2 on a configuration error, 3 when a
verification check fails.
"""

import argparse
import csv
import dataclasses
import io
import json
import sys

import numpy as np

from .. import geometry as geo
from ..exceptions import ConfigError, LidkitError
from .config import ESTIMATORS, load_config
from .sde import reverse_sde_demo
from .sweep import run_sweep
from .verify import SUITES, verify_theorems

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _common(p, config_required=False):
    p.add_argument("--config", required=config_required, metavar="PATH", help="experiment file")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--out", metavar="PATH", help="write results here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker threads")


def _load(args):
    cfg = load_config(args.config, seed=args.seed)
    if args.format:
        cfg.format = args.format
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.jobs = args.jobs
    return cfg


def cmd_sample(args):
    cfg = _load(args)
    if args.n < 1:
        raise ConfigError("-n must be at least 1")
    X = geo.sample(cfg.density, args.n, np.random.SeedSequence([cfg.seed, 0x5A]))
    comp = [cfg.density.manifold.component_of(x) for x in X]
    if cfg.format == "json":
        text = json.dumps({"points": X.tolist(), "component_index": comp}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(X.shape[1])] + ["component_index"])
        for x, c in zip(X, comp):
            w.writerow([repr(float(v)) for v in x] + [c])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_estimate(args):
    cfg = _load(args)
    try:
        point = np.array([float(v) for v in args.point.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"--point: {exc}") from exc
    try:
        q = geo.query_point(cfg.density.manifold, point)
    except (LidkitError, ValueError) as exc:
        raise ConfigError(f"query point rejected: {exc}") from exc
    lo, hi = cfg.schedule.delta_range()
    if not lo <= args.delta <= hi:
        raise ConfigError(f"delta {args.delta} outside schedule range [{lo}, {hi}]")
    cfg = dataclasses.replace(cfg, estimators=(args.estimator,), deltas=np.array([args.delta]), queries=[q])
    res = run_sweep(cfg)
    _emit(res.dump(cfg.format), args.out)
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    res = run_sweep(cfg)
    _emit(res.dump(cfg.format), args.out or cfg.output)
    return EXIT_OK


def cmd_verify(args):
    report = verify_theorems(tuple(args.suite) if args.suite else SUITES)
    fmt = args.format or "json"
    _emit(report.to_json() if fmt == "json" else report.to_csv(), args.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.suite}: {c.name} observed={c.observed:.6g} "
              f"target={c.target:.6g} tol={c.tolerance:.1e}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_demo_sde(args):
    if args.config:
        cfg = _load(args)
        density, schedule, seed = cfg.density, cfg.schedule, cfg.seed
    else:
        from ..schedule import VESchedule

        density, schedule = geo.make_point_mass([0.0]), VESchedule()
        seed = 0 if args.seed is None else args.seed
    if not isinstance(density, geo.Empirical):
        raise ConfigError("demo-sde needs a 'points' or 'point_mass' density")
    try:
        res = reverse_sde_demo(density, schedule, steps=args.steps, n=args.n, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    summary = {
        "n": int(len(res.samples)),
        "steps": args.steps,
        "eps_stop": res.eps_stop,
        "sliced_wasserstein": None if res.distance_undefined else res.sliced_wasserstein,
        "distance_undefined": res.distance_undefined,
        "sample_mean": res.samples.mean(axis=0).tolist() if len(res.samples) else None,
        "sample_var": res.samples.var(axis=0, ddof=1).tolist() if len(res.samples) > 1 else None,
        "target_var": schedule.sigma(res.eps_stop) ** 2,
    }
    if (args.format or "json") == "json":
        text = json.dumps(summary, indent=1) + "\n"
    else:
        text = "key,value\n" + "".join(f"{k},{json.dumps(v)}\n" for k, v in summary.items())
    _emit(text, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="lidkit", description="Local intrinsic dimension estimation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw points from the configured density")
    _common(p, config_required=True)
    p.add_argument("-n", type=int, default=1000)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="one estimator at one point")
    _common(p, config_required=True)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--estimator", choices=ESTIMATORS, default="flipd")
    p.add_argument("--delta", type=float, default=-6.0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="run every estimator over the configured grid")
    _common(p, config_required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run numerical verification suites")
    _common(p)
    p.add_argument("--suite", action="append", choices=SUITES, help="repeatable; default all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo-sde", help="reverse-SDE sampling with the exact mixture score")
    _common(p)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("-n", type=int, default=10_000)
    p.set_defaults(func=cmd_demo_sde)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
