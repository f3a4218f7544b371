"""Sweep execution: one pure task per (query point, delta, estimator)."""

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from ..convolve import ConvolutionOracle
from ..estimators import ball_count_regress, flipd, lidl_regress, uniform_slope
from ..exceptions import LidkitError
from ..geometry import sample
from ..score import NumericScore, score_field_for

COLUMNS = ("point_id", "component_index", "true_lid", "delta", "estimator", "value", "stderr", "error", "runtime_ms")


@dataclass(frozen=True)
class Row:
    point_id: int
    component_index: int
    true_lid: int
    delta: float
    estimator: str
    value: Optional[float]
    stderr: Optional[float]
    error: str = ""
    runtime_ms: Optional[float] = None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class SweepResult:
    rows: List[Row]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self):
        return json.dumps([asdict(r) for r in self.rows], indent=1) + "\n"

    def dump(self, fmt="csv"):
        return self.to_csv() if fmt == "csv" else self.to_json()

    def values(self, estimator=None):
        return np.array([r.value for r in self.rows if estimator in (None, r.estimator)], dtype=float)


class _Context:
    """Read-only objects shared by all tasks of a sweep."""

    def __init__(self, cfg):
        self.cfg = cfg
        opts = cfg.estimator_options
        self.oracle = ConvolutionOracle(cfg.density, seed=cfg.seed)
        self.field = None
        if "flipd" in cfg.estimators:
            self.field = score_field_for(cfg.density, cfg.schedule, self.oracle)
        if "ball_count" in cfg.estimators:
            n = int(opts.get("ball_count", {}).get("n_samples", 100_000))
            self.bank = sample(cfg.density, n, np.random.SeedSequence([cfg.seed, 0xBA11]))

    def option(self, est, key, cast, default):
        return cast(self.cfg.estimator_options.get(est, {}).get(key, default))


def _run_task(ctx, q, delta, est, seed_seq):
    cfg = ctx.cfg
    x = q.coords
    D = cfg.density.ambient_dim
    if est == "flipd":
        r = flipd(ctx.field, x, delta, cfg.trace_mode, ctx.option(est, "probes", int, 1000),
                  np.random.default_rng(seed_seq))
        se = r.stderr
        if isinstance(ctx.field, NumericScore):
            # the field differentiates the oracle, so it inherits the oracle's sampling error
            se = float(np.hypot(se, ctx.oracle.dlogrho_stderr(x, delta)))
        return r.value, se
    if est == "uniform_slope":
        r = uniform_slope(
            cfg.density, x, delta,
            h=ctx.option(est, "h", float, 0.05),
            method=ctx.option(est, "method", str, "auto"),
            n_samples=ctx.option(est, "n_samples", int, 1_000_000),
            seed=cfg.seed,
        )
        return r.value, r.stderr
    if est == "gauss_slope":
        return D + ctx.oracle.dlogrho_ddelta_gauss(x, delta), ctx.oracle.dlogrho_stderr(x, delta)
    if est == "lidl":
        spacing = ctx.option(est, "spacing", float, 1.0)
        m = ctx.option(est, "n_points", int, 4)
        grid = delta + spacing * (np.arange(m) - (m - 1) / 2)
        logs = [ctx.oracle.log_rho_gauss(x, d) for d in grid]
        _, r = lidl_regress(grid, logs, D)
        # sampling error of the log densities pushed through the OLS weights;
        # the deterministic fit residual is not a standard error
        c = (grid - grid.mean()) / np.sum((grid - grid.mean()) ** 2)
        se = np.sqrt(np.sum((c * [ctx.oracle.log_rho_stderr(x, d) for d in grid]) ** 2))
        return r.value, float(se)
    if est == "ball_count":
        spacing = ctx.option(est, "spacing", float, 0.25)
        m = ctx.option(est, "n_points", int, 7)
        grid = delta + spacing * (np.arange(m) - (m - 1) / 2)
        _, r = ball_count_regress(ctx.bank, x, grid, ctx.option(est, "k_min", int, 20))
        return r.value, r.stderr
    raise ValueError(f"unknown estimator {est!r}")


def run_sweep(config, jobs=None):
    """Evaluate every estimator at every (query point, delta).

    Output is deterministic for a fixed seed and independent of ``jobs``:
    each task draws from its own stream keyed by (seed, point, delta index,
    estimator index). Estimator failures become rows with an ``error``.
    """
    ctx = _Context(config)
    jobs = config.jobs if jobs is None else jobs
    tasks = [
        (pid, q, di, float(d), ei, est)
        for pid, q in enumerate(config.queries)
        for di, d in enumerate(config.deltas)
        for ei, est in enumerate(config.estimators)
    ]

    def run(task):
        pid, q, di, d, ei, est = task
        seed_seq = np.random.SeedSequence([config.seed, pid, di, ei])
        start = time.perf_counter()
        try:
            value, stderr = _run_task(ctx, q, d, est, seed_seq)
            err = ""
            if not np.isfinite(value):
                value, stderr, err = None, None, "non-finite value"
        except (LidkitError, ValueError, ArithmeticError) as exc:
            value, stderr, err = None, None, f"{type(exc).__name__}: {exc}"
        ms = (time.perf_counter() - start) * 1e3 if config.record_timing else None
        return Row(pid, q.component_index, q.true_lid, d, est,
                   None if value is None else float(value),
                   None if stderr is None else float(stderr), err, ms)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    rows.sort(key=lambda r: (r.point_id, r.delta, r.estimator))
    return SweepResult(rows)
