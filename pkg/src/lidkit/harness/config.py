"""Experiment configuration files.

One experiment per INI-style file (flat ``key = value`` under section
headers). Example::

    [experiment]
    seed = 0
    estimators = flipd, uniform_slope
    output = circle.csv

    [density]
    kind = circle
    radius = 1

    [schedule]
    kind = vp

    [delta]
    start = -8
    stop = -2
    step = 2

    [query]
    mode = explicit
    points = 1, 0; 0, 1

Unions list their parts and give each a ``[component.NAME]`` section::

    [density]
    kind = union
    components = ring, left, right
    weights = 0.5, 0.25, 0.25
    separation = 4

Per-estimator settings live in ``[estimator.NAME]`` sections.
"""

import configparser
from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo
from ..exceptions import ConfigError, LidkitError, ScheduleRangeError
from ..schedule import make_schedule

ESTIMATORS = ("flipd", "uniform_slope", "lidl", "ball_count", "gauss_slope")


@dataclass
class ExperimentConfig:
    density: object
    schedule: object
    estimators: tuple
    deltas: np.ndarray
    queries: list
    seed: int = 0
    trace_mode: str = "auto"
    output: str = None
    format: str = "csv"
    jobs: int = 1
    record_timing: bool = False
    estimator_options: dict = field(default_factory=dict)


def _floats(text, name):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from exc


def _points(text, name):
    rows = [r for r in text.split(";") if r.strip()]
    if not rows:
        raise ConfigError(f"{name}: no points given")
    pts = [_floats(r, name) for r in rows]
    if len({len(p) for p in pts}) != 1:
        raise ConfigError(f"{name}: points have different dimensions")
    return np.array(pts)


def _get(sec, key, cast=str, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] missing required key {key!r}")
        return default
    try:
        return cast(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from exc


def build_density(parser, section="density"):
    """Build a catalog density from a config section (recursing into unions)."""
    if not parser.has_section(section):
        raise ConfigError(f"missing section [{section}]")
    sec = parser[section]
    kind = _get(sec, "kind").strip().lower()
    try:
        if kind == "circle":
            return geo.make_circle(
                _get(sec, "radius", float, 1.0),
                _get(sec, "ambient_dim", int, 2),
                _floats(sec["center"], "center") if "center" in sec else None,
            )
        if kind == "sphere":
            return geo.make_sphere(
                _get(sec, "intrinsic_dim", int, 2),
                _get(sec, "ambient_dim", int, 3),
                _get(sec, "radius", float, 1.0),
                _floats(sec["center"], "center") if "center" in sec else None,
            )
        if kind == "gaussian_plane":
            d = _get(sec, "intrinsic_dim", int, 2)
            mean = _floats(sec["mean"], "mean") if "mean" in sec else None
            var = _floats(sec["variances"], "variances") if "variances" in sec else None
            return geo.make_gaussian_plane(d, _get(sec, "ambient_dim", int, 3), mean,
                                           np.diag(var) if var else None)
        if kind == "point_mass":
            return geo.make_point_mass(_floats(_get(sec, "point"), "point"))
        if kind == "points":
            return geo.Empirical(geo.PointSet(_points(_get(sec, "points"), "points")))
        if kind == "swiss_roll":
            return geo.Uniform(geo.SwissRoll(_get(sec, "ambient_dim", int, 3), _get(sec, "height", float, 10.0)))
        if kind == "union":
            names = [n.strip() for n in _get(sec, "components").split(",") if n.strip()]
            parts = [build_density(parser, f"component.{n}") for n in names]
            weights = _floats(_get(sec, "weights"), "weights")
            union = geo.DisjointUnion([p.manifold for p in parts], weights, _get(sec, "separation", float))
            return geo.Mixture(union, parts)
    except ConfigError:
        raise
    except (LidkitError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc
    raise ConfigError(f"[{section}] unknown density kind {kind!r}")


def build_schedule(parser):
    if not parser.has_section("schedule"):
        return make_schedule("vp")
    sec = dict(parser["schedule"])
    kind = sec.pop("kind", "vp")
    try:
        return make_schedule(kind, **{k: float(v) for k, v in sec.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[schedule] {exc}") from exc


def build_deltas(parser):
    if not parser.has_section("delta"):
        raise ConfigError("missing section [delta]")
    sec = parser["delta"]
    if "values" in sec:
        deltas = np.array(_floats(sec["values"], "values"))
    else:
        start, stop, step = (_get(sec, k, float) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ConfigError("[delta] step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        deltas = start + step * np.arange(max(n, 0))
    if deltas.size == 0 or np.any(np.diff(deltas) <= 0):
        raise ConfigError("[delta] grid must be non-empty and strictly increasing")
    return deltas


def build_queries(parser, density, seed):
    sec = parser["query"] if parser.has_section("query") else {"mode": "sample", "n": "5"}
    mode = sec.get("mode", "sample").strip().lower()
    if mode == "explicit":
        pts = _points(sec.get("points", ""), "query points")
    elif mode == "sample":
        n = int(sec.get("n", 5))
        pts = geo.sample(density, n, np.random.SeedSequence([seed, 0xC0FFEE]))
    else:
        raise ConfigError(f"[query] unknown mode {mode!r}")
    out = []
    for p in pts:
        try:
            out.append(geo.query_point(density.manifold, p))
        except (LidkitError, ValueError) as exc:
            raise ConfigError(f"query point {list(p)} rejected: {exc}") from exc
    return out


def load_config(path, seed=None):
    """Parse and validate an experiment file into an ``ExperimentConfig``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return config_from_parser(parser, seed)


def parse_config(text, seed=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return config_from_parser(parser, seed)


def config_from_parser(parser, seed=None):
    exp = parser["experiment"] if parser.has_section("experiment") else {}
    seed = int(exp.get("seed", 0)) if seed is None else int(seed)
    density = build_density(parser)
    schedule = build_schedule(parser)
    deltas = build_deltas(parser)
    lo, hi = schedule.delta_range()
    if deltas.min() < lo or deltas.max() > hi:
        raise ConfigError(str(ScheduleRangeError(float(deltas.min() if deltas.min() < lo else deltas.max()), lo, hi)))
    ests = tuple(e.strip() for e in exp.get("estimators", "flipd").split(",") if e.strip())
    unknown = set(ests) - set(ESTIMATORS)
    if unknown or not ests:
        raise ConfigError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    options = {
        name: dict(parser[f"estimator.{name}"]) for name in ESTIMATORS if parser.has_section(f"estimator.{name}")
    }
    fmt = exp.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    return ExperimentConfig(
        density=density,
        schedule=schedule,
        estimators=ests,
        deltas=deltas,
        queries=build_queries(parser, density, seed),
        seed=seed,
        trace_mode=options.get("flipd", {}).get("trace", "auto"),
        output=exp.get("output"),
        format=fmt,
        jobs=int(exp.get("jobs", 1)),
        record_timing=str(exp.get("record_timing", "false")).lower() in ("1", "true", "yes"),
        estimator_options=options,
    )
