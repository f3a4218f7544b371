"""Local intrinsic dimension estimators.

Functional core:

* ``flipd``: ``D + sigma^2 (Tr grad s + |s|^2)`` evaluated at the diffusion
  time matching a log noise scale ``delta``.
* ``uniform_slope``: slope in ``delta`` of the log probability of a ball of
  radius ``exp(delta)``.
* ``lidl_regress``: least-squares slope of ``log rho`` against ``delta``, plus D.
* ``ball_count_regress``: the same regression on empirical ball counts.

``FLIPD``, ``LIDL`` and ``BallCountLID`` wrap these behind the scikit-learn
estimator API (``fit`` on samples, ``predict`` per query point).
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_delta, check_point
from .convolve import ConvolutionOracle, _ball_slope
from .geometry import Empirical, PointSet
from .schedule import Schedule, make_schedule
from .score import MixtureScore, fd_trace, hutchinson_trace

__all__ = [
    "LidEstimate",
    "RegressionFit",
    "nu",
    "flipd",
    "flipd_grid_mean",
    "uniform_slope",
    "lidl_regress",
    "ball_count_regress",
    "round_estimate",
    "FLIPD",
    "LIDL",
    "BallCountLID",
]

DEFAULT_DELTA = -6.0
K_MIN = 20


@dataclass(frozen=True)
class LidEstimate:
    """A single LID estimate; ``value`` is never clamped and may be negative."""

    value: float
    estimator: str
    delta: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def stderr(self):
        return float(self.diagnostics.get("stderr") or 0.0)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    residual_rms: float
    grid: np.ndarray
    slope_stderr: float = 0.0


def _nu_parts(field, x, delta, trace="auto", probes=1000, seed=None):
    sched = field.schedule
    if sched is None:
        raise ValueError("score field has no schedule attached")
    t = sched.t_of_delta(check_delta(delta))
    psi, sig = sched.psi(t), sched.sigma(t)
    y = psi * check_point(x, field.ambient_dim)
    s = field.score(y, t)
    if trace == "auto":
        trace = "exact" if field.analytic else "fd"
    stderr = 0.0
    if trace == "exact":
        tr = float(field.exact_trace(y, t))
    elif trace == "hutchinson":
        tr, stderr = hutchinson_trace(field, y, t, probes=probes, seed=seed)
    elif trace == "fd":
        tr = fd_trace(field, y, t)
    else:
        raise ValueError(f"unknown trace mode {trace!r}")
    norm_sq = float(s @ s)
    value = sig**2 * (tr + norm_sq)
    diag = {"score_norm_sq": norm_sq, "trace": tr, "stderr": sig**2 * stderr, "t": t, "trace_mode": trace}
    return float(value), diag


def nu(field, x, delta, trace="auto", probes=1000, seed=None):
    """``sigma^2 (Tr grad s + |s|^2)`` at ``(psi x, t(delta))``.

    Equals d/d delta log rho(x, delta) when ``field`` is the exact score.
    """
    return _nu_parts(field, x, delta, trace, probes, seed)[0]


def flipd(field, x, delta=DEFAULT_DELTA, trace="auto", probes=1000, seed=None):
    """FLIPD estimate ``D + nu`` at a single ``delta``.

    Args:
        field: score field with an attached schedule.
        x: query point in R^D.
        delta: log noise scale; must map into the schedule's time range.
        trace: ``"auto"``, ``"exact"``, ``"hutchinson"`` or ``"fd"``.
        probes, seed: Hutchinson settings.
    """
    value, diag = _nu_parts(field, x, delta, trace, probes, seed)
    return LidEstimate(field.ambient_dim + value, "flipd", float(delta), diag)


def flipd_grid_mean(field, x, deltas, trace="auto", probes=1000, seed=None):
    """Mean FLIPD over a grid of deltas. Not the canonical single-delta estimator."""
    deltas = np.asarray(deltas, dtype=float)
    ests = [flipd(field, x, d, trace, probes, seed) for d in deltas]
    values = np.array([e.value for e in ests])
    se = np.sqrt(np.sum([e.stderr**2 for e in ests])) / len(ests)
    return LidEstimate(float(values.mean()), "flipd_grid_mean", tuple(deltas), {"stderr": se, "non_canonical": True})


def uniform_slope(density, x, delta=DEFAULT_DELTA, h=0.05, method="auto", derivative="auto",
                  n_samples=1_000_000, seed=0):
    """LID as the slope of ``log P(|X - x| < exp(delta))`` in ``delta``."""
    s = _ball_slope(density, x, delta, h, method, derivative, n_samples, seed)
    return LidEstimate(s.value, "uniform_slope", float(delta), {"stderr": s.stderr, "method": s.method})


def _ols(deltas, y):
    deltas = np.asarray(deltas, dtype=float)
    y = np.asarray(y, dtype=float)
    if deltas.shape != y.shape or deltas.ndim != 1:
        raise ValueError("deltas and values must be 1-d arrays of equal length")
    if len(np.unique(deltas)) < 2:
        raise ValueError("degenerate grid: need at least two distinct delta values")
    res = stats.linregress(deltas, y)
    resid = y - (res.intercept + res.slope * deltas)
    se = float(res.stderr) if len(deltas) > 2 else 0.0
    return RegressionFit(float(res.slope), float(res.intercept), float(np.sqrt(np.mean(resid**2))), deltas, se)


def lidl_regress(deltas, log_densities, ambient_dim):
    """Regress ``log rho(x, delta)`` on ``delta``; the LID estimate is slope + D."""
    fit = _ols(deltas, log_densities)
    est = LidEstimate(fit.slope + ambient_dim, "lidl", tuple(fit.grid), {"stderr": fit.slope_stderr})
    return fit, est


def ball_count_regress(samples, x, deltas, k_min=K_MIN):
    """Regress the log fraction of samples within ``exp(delta)`` of ``x`` on ``delta``.

    Counts get +1/2 before the log. Grid points whose ball holds fewer than
    ``k_min`` samples are dropped and listed in the diagnostics.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    x = check_point(x, samples.shape[1])
    deltas = np.asarray(deltas, dtype=float)
    dist = np.sort(np.linalg.norm(samples - x, axis=1))
    return _count_regress(dist, len(samples), deltas, k_min)


def _count_regress(sorted_dist, n, deltas, k_min):
    counts = np.searchsorted(sorted_dist, np.exp(deltas), side="left")
    keep = counts >= k_min
    if keep.sum() < 2:
        raise ValueError(f"fewer than two grid points have {k_min} neighbours; enlarge the balls")
    fit = _ols(deltas[keep], np.log((counts[keep] + 0.5) / n))
    diag = {"stderr": fit.slope_stderr, "trimmed": tuple(deltas[~keep]), "counts": tuple(int(c) for c in counts)}
    return fit, LidEstimate(fit.slope, "ball_count", tuple(fit.grid), diag)


def round_estimate(estimate):
    """Optional post-processor rounding an estimate to the nearest integer."""
    return replace(estimate, value=float(np.rint(estimate.value)))


# ---------------------------------------------------------------------------
# scikit-learn style estimators


def _resolve_schedule(schedule):
    if isinstance(schedule, Schedule):
        return schedule
    return make_schedule(schedule)


class FLIPD(BaseEstimator):
    """FLIPD with the exact score of the fitted samples' empirical law.

    Fitting on samples builds the Gaussian-mixture score of their empirical
    distribution, i.e. a perfectly trained diffusion model on that data.
    Pass ``score_field`` to use any other field instead.

    Args:
        delta: log noise scale at which the estimate is taken.
        schedule: ``"vp"``, ``"ve"`` or a ``Schedule`` instance.
        trace: trace mode passed to ``flipd``.
        n_probes: Hutchinson probes when ``trace="hutchinson"``.
        random_state: seed for Hutchinson probes.
        score_field: optional prebuilt score field; ``fit`` then ignores ``X``.
    """

    def __init__(self, delta=DEFAULT_DELTA, schedule="vp", trace="auto", n_probes=1000,
                 random_state=None, score_field=None):
        self.delta = delta
        self.schedule = schedule
        self.trace = trace
        self.n_probes = n_probes
        self.random_state = random_state
        self.score_field = score_field

    def fit(self, X=None, y=None):
        if self.score_field is not None:
            self.field_ = self.score_field
        else:
            X = check_array(X)
            self.field_ = MixtureScore(X, _resolve_schedule(self.schedule))
        self.n_features_in_ = self.field_.ambient_dim
        return self

    def predict(self, X):
        check_is_fitted(self, "field_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        rng = np.random.SeedSequence(self.random_state)
        seeds = rng.spawn(len(X))
        return np.array([
            flipd(self.field_, x, self.delta, self.trace, self.n_probes, np.random.default_rng(s)).value
            for x, s in zip(X, seeds)
        ])


class LIDL(BaseEstimator):
    """LIDL regression on the Gaussian-smoothed empirical density of the samples."""

    def __init__(self, deltas=(-2.0, -1.5, -1.0, -0.5)):
        self.deltas = deltas

    def fit(self, X, y=None):
        X = check_array(X)
        self.oracle_ = ConvolutionOracle(Empirical(PointSet(X)))
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "oracle_")
        X = check_array(X)
        deltas = np.asarray(self.deltas, dtype=float)
        out = []
        for x in X:
            logs = [self.oracle_.log_rho_gauss(x, d) for d in deltas]
            out.append(lidl_regress(deltas, logs, self.n_features_in_)[1].value)
        return np.array(out)


class BallCountLID(BaseEstimator):
    """Ball-count regression against the fitted sample bank.

    Args:
        deltas: grid of log radii.
        k_min: minimum neighbours for a grid point to enter the fit.
    """

    def __init__(self, deltas=tuple(np.linspace(-1.0, 0.0, 9)), k_min=K_MIN):
        self.deltas = deltas
        self.k_min = k_min

    def fit(self, X, y=None):
        X = check_array(X)
        self.tree_ = cKDTree(X)
        self.n_samples_fit_ = X.shape[0]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = check_array(X)
        deltas = np.asarray(self.deltas, dtype=float)
        r_max = float(np.exp(deltas.max()))
        out = []
        for x in X:
            idx = self.tree_.query_ball_point(x, r_max)
            dist = np.sort(np.linalg.norm(self.tree_.data[idx] - x, axis=1))
            out.append(_count_regress(dist, self.n_samples_fit_, deltas, self.k_min)[1].value)
        return np.array(out)
