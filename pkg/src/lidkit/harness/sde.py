"""Forward and reverse SDE simulation with exact scores."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import wasserstein_distance

from .._validation import check_random_state
from ..geometry import Empirical
from ..score import MixtureScore

EPS_STOP = 1e-3
MIN_STEPS = 100


@dataclass
class SdeDemoResult:
    samples: np.ndarray
    reference: np.ndarray
    sliced_wasserstein: float
    distance_undefined: bool
    eps_stop: float


def sample_marginal(density, schedule, t, n, rng):
    """Exact draws from ``p(., t)`` via the transition kernel."""
    x0 = density.sample(n, rng) if n else np.empty((0, density.ambient_dim))
    return schedule.psi(t) * x0 + schedule.sigma(t) * rng.standard_normal(x0.shape)


def sliced_wasserstein(a, b, n_projections=64, seed=0):
    """Average 1-Wasserstein distance over random 1-d projections."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_projections, a.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return float(np.mean([wasserstein_distance(a @ u, b @ u) for u in dirs]))


def simulate_forward(schedule, x0, t_end, n, steps=1000, seed=None):
    """Euler-Maruyama for ``dX = gamma(t) X dt + g(t) dW`` from ``x0`` up to ``t_end``."""
    rng = check_random_state(seed)
    x = np.tile(np.asarray(x0, dtype=float), (n, 1))
    ts = np.linspace(0.0, t_end, steps + 1)
    for t0, t1 in zip(ts[:-1], ts[1:]):
        dt = t1 - t0
        x = x + schedule.drift_coef(t0) * x * dt + schedule.diffusion(t0) * np.sqrt(dt) * rng.standard_normal(x.shape)
    return x


def reverse_sde_demo(density, schedule, steps=1000, n=10_000, seed=0, eps_stop=EPS_STOP, n_projections=64):
    """Sample by integrating the reverse SDE from t=1 down to ``eps_stop``.

    Starts from exact draws of ``p(., 1)``, steps backwards with
    Euler-Maruyama using the exact mixture score, and compares the result
    with exact draws of ``p(., eps_stop)`` by sliced Wasserstein distance.
    """
    if not isinstance(density, Empirical):
        raise TypeError("the reverse-SDE demo needs an Empirical density (exact mixture score)")
    if steps < MIN_STEPS:
        raise ValueError(f"need at least {MIN_STEPS} steps, got {steps}")
    D = density.ambient_dim
    if n == 0:
        empty = np.empty((0, D))
        return SdeDemoResult(empty, empty, float("nan"), True, eps_stop)

    ss = np.random.SeedSequence(seed)
    rng_run, rng_ref = (np.random.default_rng(s) for s in ss.spawn(2))
    field = MixtureScore(density, schedule)
    y = sample_marginal(density, schedule, 1.0, n, rng_run)
    ts = np.linspace(1.0, eps_stop, steps + 1)
    for t, t_next in zip(ts[:-1], ts[1:]):
        dt = t - t_next
        g = schedule.diffusion(t)
        drift = g**2 * field.score(y, t) - schedule.drift_coef(t) * y
        y = y + drift * dt + g * np.sqrt(dt) * rng_run.standard_normal(y.shape)

    ref = sample_marginal(density, schedule, eps_stop, n, rng_ref)
    return SdeDemoResult(y, ref, sliced_wasserstein(y, ref, n_projections, seed), False, eps_stop)
