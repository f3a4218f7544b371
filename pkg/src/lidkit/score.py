"""Score fields ``s(x, t) = grad log p(x, t)`` of noised densities.

Analytic fields (Gaussian mixtures of atoms, Gaussians on affine subspaces)
provide exact Jacobian traces. ``NumericScore`` differentiates any log
density numerically, e.g. one built from a convolution oracle. Every field
is vectorized: ``score`` accepts a single point or an (n, D) batch.
"""

import warnings

import numpy as np
from scipy.special import logsumexp, softmax

from ._validation import check_positive_int, check_random_state
from .exceptions import StepSizeWarning, UnsupportedError
from .geometry import Empirical, GaussianOnAffine

__all__ = [
    "ScoreField",
    "MixtureScore",
    "AffineGaussianScore",
    "NumericScore",
    "LinearScore",
    "field_from_oracle",
    "score_field_for",
    "hutchinson_trace",
    "fd_trace",
]


def _batch(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x, x.ndim == 1


def _time(t):
    t = float(t)
    if not 0 < t <= 1:
        raise ValueError("score undefined at t=0" if t == 0 else f"t must lie in (0, 1], got {t}")
    return t


class ScoreField:
    """Base class for score fields.

    Subclasses implement ``_score(X, t)`` on an (n, D) batch. Analytic
    subclasses also implement ``exact_trace``.
    """

    ambient_dim: int
    schedule = None
    analytic = False

    def score(self, x, t):
        X, single = _batch(x)
        S = self._score(X, _time(t))
        return S[0] if single else S

    def exact_trace(self, x, t):
        raise UnsupportedError(f"{type(self).__name__} has no exact trace; use fd_trace")

    def fd_step(self, x, t):
        """Step for directional derivatives, scaled to the noise level."""
        scale = self.schedule.sigma(t) if self.schedule is not None else 1.0
        return 1e-4 * scale * (1 + float(np.linalg.norm(x)))


class MixtureScore(ScoreField):
    """Exact score of ``sum_i w_i N(psi(t) x_i, sigma(t)^2 I)``.

    Args:
        atoms: (n, D) atom locations, or an ``Empirical`` density.
        schedule: noise schedule providing psi and sigma.
        weights: atom weights; equal by default.
    """

    analytic = True

    def __init__(self, atoms, schedule, weights=None):
        if isinstance(atoms, Empirical):
            weights = atoms.weights if weights is None else weights
            atoms = atoms.atoms
        self.atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        n = len(self.atoms)
        self.weights = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        self.log_weights = np.log(self.weights)
        self.schedule = schedule
        self.ambient_dim = self.atoms.shape[1]

    def _parts(self, X, t):
        psi, sig = self.schedule.psi(t), self.schedule.sigma(t)
        diff = psi * self.atoms[None, :, :] - X[:, None, :]  # (n, k, D)
        sq = np.sum(diff**2, axis=2)
        resp = softmax(self.log_weights - 0.5 * sq / sig**2, axis=1)
        return diff, sq, resp, sig

    def log_density(self, x, t):
        X, single = _batch(x)
        t = _time(t)
        psi, sig = self.schedule.psi(t), self.schedule.sigma(t)
        sq = np.sum((psi * self.atoms[None] - X[:, None]) ** 2, axis=2)
        D = self.ambient_dim
        out = logsumexp(self.log_weights - 0.5 * sq / sig**2, axis=1) - D * np.log(sig) - 0.5 * D * np.log(2 * np.pi)
        return float(out[0]) if single else out

    def _score(self, X, t):
        diff, _, resp, sig = self._parts(X, t)
        return np.einsum("nk,nkd->nd", resp, diff) / sig**2

    def trace_terms(self, x, t):
        """``(sum r_i |d_i|^2, |sum r_i d_i|^2)`` with ``d_i = psi x_i - x``."""
        X, single = _batch(x)
        diff, sq, resp, _ = self._parts(X, _time(t))
        second = np.sum(resp * sq, axis=1)
        mean = np.einsum("nk,nkd->nd", resp, diff)
        first = np.sum(mean**2, axis=1)
        return (second[0], first[0]) if single else (second, first)

    def exact_trace(self, x, t):
        sig = self.schedule.sigma(_time(t))
        second, first = self.trace_terms(x, t)
        return -self.ambient_dim / sig**2 + (second - first) / sig**4


class AffineGaussianScore(ScoreField):
    """Exact score of a Gaussian on an affine subspace pushed through the SDE.

    ``p(., t) = N(psi (o + B m), psi^2 B S B^T + sigma^2 I)``.
    """

    analytic = True

    def __init__(self, density, schedule):
        if not isinstance(density, GaussianOnAffine):
            raise TypeError("AffineGaussianScore needs a GaussianOnAffine density")
        self.density = density
        self.schedule = schedule
        self.ambient_dim = density.ambient_dim

    def _precision_parts(self, t):
        m = self.density.manifold
        psi, sig = self.schedule.psi(t), self.schedule.sigma(t)
        tang = np.linalg.inv(psi**2 * self.density.cov + sig**2 * np.eye(m.intrinsic_dim))
        mean = psi * m.embed(self.density.mean)
        return m.basis, tang, sig, mean

    def _score(self, X, t):
        B, tang, sig, mean = self._precision_parts(t)
        r = X - mean
        u = r @ B
        normal = r - u @ B.T
        return -(normal / sig**2 + (u @ tang) @ B.T)

    def exact_trace(self, x, t):
        B, tang, sig, _ = self._precision_parts(_time(t))
        d = B.shape[1]
        value = -(self.ambient_dim - d) / sig**2 - np.trace(tang)
        X, single = _batch(x)
        return float(value) if single else np.full(len(X), value)


class LinearScore(ScoreField):
    """Score with a constant Jacobian ``A``: ``s(x) = A x + b`` (test fixture and baseline)."""

    analytic = True

    def __init__(self, jacobian, offset=None):
        self.jacobian = np.atleast_2d(np.asarray(jacobian, dtype=float))
        self.ambient_dim = self.jacobian.shape[0]
        self.offset = np.zeros(self.ambient_dim) if offset is None else np.asarray(offset, dtype=float)

    def _score(self, X, t):
        return X @ self.jacobian.T + self.offset

    def exact_trace(self, x, t):
        X, single = _batch(x)
        value = float(np.trace(self.jacobian))
        return value if single else np.full(len(X), value)

    def fd_step(self, x, t):
        return 1e-3 * (1 + float(np.linalg.norm(x)))


class NumericScore(ScoreField):
    """Score by central differences of a log density ``log_density(x, t)``.

    Args:
        log_density: callable returning log p(x, t) for a single point.
        ambient_dim: D.
        schedule: optional; when given, steps scale with sigma(t).
        rel_step: step relative to sigma(t) (or absolute without a schedule).
    """

    def __init__(self, log_density, ambient_dim, schedule=None, rel_step=1e-3):
        self.log_density = log_density
        self.ambient_dim = int(ambient_dim)
        self.schedule = schedule
        self.rel_step = rel_step

    def _h(self, t):
        return self.rel_step * (self.schedule.sigma(t) if self.schedule is not None else 1.0)

    def _score(self, X, t):
        h = self._h(t)
        E = np.eye(self.ambient_dim) * h
        out = np.empty_like(X)
        for n, x in enumerate(X):
            out[n] = [
                (self.log_density(x + e, t) - self.log_density(x - e, t)) / (2 * h) for e in E
            ]
        return out

    def fd_step(self, x, t):
        return self._h(t)

    def fd_trace(self, x, t, step=None):
        """Trace of the Hessian of log p by second differences (no nested FD)."""
        x = np.asarray(x, dtype=float)
        t = _time(t)
        h = self._h(t) if step is None else step
        f0 = self.log_density(x, t)
        total = 0.0
        for e in np.eye(self.ambient_dim) * h:
            total += self.log_density(x + e, t) - 2 * f0 + self.log_density(x - e, t)
        return total / h**2


def field_from_oracle(oracle, schedule, rel_step=1e-3):
    """Numeric score of ``p(y, t)`` recovered from a Gaussian-convolution oracle.

    Uses ``log p(y, t) = log rho(y / psi, log lam(t)) - D log psi``.
    """
    D = oracle.D

    def log_density(y, t):
        psi = schedule.psi(t)
        return oracle.log_rho_gauss(y / psi, np.log(schedule.lam(t))) - D * np.log(psi)

    return NumericScore(log_density, D, schedule, rel_step)


def score_field_for(density, schedule, oracle=None):
    """Pick the exact analytic field when one exists, else a numeric one."""
    if isinstance(density, Empirical):
        return MixtureScore(density, schedule)
    if isinstance(density, GaussianOnAffine):
        return AffineGaussianScore(density, schedule)
    if oracle is None:
        from .convolve import ConvolutionOracle

        oracle = ConvolutionOracle(density)
    return field_from_oracle(oracle, schedule)


def hutchinson_trace(field, x, t, probes=1000, seed=None, probe_dist="rademacher", step=None):
    """Stochastic trace of the score Jacobian.

    Averages ``eps^T J eps`` over random probes, with ``J eps`` a central
    difference of the score along ``eps``.

    Returns:
        (estimate, stderr); stderr is 0 for a single probe.
    """
    probes = check_positive_int(probes, "probes")
    rng = check_random_state(seed)
    x = np.asarray(x, dtype=float)
    D = field.ambient_dim
    if probe_dist == "rademacher":
        eps = rng.choice([-1.0, 1.0], size=(probes, D))
    elif probe_dist == "gaussian":
        eps = rng.standard_normal((probes, D))
    else:
        raise ValueError(f"probe_dist must be 'rademacher' or 'gaussian', got {probe_dist!r}")
    h = field.fd_step(x, t) if step is None else step
    vals = np.empty(probes)
    chunk = 8192
    for lo in range(0, probes, chunk):
        e = eps[lo : lo + chunk]
        jv = (field.score(x + h * e, t) - field.score(x - h * e, t)) / (2 * h)
        vals[lo : lo + chunk] = np.sum(e * jv, axis=1)
    stderr = float(vals.std(ddof=1) / np.sqrt(probes)) if probes > 1 else 0.0
    return float(vals.mean()), stderr


def fd_trace(field, x, t, step=None):
    """Jacobian trace by central differences along the coordinate axes.

    Warns with ``StepSizeWarning`` when halving the step moves the result
    by more than 10%.
    """
    x = np.asarray(x, dtype=float)
    h = field.fd_step(x, t) if step is None else float(step)
    if not h > 0:
        raise ValueError("step must be positive")

    def trace(h):
        if isinstance(field, NumericScore):
            return field.fd_trace(x, t, h)
        E = np.eye(field.ambient_dim) * h
        plus = field.score(x + E, t)
        minus = field.score(x - E, t)
        return float(np.trace(plus - minus) / (2 * h))

    full, half = trace(h), trace(h / 2)
    if abs(full - half) > 0.1 * max(abs(half), 1e-300):
        warnings.warn(
            f"finite-difference trace changed by >10% when halving the step ({full:.6g} vs {half:.6g})",
            StepSizeWarning,
            stacklevel=2,
        )
    return full
