"""Gaussian and ball convolutions of manifold-supported densities.

``ConvolutionOracle`` evaluates the Gaussian-smoothed density

    rho(x, delta) = integral of p(x') N_D(x - x'; 0, exp(2 delta) I) dx'

and its derivative in ``delta`` by exact formulas, periodic/peak-centred
trapezoid quadrature, or Monte Carlo over a fixed sample bank. Everything is
kept in log space: at ``delta = -8`` the kernel exponent reaches ``1e7``.

The ball side works with ``P(x, delta) = Prob(|X - x| < exp(delta))``; the
uniform convolution is ``U_D exp(-D delta) P`` with ``U_D`` the inverse
volume of the unit D-ball.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special
from scipy.special import logsumexp
from statsmodels.stats.proportion import proportion_confint

from ._validation import check_delta, check_point
from .exceptions import AssumptionViolated, UnsupportedError
from .geometry import Empirical, GaussianOnAffine, Mixture, Sphere, Uniform

__all__ = [
    "ConvolutionOracle",
    "BallProbability",
    "log_gauss_kernel",
    "ball_probability",
    "component_ball_probabilities",
    "dlogrho_ddelta_uniform",
    "log_rho_uniform",
    "log_unit_ball_inv_volume",
]

LOG_2PI = np.log(2 * np.pi)
MIN_NODES = 16
DEFAULT_NODES = 1024


def log_gauss_kernel(sqdist, delta, dim):
    """log of ``(2 pi)^{-dim/2} exp(-dim delta - |r|^2 exp(-2 delta) / 2)``.

    With ``dim`` below the ambient dimension this is the unnormalized kernel
    used in the scaling identity between ambient and intrinsic convolutions.
    """
    return -0.5 * dim * LOG_2PI - dim * delta - 0.5 * np.asarray(sqdist) * np.exp(-2 * delta)


class _Terms(NamedTuple):
    """Discretized integrand: ``rho = sum exp(log_w)``, squared distances alongside."""

    log_w: np.ndarray
    sqdist: np.ndarray
    monte_carlo: bool


def _combine(log_w, sqdist, delta, D):
    log_rho = float(logsumexp(log_w))
    if not np.isfinite(log_rho):
        raise AssumptionViolated(f"log density is not finite (max exponent {np.max(log_w):.3e})")
    r = np.exp(log_w - log_rho)
    slope = -D + np.exp(-2 * delta) * float(np.dot(r, sqdist))
    if not np.isfinite(slope):
        raise AssumptionViolated("derivative of log density is not finite")
    return log_rho, slope


class ConvolutionOracle:
    """Gaussian-convolution oracle for a catalog density.

    Args:
        density: any catalog density.
        method: ``"auto"``, ``"closed_form"``, ``"quadrature"`` or
            ``"monte_carlo"``. ``"auto"`` picks closed forms for point sets
            and affine Gaussians, quadrature for curves, Monte Carlo otherwise.
            Mixtures apply the choice per component.
        n_nodes: minimum quadrature node count; the count also grows like
            ``64 exp(-delta)`` so the kernel is always resolved.
        n_samples, seed: size and seed of the Monte Carlo sample bank.
    """

    def __init__(self, density, method="auto", n_nodes=DEFAULT_NODES, n_samples=100_000, seed=0):
        if method not in ("auto", "closed_form", "quadrature", "monte_carlo"):
            raise ValueError(f"unknown method {method!r}")
        if n_nodes < MIN_NODES:
            raise ValueError(f"quadrature needs at least {MIN_NODES} nodes, got {n_nodes}")
        self.density = density
        self.method = method
        self.n_nodes = int(n_nodes)
        self.n_samples = int(n_samples)
        self.seed = seed
        self.D = density.ambient_dim

        if isinstance(density, Mixture):
            self._parts = [
                ConvolutionOracle(c, self._component_method(c), n_nodes, n_samples, seed)
                for c in density.components
            ]
            self._kind = "mixture"
        else:
            self._kind = self._resolve(density, method)
            if self._kind == "monte_carlo":
                rng = np.random.default_rng(seed)
                self._bank = density.sample(self.n_samples, rng)

    def _component_method(self, comp):
        if self.method == "auto":
            return "auto"
        try:
            self._resolve(comp, self.method)
            return self.method
        except UnsupportedError:
            return "auto"

    @staticmethod
    def _resolve(density, method):
        closed = isinstance(density, (Empirical, GaussianOnAffine))
        curve = (
            isinstance(density, Uniform) and isinstance(density.manifold, Sphere)
            and density.manifold.intrinsic_dim == 1
        ) or (isinstance(density, GaussianOnAffine) and density.manifold.intrinsic_dim == 1)
        if method == "auto":
            return "closed_form" if closed else "quadrature" if curve else "monte_carlo"
        if method == "closed_form" and not closed:
            raise UnsupportedError(f"no closed form for {type(density).__name__}")
        if method == "quadrature" and not curve:
            raise UnsupportedError("quadrature is only available on 1-dimensional manifolds")
        return method

    @property
    def intrinsic_dim(self):
        return self.density.manifold.intrinsic_dim

    # -- discretizations -------------------------------------------------

    def _node_count(self, x, delta, scale):
        return max(self.n_nodes, int(np.ceil(64 * scale * np.exp(-delta))))

    def _terms(self, x, delta, kernel_dim):
        """Discretize ``p(x') N_k(x - x')`` over the support, ``k = kernel_dim``."""
        dens = self.density
        if self._kind == "closed_form" and isinstance(dens, Empirical):
            sq = np.sum((dens.atoms - x) ** 2, axis=1)
            return _Terms(np.log(dens.weights) + log_gauss_kernel(sq, delta, kernel_dim), sq, False)

        if self._kind == "monte_carlo":
            sq = np.sum((self._bank - x) ** 2, axis=1)
            log_w = log_gauss_kernel(sq, delta, kernel_dim) - np.log(len(sq))
            return _Terms(log_w, sq, True)

        if isinstance(dens, Uniform):
            m = dens.manifold
            inner = np.linalg.norm(m._split(x)[0])
            n = self._node_count(x, delta, np.sqrt(max(inner, m.radius) * m.radius))
            theta = 2 * np.pi * np.arange(n) / n
            pts = m.embed_unit(np.column_stack([np.cos(theta), np.sin(theta)]))
            sq = np.sum((pts - x) ** 2, axis=1)
            # uniform density 1/(2 pi r) times arc element r dtheta
            return _Terms(log_gauss_kernel(sq, delta, kernel_dim) - np.log(n), sq, False)

        # Gaussian on a line: integrate over the peak of p(u) N(u_x - u)
        m = dens.manifold
        u_x = float(m.coords(x)[0])
        v, mu, s2 = float(dens.cov[0, 0]), float(dens.mean[0]), np.exp(2 * delta)
        centre = (mu * s2 + u_x * v) / (v + s2)
        tau = np.sqrt(v * s2 / (v + s2))
        n = self._node_count(x, delta, 0.0)
        u = np.linspace(centre - 40 * tau, centre + 40 * tau, n)
        h = u[1] - u[0]
        pts = m.embed(u[:, None])
        sq = np.sum((pts - x) ** 2, axis=1)
        log_p = -0.5 * (LOG_2PI + np.log(v)) - 0.5 * (u - mu) ** 2 / v
        log_h = np.full(n, np.log(h))
        log_h[[0, -1]] += np.log(0.5)
        return _Terms(log_p + log_h + log_gauss_kernel(sq, delta, kernel_dim), sq, False)

    def _affine_gaussian(self, x, delta):
        """Exact log rho and its delta-derivative for a Gaussian on an affine subspace."""
        dens = self.density
        m = dens.manifold
        u, normal = m.split(x)
        d, D = m.intrinsic_dim, self.D
        s2 = np.exp(2 * delta)
        lam, Q = np.linalg.eigh(dens.cov)
        z = Q.T @ (u - dens.mean)
        nn = float(normal @ normal)
        log_rho = (
            -0.5 * np.sum(np.log(2 * np.pi * (lam + s2)) + z**2 / (lam + s2))
            - 0.5 * (D - d) * np.log(2 * np.pi * s2)
            - 0.5 * nn / s2
        )
        slope = float(
            np.sum(-s2 / (lam + s2) + s2 * z**2 / (lam + s2) ** 2) - (D - d) + nn / s2
        )
        return float(log_rho), slope

    # -- public evaluations ----------------------------------------------

    def log_rho_and_slope(self, x, delta):
        """``(log rho(x, delta), d/d delta log rho(x, delta))`` by one shared method."""
        x = check_point(x, self.D)
        delta = check_delta(delta)
        if self._kind == "mixture":
            parts = [p.log_rho_and_slope(x, delta) for p in self._parts]
            log_c = np.log(self.density.weights) + np.array([lp for lp, _ in parts])
            log_rho = float(logsumexp(log_c))
            slope = float(np.dot(np.exp(log_c - log_rho), [s for _, s in parts]))
            return log_rho, slope
        if self._kind == "closed_form" and isinstance(self.density, GaussianOnAffine):
            return self._affine_gaussian(x, delta)
        t = self._terms(x, delta, self.D)
        return _combine(t.log_w, t.sqdist, delta, self.D)

    def log_rho_gauss(self, x, delta):
        """log of the Gaussian convolution at ``x`` with log standard deviation ``delta``."""
        return self.log_rho_and_slope(x, delta)[0]

    def dlogrho_ddelta_gauss(self, x, delta):
        """Exact derivative of ``log_rho_gauss`` in ``delta`` (no finite differences)."""
        return self.log_rho_and_slope(x, delta)[1]

    def log_rho_stderr(self, x, delta):
        """Standard error of ``log_rho_gauss``; zero unless Monte Carlo is involved."""
        x = check_point(x, self.D)
        if self._kind == "mixture":
            parts = [p.log_rho_and_slope(x, delta)[0] for p in self._parts]
            log_c = np.log(self.density.weights) + np.array(parts)
            frac = np.exp(log_c - logsumexp(log_c))
            errs = np.array([p.log_rho_stderr(x, delta) for p in self._parts])
            return float(np.sqrt(np.sum((frac * errs) ** 2)))
        if self._kind != "monte_carlo":
            return 0.0
        t = self._terms(x, delta, self.D)
        w = np.exp(t.log_w - logsumexp(t.log_w)) * len(t.log_w)
        return float(w.std(ddof=1) / np.sqrt(len(w)))

    def dlogrho_stderr(self, x, delta):
        """Standard error of ``dlogrho_ddelta_gauss``; zero unless Monte Carlo is involved."""
        x = check_point(x, self.D)
        if self._kind == "mixture":
            parts = [p.log_rho_and_slope(x, delta) for p in self._parts]
            log_c = np.log(self.density.weights) + np.array([lp for lp, _ in parts])
            frac = np.exp(log_c - logsumexp(log_c))
            s = np.array([sl for _, sl in parts])
            slope_se = np.array([p.dlogrho_stderr(x, delta) for p in self._parts])
            log_se = np.array([p.log_rho_stderr(x, delta) for p in self._parts])
            # slope = sum f_j s_j and d slope / d log rho_j = f_j (s_j - slope)
            var = np.sum((frac * slope_se) ** 2) + np.sum((frac * (s - frac @ s) * log_se) ** 2)
            return float(np.sqrt(var))
        if self._kind != "monte_carlo":
            return 0.0
        t = self._terms(x, delta, self.D)
        r = np.exp(t.log_w - logsumexp(t.log_w))
        m = float(r @ t.sqdist)
        # delta-method error of the self-normalized weighted mean
        return float(np.exp(-2 * delta) * np.sqrt(np.sum(r**2 * (t.sqdist - m) ** 2)))

    def component_log_rho(self, x, delta):
        """Per-component ``log(pi_j rho_j)`` for a mixture (one entry otherwise)."""
        x = check_point(x, self.D)
        if self._kind != "mixture":
            return np.array([self.log_rho_gauss(x, delta)])
        return np.log(self.density.weights) + np.array(
            [p.log_rho_gauss(x, delta) for p in self._parts]
        )

    def _aux_terms(self, x, delta):
        if self._kind == "mixture":
            raise UnsupportedError("intrinsic-kernel integrals need a single manifold")
        x = check_point(x, self.D)
        return self._terms(x, check_delta(delta), self.intrinsic_dim)

    def prop1_integral(self, x, delta):
        """``integral p(x') N_d(x - x'; 0, delta) dx'`` with the intrinsic d; tends to p(x)."""
        if self._kind == "closed_form" and isinstance(self.density, GaussianOnAffine):
            return float(np.exp(self._affine_aux(x, delta)[0]))
        t = self._aux_terms(x, delta)
        return float(np.exp(logsumexp(t.log_w)))

    def prop2_integral(self, x, delta):
        """``exp(-2 delta) integral p(x') |x - x'|^2 N_d(x - x') dx'``; tends to d p(x)."""
        if self._kind == "closed_form" and isinstance(self.density, GaussianOnAffine):
            log_p1, ratio = self._affine_aux(x, delta)
            return float(np.exp(log_p1) * ratio)
        t = self._aux_terms(x, delta)
        with np.errstate(divide="ignore"):
            log_sq = np.log(t.sqdist)
        return float(np.exp(logsumexp(t.log_w + log_sq) - 2 * delta))

    def _affine_aux(self, x, delta):
        # returns log prop1 and prop2 / prop1 in closed form
        dens = self.density
        m = dens.manifold
        x = check_point(x, self.D)
        u, normal = m.split(x)
        s2 = np.exp(2 * check_delta(delta))
        nn = float(normal @ normal)
        C = dens.cov + s2 * np.eye(m.intrinsic_dim)
        diff = u - dens.mean
        _, logdet = np.linalg.slogdet(C)
        log_p1 = -0.5 * (m.intrinsic_dim * LOG_2PI + logdet + diff @ np.linalg.solve(C, diff)) - 0.5 * nn / s2
        # posterior of the manifold coordinate given the kernel centred at u
        prec = np.linalg.inv(dens.cov) + np.eye(m.intrinsic_dim) / s2
        S = np.linalg.inv(prec)
        post_mean = S @ (np.linalg.solve(dens.cov, dens.mean) + u / s2)
        ratio = (np.trace(S) + np.sum((post_mean - u) ** 2) + nn) / s2
        return float(log_p1), float(ratio)


# ---------------------------------------------------------------------------
# Ball probabilities


def log_unit_ball_inv_volume(dim):
    """``log U_dim`` where ``U_dim = pi^{-dim/2} Gamma(dim/2 + 1)``."""
    return -0.5 * dim * np.log(np.pi) + special.gammaln(dim / 2 + 1)


class BallProbability(NamedTuple):
    value: float
    low: float
    high: float
    stderr: float
    no_hits: bool
    method: str


def _sphere_cap(m, x, radius):
    """Exact uniform mass of a Euclidean ball around ``x`` on a round sphere."""
    inner, outer = m._split(x)
    a = np.linalg.norm(inner)
    r = m.radius
    # 1 - cos(theta) for the boundary angle, written without cancellation
    one_minus_cos = (radius**2 - (a - r) ** 2 - outer @ outer) / (2 * r * a) if a > 0 else np.nan
    if a == 0:
        return 1.0 if radius**2 > r**2 + outer @ outer else 0.0
    if one_minus_cos <= 0:
        return 0.0
    if one_minus_cos >= 2:
        return 1.0
    sin2 = one_minus_cos * (2 - one_minus_cos)
    half = 0.5 * special.betainc(m.intrinsic_dim / 2, 0.5, sin2)
    return float(half if one_minus_cos <= 1 else 1 - half)


def _sphere_cap_dlog(m, x, delta):
    """Analytic d/d delta of log cap mass for ``x`` on the sphere."""
    d, r = m.intrinsic_dim, m.radius
    rho = np.exp(delta)
    if rho >= 2 * r:
        return 0.0
    half_angle = np.arcsin(rho / (2 * r))
    theta = 2 * half_angle
    P = _sphere_cap(m, x, rho)
    dP_dtheta = np.sin(theta) ** (d - 1) / special.beta(d / 2, 0.5)
    dtheta_drho = 1 / (r * np.cos(half_angle))
    return float(rho * dP_dtheta * dtheta_drho / P)


def _exact_ball(density, x, radius):
    if isinstance(density, Empirical):
        inside = np.sum((density.atoms - x) ** 2, axis=1) < radius**2
        return float(density.weights[inside].sum())
    if isinstance(density, Uniform) and isinstance(density.manifold, Sphere):
        return _sphere_cap(density.manifold, x, radius)
    return None


@lru_cache(maxsize=8)
def _sample_bank(density, n, seed):
    bank = density.sample(n, np.random.default_rng(seed))
    bank.setflags(write=False)
    return bank


def _log_density_points(density, pts):
    if isinstance(density, Uniform):
        return np.full(len(pts), -np.log(density.manifold.area))
    if isinstance(density, GaussianOnAffine):
        from scipy import stats

        u = density.manifold.coords(pts)
        return np.atleast_1d(stats.multivariate_normal(density.mean, density.cov).logpdf(u))
    raise UnsupportedError(f"importance sampling needs pointwise densities, not {type(density).__name__}")


@lru_cache(maxsize=32)
def _importance_bank(density, x_key, scale, n, seed):
    x = np.frombuffer(x_key)
    rng = np.random.default_rng(seed)
    pts, log_q, inside = density.manifold.local_proposal(x, scale, n, rng)
    w = np.zeros(n)
    w[inside] = np.exp(_log_density_points(density, pts[inside]) - log_q[inside])
    dist = np.linalg.norm(pts - x, axis=1)
    dist.setflags(write=False)
    w.setflags(write=False)
    return dist, w


def _monte_carlo_ball(density, x, radius, n_samples, seed, method, scale=None):
    if method == "importance":
        if scale is None:
            scale = radius
        dist, w = _importance_bank(density, x.tobytes(), float(scale), n_samples, seed)
        vals = w * (dist < radius)
        p = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(n_samples))
        hits = int(np.count_nonzero(vals))
        return BallProbability(p, max(0.0, p - 1.96 * se), p + 1.96 * se, se, hits == 0, "importance")
    bank = _sample_bank(density, n_samples, seed)
    hits = int(np.count_nonzero(np.sum((bank - x) ** 2, axis=1) < radius**2))
    p = hits / n_samples
    low, high = proportion_confint(hits, n_samples, alpha=0.05, method="wilson")
    se = np.sqrt(p * (1 - p) / n_samples)
    return BallProbability(p, float(low), float(high), float(se), hits == 0, "monte_carlo")


def component_ball_probabilities(density, x, delta, method="auto", n_samples=1_000_000, seed=0):
    """Per-component ``pi_j P_j(ball)`` for a mixture, each by its own method."""
    x = check_point(x, density.ambient_dim)
    if not isinstance(density, Mixture):
        return np.array([ball_probability(density, x, delta, method, n_samples, seed).value])
    return np.array([
        w * ball_probability(c, x, delta, method, n_samples, seed).value
        for w, c in zip(density.weights, density.components)
    ])


def ball_probability(density, x, delta, method="auto", n_samples=1_000_000, seed=0, scale=None):
    """Probability that ``X ~ density`` falls in the open ball of radius ``exp(delta)``.

    ``method`` is ``"auto"`` (exact where a formula exists, else hit-or-miss),
    ``"exact"``, ``"monte_carlo"`` (hit-or-miss over a fixed sample bank, Wilson
    interval) or ``"importance"`` (a proposal concentrated around ``x`` at
    length ``scale``, default ``exp(delta)``).
    """
    x = check_point(x, density.ambient_dim)
    radius = float(np.exp(check_delta(delta)))
    if not radius > 0:
        raise ValueError("ball radius underflowed to zero")

    if isinstance(density, Mixture):
        parts = [
            ball_probability(c, x, delta, method, n_samples, seed, scale) for c in density.components
        ]
        w = density.weights
        value = float(sum(wj * p.value for wj, p in zip(w, parts)))
        se = float(np.sqrt(sum((wj * p.stderr) ** 2 for wj, p in zip(w, parts))))
        low = float(sum(wj * p.low for wj, p in zip(w, parts)))
        high = float(sum(wj * p.high for wj, p in zip(w, parts)))
        methods = "+".join(sorted({p.method for p in parts}))
        return BallProbability(value, low, min(high, 1.0), se, value == 0, methods)

    if method in ("auto", "exact"):
        p = _exact_ball(density, x, radius)
        if p is not None:
            return BallProbability(p, p, p, 0.0, p == 0, "exact")
        if method == "exact":
            raise UnsupportedError(f"no exact ball probability for {type(density).__name__}")
        method = "monte_carlo"
    if method not in ("monte_carlo", "importance"):
        raise ValueError(f"unknown method {method!r}")
    return _monte_carlo_ball(density, x, radius, n_samples, seed, method, scale)


def log_rho_uniform(density, x, delta, **kwargs):
    """log of the ball convolution ``U_D exp(-D delta) P(ball)``."""
    D = density.ambient_dim
    p = ball_probability(density, x, delta, **kwargs).value
    with np.errstate(divide="ignore"):
        return float(log_unit_ball_inv_volume(D) - D * delta + np.log(p))


def _analytic_ball_dlog(density, x, delta):
    """Analytic slope when every part has a closed form, else ``None``."""
    if isinstance(density, Mixture):
        vals, slopes = [], []
        for w, c in zip(density.weights, density.components):
            p = _exact_ball(c, x, np.exp(delta))
            if p is None:
                return None
            s = _analytic_ball_dlog(c, x, delta) if p > 0 else 0.0
            if s is None:
                return None
            vals.append(w * p)
            slopes.append(s)
        vals = np.array(vals)
        if vals.sum() == 0:
            return None
        return float(np.dot(vals / vals.sum(), slopes))
    if isinstance(density, Empirical):
        return 0.0
    if isinstance(density, Uniform) and isinstance(density.manifold, Sphere):
        m = density.manifold
        if m.residual(x) < 1e-9:
            return _sphere_cap_dlog(m, x, delta)
    return None


class _Slope(NamedTuple):
    value: float
    stderr: float
    method: str


def _ball_slope(density, x, delta, h=0.05, method="auto", derivative="auto", n_samples=1_000_000, seed=0):
    """d/d delta log P(ball) at ``delta``.

    ``derivative="auto"`` differentiates analytically when every part of the
    density has a closed-form ball probability and ``method`` allows exact
    values; ``"central"`` always uses the central difference with step ``h``.
    """
    x = check_point(x, density.ambient_dim)
    delta = check_delta(delta)
    if derivative not in ("auto", "analytic", "central"):
        raise ValueError(f"unknown derivative {derivative!r}")
    if derivative != "central" and method in ("auto", "exact"):
        s = _analytic_ball_dlog(density, x, delta)
        if s is not None:
            return _Slope(s, 0.0, "analytic")
    if derivative == "analytic":
        raise UnsupportedError("no analytic ball-probability derivative for this density")
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")

    if method == "importance" and not isinstance(density, Mixture):
        return _importance_slope(density, x, delta, h, n_samples, seed)

    # exact values or one shared sample bank for both stencil points
    kw = dict(method=method, n_samples=n_samples, seed=seed, scale=np.exp(delta))
    lo = ball_probability(density, x, delta - h, **kw)
    hi = ball_probability(density, x, delta + h, **kw)
    if lo.value <= 0 or hi.value <= 0:
        raise ValueError("zero ball probability at a stencil point")
    value = (np.log(hi.value) - np.log(lo.value)) / (2 * h)
    if lo.method == "monte_carlo":
        # nested balls on one bank: only the shell between them is random
        se = np.sqrt((hi.value - lo.value) / (n_samples * lo.value * hi.value)) / (2 * h)
    else:
        se = np.hypot(hi.stderr / hi.value, lo.stderr / lo.value) / (2 * h)
    return _Slope(float(value), float(se), lo.method)


def _importance_slope(density, x, delta, h, n_samples, seed):
    # common random numbers across the stencil; delta-method standard error
    dist, w = _importance_bank(density, x.tobytes(), float(np.exp(delta)), n_samples, seed)
    a = w * (dist < np.exp(delta + h))
    b = w * (dist < np.exp(delta - h))
    A, B = a.mean(), b.mean()
    if A <= 0 or B <= 0:
        raise ValueError("zero ball probability at a stencil point")
    g = a / A - b / B
    return _Slope(float((np.log(A) - np.log(B)) / (2 * h)), float(g.std(ddof=1) / np.sqrt(n_samples) / (2 * h)), "importance")


def dlogrho_ddelta_uniform(density, x, delta, h=0.05, method="auto", form="ball", derivative="auto", **kwargs):
    """Slope in ``delta`` of the log ball probability, or of the log ball convolution.

    ``form="ball"`` returns d/d delta log P(ball), whose limit is the LID;
    ``form="rho_u"`` subtracts the ambient dimension to give d/d delta log
    of the uniform convolution, whose limit is LID - D.
    """
    if form not in ("ball", "rho_u"):
        raise ValueError(f"form must be 'ball' or 'rho_u', got {form!r}")
    s = _ball_slope(density, x, delta, h, method, derivative, **kwargs).value
    return s - density.ambient_dim if form == "rho_u" else s
