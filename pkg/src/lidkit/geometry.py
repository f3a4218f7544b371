"""Synthetic embedded submanifolds of R^D with known local intrinsic dimension.

Manifolds carry the geometry (on-manifold checks, geodesics, charts) and
densities carry the probability law on top of them. All densities are taken
with respect to the Riemannian measure of their manifold; on point sets that
measure is the counting measure, so density values are atom masses.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import special, stats

from ._validation import ON_MANIFOLD_TOL, check_point, check_positive_int, check_random_state
from .exceptions import (
    AssumptionViolated,
    InfiniteDistanceError,
    OffManifoldError,
    UnsupportedError,
)

__all__ = [
    "AffineSubspace",
    "Sphere",
    "SwissRoll",
    "PointSet",
    "DisjointUnion",
    "Uniform",
    "GaussianOnAffine",
    "Empirical",
    "Mixture",
    "QueryPoint",
    "MomentEstimate",
    "query_point",
    "sample",
    "density_at",
    "geodesic_distance",
    "second_moment",
    "make_circle",
    "make_sphere",
    "make_gaussian_plane",
    "make_point_mass",
    "make_circle_and_atoms",
]


# ---------------------------------------------------------------------------
# Manifolds


class Manifold:
    """Base class. Subclasses define ``ambient_dim`` and ``residual``."""

    ambient_dim: int

    def residual(self, x):
        raise NotImplementedError

    def check(self, x, tol=ON_MANIFOLD_TOL):
        x = check_point(x, self.ambient_dim)
        r = self.residual(x)
        if not r < tol:
            raise OffManifoldError(r, tol)
        return x

    def contains(self, x, tol=ON_MANIFOLD_TOL):
        return self.residual(check_point(x, self.ambient_dim)) < tol

    def component_of(self, x):
        return 0

    def lid_at(self, x):
        return self.intrinsic_dim

    def geodesic(self, x, y):
        raise UnsupportedError(f"{type(self).__name__} has no closed-form geodesic distance")

    def local_proposal(self, x, scale, n, rng):
        """Draw ``n`` points concentrated around ``x`` at length ``scale``.

        Returns ``(points, log_q, inside)``: ``log_q`` is the proposal log
        density with respect to the Riemannian measure and ``inside`` flags
        draws that landed on the manifold.
        """
        raise UnsupportedError(f"no local proposal for {type(self).__name__}")


@dataclass(frozen=True, eq=False)
class AffineSubspace(Manifold):
    """The affine set ``offset + span(basis)``; ``basis`` is D x d orthonormal."""

    basis: np.ndarray
    offset: Optional[np.ndarray] = None

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if B.ndim != 2 or B.shape[1] > B.shape[0]:
            raise ValueError(f"basis must be D x d with d <= D, got {B.shape}")
        err = np.max(np.abs(B.T @ B - np.eye(B.shape[1]))) if B.size else 0.0
        if err > 1e-12:
            raise ValueError(f"basis columns are not orthonormal (max error {err:.2e})")
        off = np.zeros(B.shape[0]) if self.offset is None else check_point(self.offset, B.shape[0], "offset")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "offset", off)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def intrinsic_dim(self):
        return self.basis.shape[1]

    def coords(self, x):
        return (np.asarray(x) - self.offset) @ self.basis

    def embed(self, u):
        return self.offset + np.asarray(u) @ self.basis.T

    def split(self, x):
        """Return tangential coordinates and the normal component of ``x``."""
        u = self.coords(x)
        return u, np.asarray(x) - self.embed(u)

    def residual(self, x):
        return float(np.linalg.norm(self.split(x)[1]))

    def geodesic(self, x, y):
        return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))

    def local_proposal(self, x, scale, n, rng):
        u0 = self.coords(x)
        u = u0 + scale * rng.standard_normal((n, self.intrinsic_dim))
        log_q = stats.multivariate_normal(u0, scale**2 * np.eye(self.intrinsic_dim)).logpdf(u)
        return self.embed(u), np.atleast_1d(log_q), np.ones(n, dtype=bool)


@dataclass(frozen=True, eq=False)
class Sphere(Manifold):
    """Round d-sphere of a given radius living in the first d+1 coordinates."""

    radius: float = 1.0
    ambient_dim: int = 2
    intrinsic_dim: int = 1
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 1 <= self.intrinsic_dim < self.ambient_dim:
            raise ValueError("need 1 <= intrinsic_dim < ambient_dim")
        c = np.zeros(self.ambient_dim) if self.center is None else check_point(self.center, self.ambient_dim, "center")
        object.__setattr__(self, "center", c)

    @property
    def area(self):
        d = self.intrinsic_dim
        return 2 * np.pi ** ((d + 1) / 2) / special.gamma((d + 1) / 2) * self.radius**d

    def _split(self, x):
        y = np.asarray(x, dtype=float) - self.center
        k = self.intrinsic_dim + 1
        return y[..., :k], y[..., k:]

    def residual(self, x):
        inner, outer = self._split(x)
        return float(np.hypot(np.linalg.norm(inner) - self.radius, np.linalg.norm(outer)))

    def embed_unit(self, u):
        """Map unit vectors in R^{d+1} onto the sphere."""
        u = np.atleast_2d(u)
        pts = np.tile(self.center, (u.shape[0], 1))
        pts[:, : self.intrinsic_dim + 1] += self.radius * u
        return pts

    def geodesic(self, x, y):
        u = self._split(x)[0] / self.radius
        v = self._split(y)[0] / self.radius
        # half-angle form stays accurate for nearly equal and antipodal points
        return float(self.radius * 2 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))

    def local_proposal(self, x, scale, n, rng):
        mu = self._split(x)[0] / self.radius
        kappa = (self.radius / scale) ** 2
        vmf = stats.vonmises_fisher(mu, kappa)
        u = vmf.rvs(n, random_state=rng)
        log_q = vmf.logpdf(u) - self.intrinsic_dim * np.log(self.radius)
        return self.embed_unit(u), log_q, np.ones(n, dtype=bool)


_T_MIN, _T_MAX = 1.5 * np.pi, 4.5 * np.pi


def _spiral_arclength(t):
    t = np.asarray(t, dtype=float)
    return 0.5 * (t * np.sqrt(1 + t * t) + np.arcsinh(t))


@dataclass(frozen=True, eq=False)
class SwissRoll(Manifold):
    """Surface (t cos t, t sin t, h), t in [1.5 pi, 4.5 pi], h in [0, height].

    The surface is developable: (arc length along the spiral, h) is an
    isometric chart onto a rectangle, which gives exact geodesics.
    """

    ambient_dim: int = 3
    height: float = 10.0

    intrinsic_dim = 2

    def __post_init__(self):
        if self.ambient_dim < 3:
            raise ValueError("swiss roll needs ambient_dim >= 3")

    @property
    def length(self):
        return float(_spiral_arclength(_T_MAX) - _spiral_arclength(_T_MIN))

    @property
    def area(self):
        return self.length * self.height

    @staticmethod
    def t_of_arclength(s):
        """Invert arc length measured from t = 1.5 pi (Newton on a convex map)."""
        target = np.asarray(s, dtype=float) + _spiral_arclength(_T_MIN)
        t = np.sqrt(np.maximum(2 * target, 0.0))
        for _ in range(60):
            step = (_spiral_arclength(t) - target) / np.sqrt(1 + t * t)
            t = t - step
            if np.all(np.abs(step) < 1e-15 * np.maximum(1, np.abs(t))):
                break
        return t

    def embed_chart(self, s, h):
        t = self.t_of_arclength(s)
        s = np.atleast_1d(s)
        pts = np.zeros((s.shape[0], self.ambient_dim))
        pts[:, 0] = t * np.cos(t)
        pts[:, 1] = t * np.sin(t)
        pts[:, 2] = h
        return pts

    def chart(self, x):
        x = np.asarray(x, dtype=float)
        t = np.clip(np.hypot(x[0], x[1]), _T_MIN, _T_MAX)
        return float(_spiral_arclength(t) - _spiral_arclength(_T_MIN)), float(x[2])

    def residual(self, x):
        x = np.asarray(x, dtype=float)
        t = np.clip(np.hypot(x[0], x[1]), _T_MIN, _T_MAX)
        off_h = max(0.0, -x[2], x[2] - self.height)
        return float(
            np.sqrt(
                (t * np.cos(t) - x[0]) ** 2
                + (t * np.sin(t) - x[1]) ** 2
                + off_h**2
                + np.sum(x[3:] ** 2)
            )
        )

    def geodesic(self, x, y):
        s1, h1 = self.chart(x)
        s2, h2 = self.chart(y)
        return float(np.hypot(s1 - s2, h1 - h2))

    def local_proposal(self, x, scale, n, rng):
        s0, h0 = self.chart(x)
        s = s0 + scale * rng.standard_normal(n)
        h = h0 + scale * rng.standard_normal(n)
        inside = (s >= 0) & (s <= self.length) & (h >= 0) & (h <= self.height)
        log_q = -np.log(2 * np.pi * scale**2) - 0.5 * ((s - s0) ** 2 + (h - h0) ** 2) / scale**2
        return self.embed_chart(np.clip(s, 0, self.length), h), log_q, inside


@dataclass(frozen=True, eq=False)
class PointSet(Manifold):
    """Finitely many points; a 0-dimensional manifold with counting measure."""

    points: np.ndarray

    intrinsic_dim = 0

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.ndim != 2 or P.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, D) array")
        object.__setattr__(self, "points", P)

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    def nearest(self, x):
        dist = np.linalg.norm(self.points - np.asarray(x), axis=1)
        i = int(np.argmin(dist))
        return i, float(dist[i])

    def residual(self, x):
        return self.nearest(x)[1]

    def geodesic(self, x, y):
        if np.array_equal(self.points[self.nearest(x)[0]], self.points[self.nearest(y)[0]]):
            return 0.0
        raise InfiniteDistanceError("distinct atoms are different connected components")


@dataclass(frozen=True, eq=False)
class DisjointUnion(Manifold):
    """Finite disjoint union with mixture weights and a declared gap ``separation``."""

    components: Sequence[Manifold]
    weights: Sequence[float]
    separation: float

    def __post_init__(self):
        comps = tuple(self.components)
        w = np.asarray(self.weights, dtype=float)
        if len(comps) == 0 or w.shape != (len(comps),):
            raise ValueError("need one weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError(f"weights must be positive and sum to 1, got {w}")
        if not self.separation > 0:
            raise ValueError("separation must be positive")
        dims = {c.ambient_dim for c in comps}
        if len(dims) != 1:
            raise ValueError("components must share an ambient dimension")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def ambient_dim(self):
        return self.components[0].ambient_dim

    @property
    def intrinsic_dim(self):
        dims = {c.intrinsic_dim for c in self.components}
        return dims.pop() if len(dims) == 1 else None

    def residuals(self, x):
        return np.array([c.residual(x) for c in self.components])

    def residual(self, x):
        return float(self.residuals(x).min())

    def component_of(self, x):
        return int(np.argmin(self.residuals(x)))

    def lid_at(self, x):
        return self.components[self.component_of(x)].intrinsic_dim

    def geodesic(self, x, y):
        i, j = self.component_of(x), self.component_of(y)
        if i != j:
            raise InfiniteDistanceError("points lie on different components")
        return self.components[i].geodesic(x, y)


# ---------------------------------------------------------------------------
# Densities


class Density:
    manifold: Manifold

    @property
    def ambient_dim(self):
        return self.manifold.ambient_dim

    def sample(self, n, rng):
        raise UnsupportedError(f"{type(self).__name__} is not samplable")

    def density_at(self, x):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Uniform(Density):
    """Uniform law on a compact manifold (sphere, swiss roll)."""

    manifold: Manifold

    def __post_init__(self):
        if not isinstance(self.manifold, (Sphere, SwissRoll)):
            raise UnsupportedError(f"no uniform law on {type(self.manifold).__name__}")

    def sample(self, n, rng):
        m = self.manifold
        if isinstance(m, Sphere):
            g = rng.standard_normal((n, m.intrinsic_dim + 1))
            return m.embed_unit(g / np.linalg.norm(g, axis=1, keepdims=True))
        s = rng.uniform(0, m.length, n)
        h = rng.uniform(0, m.height, n)
        return m.embed_chart(s, h)

    def density_at(self, x):
        self.manifold.check(x)
        return 1.0 / self.manifold.area


@dataclass(frozen=True, eq=False)
class GaussianOnAffine(Density):
    """Gaussian in the subspace coordinates of an affine subspace."""

    manifold: AffineSubspace
    mean: Optional[np.ndarray] = None
    cov: Optional[np.ndarray] = None

    def __post_init__(self):
        d = self.manifold.intrinsic_dim
        mean = np.zeros(d) if self.mean is None else np.asarray(self.mean, dtype=float).reshape(d)
        cov = np.eye(d) if self.cov is None else np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (d, d) or not np.allclose(cov, cov.T):
            raise ValueError("cov must be a symmetric d x d matrix")
        if d and np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("cov must be positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def sample(self, n, rng):
        u = rng.multivariate_normal(self.mean, self.cov, size=n)
        return self.manifold.embed(u)

    def density_at(self, x):
        x = self.manifold.check(x)
        return float(stats.multivariate_normal(self.mean, self.cov).pdf(self.manifold.coords(x)))


@dataclass(frozen=True, eq=False)
class Empirical(Density):
    """Atoms on a point set; equal weights unless given."""

    manifold: PointSet
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.manifold.points.shape[0]
        w = np.full(n, 1.0 / n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be positive, one per atom, summing to 1")
        object.__setattr__(self, "weights", w)

    @property
    def atoms(self):
        return self.manifold.points

    def sample(self, n, rng):
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        return self.atoms[idx].copy()

    def density_at(self, x):
        x = self.manifold.check(x)
        hit = np.all(self.atoms == self.atoms[self.manifold.nearest(x)[0]], axis=1)
        return float(self.weights[hit].sum())


@dataclass(frozen=True, eq=False)
class Mixture(Density):
    """Per-component densities on a ``DisjointUnion``; weights come from the union."""

    manifold: DisjointUnion
    components: Sequence[Density] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != len(self.manifold.components):
            raise ValueError("need one density per union component")
        for dens, man in zip(comps, self.manifold.components):
            if dens.manifold is not man:
                raise ValueError("component density must live on the matching union component")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self):
        return self.manifold.weights

    def sample(self, n, rng):
        labels = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.ambient_dim))
        for j, dens in enumerate(self.components):
            mask = labels == j
            if mask.any():
                out[mask] = dens.sample(int(mask.sum()), rng)
        return out

    def density_at(self, x):
        x = self.manifold.check(x)
        j = self.manifold.component_of(x)
        return float(self.weights[j] * self.components[j].density_at(x))


# ---------------------------------------------------------------------------
# Query points and module-level operations


@dataclass(frozen=True, eq=False)
class QueryPoint:
    coords: np.ndarray
    component_index: int
    true_lid: int


def query_point(manifold, coords):
    """Validate ``coords`` against ``manifold`` and attach its component and LID."""
    x = manifold.check(coords)
    return QueryPoint(x, manifold.component_of(x), int(manifold.lid_at(x)))


def sample(density, n, seed=None):
    """Draw ``n`` i.i.d. points from ``density``; deterministic for a fixed seed."""
    n = check_positive_int(n, "n")
    return density.sample(n, check_random_state(seed))


def density_at(density, x):
    """Density of ``density`` at ``x`` with respect to the Riemannian measure.

    Raises:
        OffManifoldError: if ``x`` is not on the manifold.
    """
    return density.density_at(x)


def geodesic_distance(manifold, x, y):
    """Closed-form geodesic distance; never below the Euclidean distance."""
    x = manifold.check(x)
    y = manifold.check(y)
    return manifold.geodesic(x, y)


class MomentEstimate(NamedTuple):
    value: float
    stderr: float
    method: str


def second_moment(density, x, n_samples=100_000, seed=0):
    """Expected squared geodesic distance from ``x`` under ``density``.

    Circles use periodic trapezoid quadrature, Gaussians on affine subspaces
    and point masses are exact, everything else falls back to Monte Carlo
    with a reported standard error.

    Raises:
        AssumptionViolated: if the moment is infinite (mass on another
            connected component) or the estimate is not finite.
    """
    if isinstance(x, QueryPoint):
        x = x.coords
    x = density.manifold.check(x)

    if isinstance(density, Mixture):
        if len(density.components) > 1:
            raise AssumptionViolated("mass on several components: second moment is infinite")
        return second_moment(density.components[0], x, n_samples, seed)

    if isinstance(density, Empirical):
        same = np.all(density.atoms == density.atoms[density.manifold.nearest(x)[0]], axis=1)
        if not same.all():
            raise AssumptionViolated("atoms away from x are at infinite geodesic distance")
        return MomentEstimate(0.0, 0.0, "exact")

    if isinstance(density, GaussianOnAffine):
        u = density.manifold.coords(x)
        value = float(np.trace(density.cov) + np.sum((density.mean - u) ** 2))
        return MomentEstimate(value, 0.0, "exact")

    m = density.manifold
    if isinstance(density, Uniform) and isinstance(m, Sphere) and m.intrinsic_dim == 1:
        n = 4096
        theta = 2 * np.pi * np.arange(n) / n
        pts = m.embed_unit(np.column_stack([np.cos(theta), np.sin(theta)]))
        d2 = np.array([m.geodesic(x, p) ** 2 for p in pts])
        value = float(d2.mean())
        return MomentEstimate(value, 0.0, "quadrature")

    X = sample(density, n_samples, seed)
    d2 = np.array([m.geodesic(x, p) ** 2 for p in X])
    value = float(d2.mean())
    if not np.isfinite(value):
        raise AssumptionViolated("second moment estimate is not finite")
    return MomentEstimate(value, float(d2.std(ddof=1) / np.sqrt(len(d2))), "monte_carlo")


# ---------------------------------------------------------------------------
# Catalog


def make_circle(radius=1.0, ambient_dim=2, center=None):
    """Uniform law on a circle."""
    return Uniform(Sphere(radius, ambient_dim, 1, center))


def make_sphere(intrinsic_dim=2, ambient_dim=3, radius=1.0, center=None):
    return Uniform(Sphere(radius, ambient_dim, intrinsic_dim, center))


def make_gaussian_plane(intrinsic_dim=2, ambient_dim=3, mean=None, cov=None, offset=None):
    """Gaussian on the span of the first ``intrinsic_dim`` coordinate axes."""
    basis = np.eye(ambient_dim)[:, :intrinsic_dim]
    return GaussianOnAffine(AffineSubspace(basis, offset), mean, cov)


def make_point_mass(point):
    return Empirical(PointSet(np.atleast_2d(point)))


def make_circle_and_atoms(gap=4.0, weights=(0.5, 0.25, 0.25)):
    """Unit circle plus two atoms on the x-axis, each ``gap`` away from the circle."""
    circle = Sphere(1.0, 2, 1)
    a = PointSet([[1.0 + gap, 0.0]])
    b = PointSet([[-1.0 - gap, 0.0]])
    union = DisjointUnion((circle, a, b), weights, separation=gap)
    return Mixture(union, (Uniform(circle), Empirical(a), Empirical(b)))
