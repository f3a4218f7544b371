import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lidkit import geometry as geo
from lidkit.exceptions import AssumptionViolated, InfiniteDistanceError, OffManifoldError, UnsupportedError


def test_point_mass_sample():
    X = geo.sample(geo.make_point_mass([1.0, 0.0]), 3, seed=7)
    np.testing.assert_array_equal(X, [[1, 0]] * 3)


def test_circle_sample_uniform_angles():
    X = geo.sample(geo.make_circle(), 100_000, seed=1)
    np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
    angles = (np.arctan2(X[:, 1], X[:, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(angles, "uniform").statistic < 0.01


def test_gaussian_line_moments():
    dens = geo.make_gaussian_plane(1, 3)
    X = geo.sample(dens, 100_000, seed=2)
    assert abs(X[:, 0].var() - 1) < 0.02
    assert np.all(X[:, 1:] == 0)


def test_sample_deterministic_and_on_manifold():
    for dens in (geo.make_sphere(2, 3), geo.Uniform(geo.SwissRoll()), geo.make_circle_and_atoms()):
        a = geo.sample(dens, 500, seed=3)
        b = geo.sample(dens, 500, seed=3)
        np.testing.assert_array_equal(a, b)
        assert max(dens.manifold.residual(x) for x in a) < 1e-9


def test_sample_rejects_zero():
    with pytest.raises(ValueError):
        geo.sample(geo.make_circle(), 0)


def test_density_at_examples():
    assert geo.density_at(geo.make_circle(), [1.0, 0.0]) == pytest.approx(1 / (2 * np.pi))
    pts = geo.Empirical(geo.PointSet(np.eye(4)))
    assert geo.density_at(pts, [0, 0, 1, 0]) == pytest.approx(0.25)
    assert geo.density_at(geo.make_gaussian_plane(2, 3), [0, 0, 0]) == pytest.approx(1 / (2 * np.pi))


def test_density_at_off_manifold():
    with pytest.raises(OffManifoldError) as info:
        geo.density_at(geo.make_circle(), [1.1, 0.0])
    assert info.value.residual == pytest.approx(0.1)


def test_circle_histogram_chi2():
    dens = geo.make_circle()
    X = geo.sample(dens, 100_000, seed=5)
    theta = np.arctan2(X[:, 1], X[:, 0])
    counts, edges = np.histogram(theta, bins=50, range=(-np.pi, np.pi))
    mids = 0.5 * (edges[1:] + edges[:-1])
    p = [geo.density_at(dens, [np.cos(a), np.sin(a)]) * (edges[1] - edges[0]) for a in mids]
    assert stats.chisquare(counts, 100_000 * np.array(p)).pvalue > 0.01


@pytest.mark.parametrize("dens,ref_area", [
    (geo.make_circle(radius=2.0), 4 * np.pi),
    (geo.make_sphere(2, 3), 4 * np.pi),
    (geo.Uniform(geo.SwissRoll()), None),
])
def test_uniform_total_mass(dens, ref_area):
    area = dens.manifold.area if ref_area is None else ref_area
    X = geo.sample(dens, 2000, seed=0)
    vals = np.array([geo.density_at(dens, x) for x in X]) * area
    assert abs(vals.mean() - 1) <= 3 * vals.std() / np.sqrt(len(vals)) + 1e-12


def test_gaussian_total_mass_importance():
    # reference measure: a wider Gaussian in subspace coordinates
    dens = geo.make_gaussian_plane(2, 3, cov=np.diag([1.0, 0.5]))
    rng = np.random.default_rng(0)
    ref = stats.multivariate_normal(np.zeros(2), 4 * np.eye(2))
    U = ref.rvs(20_000, random_state=rng)
    w = np.array([geo.density_at(dens, [u[0], u[1], 0.0]) for u in U]) / ref.pdf(U)
    assert abs(w.mean() - 1) < 3 * w.std() / np.sqrt(len(w))


def test_geodesic_examples():
    c = geo.Sphere(1.0, 2, 1)
    assert geo.geodesic_distance(c, [1, 0], [-1, 0]) == pytest.approx(np.pi)
    assert geo.geodesic_distance(c, [1, 0], [0, 1]) == pytest.approx(np.pi / 2)
    plane = geo.AffineSubspace(np.eye(3)[:, :2])
    assert geo.geodesic_distance(plane, [1, 2, 0], [4, 6, 0]) == pytest.approx(5.0)


def test_geodesic_infinite_and_unsupported():
    u = geo.make_circle_and_atoms().manifold
    with pytest.raises(InfiniteDistanceError):
        geo.geodesic_distance(u, [1, 0], [5, 0])
    with pytest.raises(UnsupportedError):
        geo.Manifold().geodesic(0, 0)


@pytest.mark.parametrize("manifold", [geo.Sphere(1.0, 3, 2), geo.SwissRoll(), geo.AffineSubspace(np.eye(3)[:, :2])])
def test_geodesic_is_metric(manifold):
    dens = geo.Uniform(manifold) if not isinstance(manifold, geo.AffineSubspace) else geo.GaussianOnAffine(manifold)
    X = geo.sample(dens, 3000, seed=11).reshape(1000, 3, -1)
    for x, y, z in X:
        dxy = manifold.geodesic(x, y)
        assert dxy == manifold.geodesic(y, x)
        assert dxy >= np.linalg.norm(x - y) - 1e-12
        assert manifold.geodesic(x, z) <= dxy + manifold.geodesic(y, z) + 1e-9


def test_swiss_roll_chart_is_isometric():
    m = geo.SwissRoll()
    s = np.linspace(0, m.length, 20001)
    pts = m.embed_chart(s, np.zeros_like(s))
    chord = np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))
    # chords undershoot the arc by O(kappa^2 ds^2)
    assert chord == pytest.approx(m.length, rel=1e-7)


def test_union_separation_holds():
    dens = geo.make_circle_and_atoms()
    X = geo.sample(dens, 3000, seed=4)
    comp = np.array([dens.manifold.component_of(x) for x in X])
    for i in range(3):
        for j in range(i + 1, 3):
            A, B = X[comp == i], X[comp == j]
            d = np.linalg.norm(A[:, None] - B[None], axis=2)
            assert d.min() >= dens.manifold.separation


def test_union_weights_validated():
    c = geo.Sphere(1.0, 2, 1)
    with pytest.raises(ValueError):
        geo.DisjointUnion((c, geo.PointSet([[5.0, 0.0]])), (0.6, 0.6), 4.0)
    with pytest.raises(ValueError):
        geo.DisjointUnion((c, geo.PointSet([[5.0, 0.0]])), (1.0, 0.0), 4.0)


def test_affine_basis_must_be_orthonormal():
    with pytest.raises(ValueError):
        geo.AffineSubspace(np.array([[1.0], [1.0], [0.0]]))


def test_query_point_lid():
    u = geo.make_circle_and_atoms().manifold
    q = geo.query_point(u, [0.0, 1.0])
    assert (q.component_index, q.true_lid) == (0, 1)
    q = geo.query_point(u, [-5.0, 0.0])
    assert (q.component_index, q.true_lid) == (2, 0)


def test_second_moment_examples():
    m = geo.second_moment(geo.make_circle(), [1.0, 0.0])
    assert m.value == pytest.approx(np.pi**2 / 3, rel=1e-6)
    assert geo.second_moment(geo.make_point_mass([0.0, 0.0]), [0.0, 0.0]).value == 0.0
    assert geo.second_moment(geo.make_gaussian_plane(1, 2), [0.0, 0.0]).value == pytest.approx(1.0)


def test_second_moment_monte_carlo_reports_error():
    m = geo.second_moment(geo.make_sphere(2, 3), [0.0, 0.0, 1.0], n_samples=20_000)
    # E[theta^2] on S^2 from the pole is pi^2/2 - 2
    assert m.stderr > 0
    assert abs(m.value - (np.pi**2 / 2 - 2)) < 4 * m.stderr


def test_second_moment_union_diverges():
    with pytest.raises(AssumptionViolated):
        geo.second_moment(geo.make_circle_and_atoms(), [1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(0.1, 10))
def test_circle_geodesic_matches_arc(a, b, r):
    c = geo.Sphere(r, 2, 1)
    x = r * np.array([np.cos(a), np.sin(a)])
    y = r * np.array([np.cos(b), np.sin(b)])
    diff = abs(a - b) % (2 * np.pi)
    assert c.geodesic(x, y) == pytest.approx(r * min(diff, 2 * np.pi - diff), abs=1e-9)
