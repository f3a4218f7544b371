import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidkit import geometry as geo
from lidkit.convolve import ConvolutionOracle
from lidkit.exceptions import StepSizeWarning, UnsupportedError
from lidkit.schedule import VESchedule, VPSchedule
from lidkit.score import (
    AffineGaussianScore,
    LinearScore,
    MixtureScore,
    NumericScore,
    fd_trace,
    field_from_oracle,
    hutchinson_trace,
)

VE = VESchedule(1e-4, 50.0)
VP = VPSchedule()


def five_atoms(D=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(5, D)), rng.dirichlet(np.ones(5))


def num_grad(f, x, h=1e-6):
    return np.array([(f(x + e) - f(x - e)) / (2 * h) for e in np.eye(len(x)) * h])


def test_single_atom_score():
    field = MixtureScore([[0.0, 0.0]], VP)
    x = np.array([0.3, -0.4])
    np.testing.assert_allclose(field.score(x, 0.4), -x / VP.sigma(0.4) ** 2, rtol=1e-14)


def test_symmetric_atoms_cancel():
    field = MixtureScore([[-1.0, 0.5], [1.0, -0.5]], VE)
    np.testing.assert_allclose(field.score(np.zeros(2), 0.3), 0.0, atol=1e-14)


@pytest.mark.parametrize("sched", [VE, VP])
def test_mixture_score_matches_fd(sched):
    atoms, w = five_atoms(2)
    field = MixtureScore(atoms[:4], sched, w[:4] / w[:4].sum())
    rng = np.random.default_rng(1)
    for t in (0.2, 0.6):
        for x in rng.normal(size=(3, 2)):
            s = field.score(x, t)
            g = num_grad(lambda y: field.log_density(y, t), x)
            assert np.all(np.abs(s - g) <= np.maximum(1e-6, 1e-4 * np.linalg.norm(s)))


def test_batch_matches_single():
    atoms, w = five_atoms()
    field = MixtureScore(atoms, VP, w)
    X = np.random.default_rng(2).normal(size=(6, 3))
    S = field.score(X, 0.5)
    for x, s in zip(X, S):
        np.testing.assert_allclose(field.score(x, 0.5), s, rtol=1e-13)


def test_exact_trace_examples():
    t = 0.3
    pm = MixtureScore([[0.0, 0.0, 0.0]], VP)
    assert pm.exact_trace(np.array([0.5, 0.1, 0.2]), t) == pytest.approx(-3 / VP.sigma(t) ** 2, rel=1e-13)
    two = MixtureScore([[-1.0], [1.0]], VP)
    psi, sig = VP.psi(t), VP.sigma(t)
    assert two.exact_trace(np.zeros(1), t) == pytest.approx(-1 / sig**2 + psi**2 / sig**4, rel=1e-12)


@pytest.mark.parametrize("sched", [VE, VP])
def test_exact_trace_matches_fd_trace(sched):
    atoms, w = five_atoms()
    field = MixtureScore(atoms, sched, w)
    rng = np.random.default_rng(3)
    for t in (0.1, 0.5, 0.9):
        x = sched.psi(t) * atoms[0] + sched.sigma(t) * rng.normal(size=3)
        exact = field.exact_trace(x, t)
        assert fd_trace(field, x, t) == pytest.approx(exact, rel=1e-4)


def test_exact_trace_matches_second_derivatives():
    atoms, w = five_atoms(2)
    field = MixtureScore(atoms, VP, w)
    x, t = np.array([0.2, -0.3]), 0.5
    num = NumericScore(lambda y, s: field.log_density(y, s), 2, VP)
    assert num.fd_trace(x, t) == pytest.approx(field.exact_trace(x, t), rel=1e-4)


def test_fd_trace_examples():
    t = 0.5
    pm = MixtureScore([[0.0, 0.0]], VE)
    assert fd_trace(pm, np.array([0.1, 0.2]), t) == pytest.approx(-2 / VE.sigma(t) ** 2, abs=1e-8)
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    lin = LinearScore(-A)
    assert fd_trace(lin, np.array([0.4, -1.0]), t) == pytest.approx(-3.0, abs=1e-10)
    with pytest.raises(ValueError):
        fd_trace(lin, np.zeros(2), t, step=0.0)


def test_fd_trace_warns_on_unstable_step():
    field = MixtureScore([[0.0, 0.0], [0.3, 0.0]], VE)
    with pytest.warns(StepSizeWarning):
        fd_trace(field, np.array([0.15, 0.0]), 0.05, step=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fd_trace(field, np.array([0.15, 0.0]), 0.05)


def test_hutchinson_diag_field():
    lin = LinearScore(np.diag([1.0, 2.0, 3.0]))
    est, se = hutchinson_trace(lin, np.zeros(3), 0.5, probes=10_000, seed=0)
    assert abs(est - 6) <= 3 * se + 1e-9


def test_hutchinson_single_probe_isotropic_exact():
    field = MixtureScore([[0.0, 0.0, 0.0, 0.0]], VP)
    t = 0.4
    est, se = hutchinson_trace(field, np.array([0.1, 0.2, -0.3, 0.05]), t, probes=1, seed=5)
    assert est == pytest.approx(-4 / VP.sigma(t) ** 2, rel=1e-7)
    assert se == 0.0


def test_hutchinson_gaussian_probes():
    atoms, w = five_atoms()
    field = MixtureScore(atoms, VP, w)
    x, t = atoms[1] * VP.psi(0.3), 0.3
    est, se = hutchinson_trace(field, x, t, probes=20_000, seed=1, probe_dist="gaussian")
    assert abs(est - field.exact_trace(x, t)) < 4 * se
    with pytest.raises(ValueError):
        hutchinson_trace(field, x, t, probe_dist="cauchy")
    with pytest.raises(ValueError):
        hutchinson_trace(field, x, t, probes=0)


def test_hutchinson_unbiased_over_seeds():
    atoms, w = five_atoms()
    field = MixtureScore(atoms, VP, w)
    t = 0.2
    x = VP.psi(t) * atoms[2] + 0.5 * VP.sigma(t)
    means = np.array([hutchinson_trace(field, x, t, probes=200, seed=s)[0] for s in range(100)])
    grand_se = means.std(ddof=1) / np.sqrt(len(means))
    assert abs(means.mean() - field.exact_trace(x, t)) < 4 * grand_se


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 1.0))
def test_jensen_term_nonnegative(seed, t):
    atoms, w = five_atoms(seed=seed % 50)
    field = MixtureScore(atoms, VE, w)
    x = np.random.default_rng(seed).normal(size=3)
    second, first = field.trace_terms(x, t)
    assert second >= first - 1e-12 * max(1.0, second)


@pytest.mark.parametrize("sched", [VE, VP])
def test_gradient_correspondence(sched):
    # grad_x log rho(x, delta) = psi s(psi x, t(delta))
    atoms, w = five_atoms(2)
    dens = geo.Empirical(geo.PointSet(atoms), w)
    oracle = ConvolutionOracle(dens)
    field = MixtureScore(dens, sched)
    x = atoms[0] + 0.05
    for delta in (-2.0, -1.0, 0.0):
        t = sched.t_of_delta(delta)
        psi = sched.psi(t)
        g = num_grad(lambda y: oracle.log_rho_gauss(y, delta), x, h=1e-7)
        np.testing.assert_allclose(psi * field.score(psi * x, t), g, rtol=1e-6, atol=1e-6)


def test_affine_gaussian_score():
    dens = geo.make_gaussian_plane(2, 3, mean=[0.3, -0.2], cov=[[1.0, 0.2], [0.2, 0.5]])
    field = AffineGaussianScore(dens, VP)
    x, t = np.array([0.1, 0.4, -0.2]), 0.3
    exact = field.exact_trace(x, t)
    assert fd_trace(field, x, t) == pytest.approx(exact, rel=1e-6)
    with pytest.raises(TypeError):
        AffineGaussianScore(geo.make_circle(), VP)


def test_numeric_field_from_oracle():
    dens = geo.make_circle()
    field = field_from_oracle(ConvolutionOracle(dens), VP)
    with pytest.raises(UnsupportedError):
        field.exact_trace(np.array([1.0, 0.0]), 0.5)
    y = np.array([0.9, 0.1])
    s = field.score(y, 0.5)
    g = num_grad(lambda z: field.log_density(z, 0.5), y, h=1e-5)
    np.testing.assert_allclose(s, g, rtol=1e-5)


def test_score_undefined_at_zero():
    with pytest.raises(ValueError, match="t=0"):
        MixtureScore([[0.0]], VP).score(np.zeros(1), 0.0)
