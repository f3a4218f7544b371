"""Acceptance gate: the eleven headline numerical criteria.

Each test prints one ``PASS``/``FAIL`` line (visible even under capture)
with the observed value, the tolerance and the wall time, then asserts.
"""

import time

import numpy as np
import pytest

from lidkit import geometry as geo
from lidkit.convolve import ConvolutionOracle, component_ball_probabilities
from lidkit.estimators import ball_count_regress, flipd, lidl_regress, nu, uniform_slope
from lidkit.harness.sde import reverse_sde_demo, simulate_forward
from lidkit.schedule import VESchedule, VPSchedule
from lidkit.score import AffineGaussianScore, MixtureScore, hutchinson_trace, score_field_for

VE = VESchedule(1e-4, 50.0)
VP = VPSchedule()


@pytest.fixture
def gate(capsys):
    start = time.perf_counter()

    def finish(number, title, checks, limit_s):
        elapsed = time.perf_counter() - start
        ok = all(passed for passed, _ in checks) and elapsed < limit_s
        detail = "; ".join(text for _, text in checks)
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'} {title}: {detail} "
                  f"({elapsed:.2f}s, limit {limit_s:g}s)")
        for passed, text in checks:
            assert passed, text
        assert elapsed < limit_s, f"runtime {elapsed:.1f}s exceeds {limit_s}s"

    return finish


def _within(name, observed, target, tol):
    err = abs(observed - target)
    return err < tol, f"{name}={observed:.10g} (target {target:g}, |err| {err:.2e} < {tol:g})"


def test_criterion_01_circle_gaussian_slope(gate):
    oracle = ConvolutionOracle(geo.make_circle(), method="quadrature")
    x = np.array([1.0, 0.0])
    slopes = [oracle.dlogrho_ddelta_gauss(x, d) for d in (-2.0, -4.0, -6.0, -8.0)]
    errs = np.abs(np.array(slopes) + 1)
    gate(1, "circle d/d delta log rho -> d - D", [
        (bool(np.all(np.diff(errs) < 0)), f"errors {', '.join(f'{e:.1e}' for e in errs)} decreasing"),
        _within("slope(-8)", slopes[-1], -1.0, 1e-3),
    ], 10)


def test_criterion_02_closed_form_flipd(gate):
    dens = geo.make_gaussian_plane(2, 3)
    checks = []
    for sched in (VE, VP):
        field = AffineGaussianScore(dens, sched)
        for d0 in (-6.0, -3.0, -1.0, 0.0):
            expect = 2 - 2 * np.exp(2 * d0) / (1 + np.exp(2 * d0))
            ok, _ = _within("", flipd(field, np.zeros(3), d0, trace="exact").value, expect, 1e-10)
            checks.append((ok, f"{type(sched).__name__[:2]} delta={d0:g}"))
    at3 = flipd(AffineGaussianScore(dens, VP), np.zeros(3), -3.0).value
    checks = [(all(ok for ok, _ in checks), "8 (schedule, delta) cases within 1e-10")]
    checks.append(_within("FLIPD(0,-3)", at3, 1.99505, 5e-6))
    gate(2, "closed-form FLIPD on a Gaussian plane", checks, 1)


def test_criterion_03_nu_equals_dlogrho(gate):
    rng = np.random.default_rng(2024)
    deltas = np.linspace(-8.0, 0.0, 33)
    worst = 0.0
    for _ in range(5):
        k, D = rng.integers(2, 7), rng.integers(2, 5)
        dens = geo.Empirical(geo.PointSet(rng.normal(size=(k, D))), rng.dirichlet(np.ones(k)))
        oracle = ConvolutionOracle(dens)
        for sched in (VE, VP):
            field = MixtureScore(dens, sched)
            for d in deltas:
                # query at kernel scale around an atom, where the posterior is non-trivial
                x = dens.atoms[rng.integers(k)] + np.exp(d) * rng.normal(size=D)
                worst = max(worst, abs(nu(field, x, d, trace="exact") - oracle.dlogrho_ddelta_gauss(x, d)))
    gate(3, "nu identity over 5 mixtures x {VE, VP} x 33 deltas",
         [(worst < 1e-6, f"max |nu - dlogrho/ddelta| = {worst:.2e} < 1e-6")], 30)


def test_criterion_04_union_flipd(gate):
    dens = geo.make_circle_and_atoms(gap=4.0, weights=(0.5, 0.25, 0.25))
    field = score_field_for(dens, VP, ConvolutionOracle(dens))
    checks = []
    for name, x, d in (("circle", [0.0, 1.0], 1), ("circle", [-0.6, -0.8], 1),
                       ("atom", [5.0, 0.0], 0), ("atom", [-5.0, 0.0], 0)):
        checks.append(_within(f"{name}{tuple(x)}", flipd(field, np.array(x), -6.0).value, d, 0.01))
    gate(4, "FLIPD on circle + two atoms at delta=-6", checks, 30)


def test_criterion_05_ball_probability_slopes(gate):
    circle = uniform_slope(geo.make_circle(), np.array([1.0, 0.0]), -8.0).value
    sphere = uniform_slope(geo.make_sphere(2, 3), np.array([0.0, 0.0, 1.0]), -5.0,
                           method="importance", n_samples=1_000_000, seed=0)
    gate(5, "ball-probability slopes", [
        _within("circle analytic slope(-8)", circle, 1.0, 1e-3),
        _within(f"2-sphere MC slope(-5) [se {sphere.diagnostics['stderr']:.1e}]", sphere.value, 2.0, 0.1),
    ], 60)


def test_criterion_06_uniform_locality(gate):
    dens = geo.make_circle_and_atoms()
    checks = []
    for delta in (-8.0, -4.0, 0.0, np.log(4.0) - 1e-6):
        for x, own, d in (([0.0, 1.0], 0, 1), ([5.0, 0.0], 1, 0), ([-5.0, 0.0], 2, 0)):
            x = np.array(x)
            probs = component_ball_probabilities(dens, x, delta)
            total = uniform_slope(dens, x, delta).value
            alone = uniform_slope(dens.components[own], x, delta).value
            checks.append(np.delete(probs, own).sum() == 0.0 and total == alone)
    at8 = [uniform_slope(dens, np.array(x), -8.0).value for x in ([0.0, 1.0], [5.0, 0.0])]
    gate(6, "uniform slope locality on the union", [
        (all(checks), f"off-component mass exactly 0 and slope == own-component slope in {len(checks)} cases"),
        _within("circle slope(-8)", at8[0], 1.0, 1e-3),
        (at8[1] == 0.0, f"atom slope(-8)={at8[1]} exactly 0"),
    ], 10)


def test_criterion_07_propositions(gate):
    oracle = ConvolutionOracle(geo.make_circle(), method="quadrature")
    x = np.array([1.0, 0.0])
    gate(7, "intrinsic-kernel limits on the circle", [
        _within("prop1(-8)", oracle.prop1_integral(x, -8.0), 1 / (2 * np.pi), 1e-4),
        _within("prop2(-8)", oracle.prop2_integral(x, -8.0), 1 / (2 * np.pi), 1e-3),
    ], 10)


def test_criterion_08_lidl(gate):
    oracle = ConvolutionOracle(geo.make_circle())
    deltas = [-7.0, -6.0, -5.0, -4.0]
    _, est = lidl_regress(deltas, [oracle.log_rho_gauss(np.array([0.0, 1.0]), d) for d in deltas], 2)
    gate(8, "LIDL regression on the circle", [_within("LID", est.value, 1.0, 0.05)], 10)


def test_criterion_09_hutchinson(gate):
    rng = np.random.default_rng(9)
    atoms = rng.normal(size=(5, 3))
    field = MixtureScore(atoms, VP, rng.dirichlet(np.ones(5)))
    t = 0.3
    x = VP.psi(t) * atoms[0] + 0.5 * VP.sigma(t) * rng.normal(size=3)
    exact = field.exact_trace(x, t)
    est, se = hutchinson_trace(field, x, t, probes=100_000, seed=1)
    iso = MixtureScore([[0.0, 0.0, 0.0]], VP)
    one, _ = hutchinson_trace(iso, np.array([0.2, -0.1, 0.4]), t, probes=1, seed=3)
    gate(9, "Hutchinson trace", [
        (abs(est - exact) < 3 * se, f"|est - exact| = {abs(est - exact):.3g} < 3 se = {3 * se:.3g}"),
        _within("single probe isotropic", one, -3 / VP.sigma(t) ** 2, 1e-6 * 3 / VP.sigma(t) ** 2),
    ], 10)


def test_criterion_10_ball_count_swiss_roll(gate):
    dens = geo.Uniform(geo.SwissRoll())
    m = dens.manifold
    X = geo.sample(dens, 100_000, seed=10)
    rng = np.random.default_rng(11)
    margin = 2.0
    Q = m.embed_chart(rng.uniform(margin, m.length - margin, 20), rng.uniform(margin, m.height - margin, 20))
    ests = [ball_count_regress(X, q, np.linspace(-1.2, 0.3, 7))[1].value for q in Q]
    gate(10, "ball-count regression on the swiss roll",
         [_within("median of 20", float(np.median(ests)), 2.0, 0.3)], 60)


def test_criterion_11_transition_kernel(gate):
    checks = []
    x0, n, t = np.array([1.0, -2.0]), 20_000, 0.5
    for sched in (VE, VP):
        xt = simulate_forward(sched, x0, t, n, steps=2000, seed=4)
        se_mean = sched.sigma(t) / np.sqrt(n)
        se_var = sched.sigma(t) ** 2 * np.sqrt(2 / n)
        z_mean = np.max(np.abs(xt.mean(0) - sched.psi(t) * x0)) / se_mean
        z_var = np.max(np.abs(xt.var(0) - sched.sigma(t) ** 2)) / se_var
        checks.append((z_mean < 3 and z_var < 3,
                       f"{type(sched).__name__[:2]} forward moments within {max(z_mean, z_var):.2f} SE"))
    sched = VESchedule()
    res = reverse_sde_demo(geo.make_point_mass([0.0]), sched, steps=1000, n=10_000, seed=0)
    ratio = res.samples.var(ddof=1) / sched.sigma(res.eps_stop) ** 2
    checks.append((abs(ratio - 1) < 0.05, f"reverse-SDE var / sigma^2(eps_stop) = {ratio:.4f} (within 5%)"))
    gate(11, "transition kernel and reverse SDE", checks, 60)
