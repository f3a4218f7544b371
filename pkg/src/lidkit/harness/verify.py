"""Numerical verification suites for the limits and identities behind the estimators.

Each suite returns a list of ``Check`` records; failures are data, never
exceptions. ``verify_theorems`` runs any subset and reports per-check
target, observed value, tolerance and margin.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .. import geometry as geo
from ..convolve import ConvolutionOracle, _ball_slope, component_ball_probabilities
from ..estimators import flipd, nu
from ..schedule import VESchedule, VPSchedule
from ..score import MixtureScore, score_field_for

SUITES = ("thm1", "thm2", "cor1", "cor2", "prop1", "prop2", "eq14", "eq15")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    target: float
    observed: float
    tolerance: float

    def __post_init__(self):
        for f in ("target", "observed", "tolerance"):
            object.__setattr__(self, f, float(getattr(self, f)))

    @property
    def margin(self):
        return float(self.tolerance - abs(self.observed - self.target))

    @property
    def passed(self):
        return bool(np.isfinite(self.observed) and self.margin >= 0)

    def as_dict(self):
        return {**asdict(self), "margin": self.margin, "passed": self.passed}


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_json(self):
        return json.dumps({"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}, indent=1) + "\n"

    def to_csv(self):
        lines = ["suite,name,target,observed,tolerance,margin,passed"]
        for c in self.checks:
            lines.append(f"{c.suite},{c.name},{c.target!r},{c.observed!r},{c.tolerance!r},{c.margin!r},{c.passed}")
        return "\n".join(lines) + "\n"


CIRCLE_POINT = np.array([1.0, 0.0])


def random_mixtures(n_mixtures=5, seed=0):
    """Small random atom sets in R^2..R^4 with random weights."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_mixtures):
        k, D = rng.integers(2, 6), rng.integers(2, 5)
        atoms = rng.normal(size=(k, D))
        out.append(geo.Empirical(geo.PointSet(atoms), rng.dirichlet(np.ones(k))))
    return out


def suite_thm1():
    dens = geo.make_circle()
    oracle = ConvolutionOracle(dens, method="quadrature")
    deltas = (-2.0, -4.0, -6.0, -8.0)
    slopes = [oracle.dlogrho_ddelta_gauss(CIRCLE_POINT, d) for d in deltas]
    errs = np.abs(np.array(slopes) + 1)
    checks = [
        Check("thm1", "circle slope delta=-8", -1.0, slopes[-1], 1e-3),
        Check("thm1", "circle error decreasing in |delta|", 1.0, float(np.all(np.diff(errs) < 0)), 0.0),
    ]
    plane = geo.make_gaussian_plane(2, 3)
    s = ConvolutionOracle(plane).dlogrho_ddelta_gauss(np.array([0.3, -0.2, 0.0]), -8.0)
    checks.append(Check("thm1", "gaussian plane slope delta=-8", -1.0, s, 1e-3))
    return checks


def suite_thm2(n_samples=1_000_000, seed=0):
    circle = geo.make_circle()
    s_circle = _ball_slope(circle, CIRCLE_POINT, -8.0).value
    sphere = geo.make_sphere(2, 3)
    s_sphere = _ball_slope(sphere, np.array([0.0, 0.0, 1.0]), -5.0, method="importance",
                           n_samples=n_samples, seed=seed).value
    return [
        Check("thm2", "circle ball slope delta=-8", 1.0, s_circle, 1e-3),
        Check("thm2", "2-sphere importance MC slope delta=-5", 2.0, s_sphere, 0.1),
    ]


def suite_cor1(schedule=None):
    dens = geo.make_circle_and_atoms()
    schedule = VPSchedule() if schedule is None else schedule
    field = score_field_for(dens, schedule, ConvolutionOracle(dens))
    checks = []
    for name, x, d in (("circle", [0.0, 1.0], 1), ("atom +", [5.0, 0.0], 0), ("atom -", [-5.0, 0.0], 0)):
        checks.append(Check("cor1", f"flipd delta=-6 on {name}", float(d), flipd(field, np.array(x), -6.0).value, 0.01))
    return checks


def suite_cor2():
    dens = geo.make_circle_and_atoms()
    checks = []
    delta = -8.0
    for name, x, d, own in (("circle", [0.0, 1.0], 1, 0), ("atom +", [5.0, 0.0], 0, 1), ("atom -", [-5.0, 0.0], 0, 2)):
        x = np.array(x)
        probs = component_ball_probabilities(dens, x, delta)
        off = float(np.delete(probs, own).sum())
        checks.append(Check("cor2", f"off-component mass at {name}", 0.0, off, 0.0))
        total = _ball_slope(dens, x, delta).value
        alone = _ball_slope(dens.components[own], x, delta).value
        checks.append(Check("cor2", f"slope equals own-component slope at {name}", alone, total, 0.0))
        checks.append(Check("cor2", f"uniform slope at {name}", float(d), total, 1e-3))
    return checks


def suite_prop1():
    oracle = ConvolutionOracle(geo.make_circle(), method="quadrature")
    return [Check("prop1", "circle prop1 delta=-8", 1 / (2 * np.pi), oracle.prop1_integral(CIRCLE_POINT, -8.0), 1e-4)]


def suite_prop2():
    oracle = ConvolutionOracle(geo.make_circle(), method="quadrature")
    return [Check("prop2", "circle prop2 delta=-8", 1 / (2 * np.pi), oracle.prop2_integral(CIRCLE_POINT, -8.0), 1e-3)]


def _schedules():
    return (("ve", VESchedule(1e-4, 50.0)), ("vp", VPSchedule()))


def _probe_points(dens, deltas, rng):
    # one query per delta, placed at the kernel scale around a random atom
    atoms = dens.atoms
    return [atoms[rng.integers(len(atoms))] + np.exp(d) * rng.normal(size=atoms.shape[1]) for d in deltas]


def suite_eq14(seed=0):
    """``log rho(x, delta) = D log psi + log p(psi x, t(delta))``, plus the time round trip."""
    deltas = np.linspace(-8.0, 0.0, 33)
    rng = np.random.default_rng(seed)
    worst, worst_rt = {}, {}
    for dens in random_mixtures(seed=seed):
        oracle = ConvolutionOracle(dens)
        D = dens.ambient_dim
        for name, sched in _schedules():
            field = MixtureScore(dens, sched)
            for d, x in zip(deltas, _probe_points(dens, deltas, rng)):
                t = sched.t_of_delta(d)
                psi = sched.psi(t)
                lhs = oracle.log_rho_gauss(x, d)
                rhs = D * np.log(psi) + field.log_density(psi * x, t)
                worst[name] = max(worst.get(name, 0.0), abs(lhs - rhs) / max(1.0, abs(lhs)))
                worst_rt[name] = max(worst_rt.get(name, 0.0), abs(np.log(sched.lam(t)) - d))
    checks = [Check("eq14", f"{k} log-density correspondence (rel)", 0.0, v, 1e-9) for k, v in worst.items()]
    checks += [Check("eq14", f"{k} log lam(t(delta)) round trip", 0.0, v, 1e-9) for k, v in worst_rt.items()]
    return checks


def suite_eq15(seed=0):
    """``nu`` from the exact score equals the exact delta-derivative of log rho."""
    deltas = np.linspace(-8.0, 0.0, 33)
    rng = np.random.default_rng(seed)
    worst = {}
    for dens in random_mixtures(seed=seed):
        oracle = ConvolutionOracle(dens)
        for name, sched in _schedules():
            field = MixtureScore(dens, sched)
            for d, x in zip(deltas, _probe_points(dens, deltas, rng)):
                err = abs(nu(field, x, d, trace="exact") - oracle.dlogrho_ddelta_gauss(x, d))
                worst[name] = max(worst.get(name, 0.0), err)
    return [Check("eq15", f"{k} |nu - dlogrho/ddelta|", 0.0, v, 1e-6) for k, v in worst.items()]


_RUNNERS = {
    "thm1": suite_thm1,
    "thm2": suite_thm2,
    "cor1": suite_cor1,
    "cor2": suite_cor2,
    "prop1": suite_prop1,
    "prop2": suite_prop2,
    "eq14": suite_eq14,
    "eq15": suite_eq15,
}


def verify_theorems(suites=SUITES):
    """Run the named suites and collect every check into one report."""
    if isinstance(suites, str):
        suites = (suites,)
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}; choose from {SUITES}")
    checks = []
    for s in suites:
        try:
            checks += _RUNNERS[s]()
        except Exception as exc:  # a crashing suite is a failed check
            checks.append(Check(s, f"suite raised {type(exc).__name__}: {exc}", 0.0, float("nan"), 0.0))
    return VerifyReport(checks)
