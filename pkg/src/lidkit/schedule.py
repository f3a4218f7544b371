"""Diffusion noise schedules.

A schedule fixes the forward SDE ``dX = gamma(t) X dt + g(t) dW`` through its
transition kernel ``N(psi(t) x0, sigma(t)^2 I)``. Estimators only need the
noise-to-signal ratio ``lam(t) = sigma(t) / psi(t)`` and its inverse, which
maps a convolution scale ``exp(delta)`` to a diffusion time.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ScheduleRangeError

__all__ = ["Schedule", "VESchedule", "VPSchedule", "make_schedule"]


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return t


def _out(t, value):
    return float(value) if np.ndim(t) == 0 else value


class Schedule:
    def psi(self, t):
        raise NotImplementedError

    def sigma(self, t):
        raise NotImplementedError

    def lam(self, t):
        t = _check_time(t)
        return self.sigma(t) / self.psi(t)

    def delta_range(self):
        """Closed interval of admissible log-scales ``delta``."""
        raise NotImplementedError

    def t_of_delta(self, delta):
        raise NotImplementedError

    def drift_coef(self, t):
        """``gamma(t)`` in the forward drift ``gamma(t) x``."""
        raise NotImplementedError

    def diffusion(self, t):
        """``g(t)``, the forward diffusion coefficient."""
        raise NotImplementedError

    def _check_delta(self, delta):
        lo, hi = self.delta_range()
        delta = float(delta)
        if not lo <= delta <= hi:
            raise ScheduleRangeError(delta, lo, hi)
        return delta


@dataclass(frozen=True)
class VESchedule(Schedule):
    """Variance exploding: ``psi = 1``, ``sigma(t) = sigma_min (sigma_max/sigma_min)^t``."""

    sigma_min: float = 0.01
    sigma_max: float = 50.0

    def __post_init__(self):
        if not 0 < self.sigma_min < self.sigma_max:
            raise ValueError("need 0 < sigma_min < sigma_max")

    @property
    def _log_ratio(self):
        return np.log(self.sigma_max) - np.log(self.sigma_min)

    def psi(self, t):
        t = _check_time(t)
        return _out(t, np.ones_like(t))

    def sigma(self, t):
        # sigma(0) = 0 by convention; the geometric law only holds for t > 0
        t = _check_time(t)
        s = np.where(t > 0, self.sigma_min * np.exp(t * self._log_ratio), 0.0)
        return _out(t, s)

    def delta_range(self):
        return float(np.log(self.sigma_min)), float(np.log(self.sigma_max))

    def t_of_delta(self, delta):
        delta = self._check_delta(delta)
        t = (delta - np.log(self.sigma_min)) / self._log_ratio
        return float(min(max(t, 0.0), 1.0))

    def drift_coef(self, t):
        t = _check_time(t)
        return _out(t, np.zeros_like(t))

    def diffusion(self, t):
        t = _check_time(t)
        s = self.sigma_min * np.exp(t * self._log_ratio)
        return _out(t, s * np.sqrt(2 * self._log_ratio))


@dataclass(frozen=True)
class VPSchedule(Schedule):
    """Variance preserving with linear ``beta(t) = beta_min + t (beta_max - beta_min)``."""

    beta_min: float = 0.1
    beta_max: float = 20.0

    def __post_init__(self):
        if not 0 <= self.beta_min < self.beta_max:
            raise ValueError("need 0 <= beta_min < beta_max")

    def beta(self, t):
        t = _check_time(t)
        return _out(t, self.beta_min + t * (self.beta_max - self.beta_min))

    def _integrated_beta(self, t):
        return self.beta_min * t + 0.5 * (self.beta_max - self.beta_min) * t * t

    def psi(self, t):
        t = _check_time(t)
        return _out(t, np.exp(-0.5 * self._integrated_beta(t)))

    def sigma(self, t):
        t = _check_time(t)
        return _out(t, np.sqrt(-np.expm1(-self._integrated_beta(t))))

    def lam(self, t):
        # sigma/psi = sqrt(exp(B) - 1); expm1 keeps small t accurate
        t = _check_time(t)
        return _out(t, np.sqrt(np.expm1(self._integrated_beta(t))))

    def delta_range(self):
        # lam(0) = 0 so any sufficiently negative delta is admissible
        return -np.inf, float(0.5 * np.log(np.expm1(self._integrated_beta(1.0))))

    def t_of_delta(self, delta):
        delta = self._check_delta(delta)
        B = np.log1p(np.exp(2 * delta))
        db = self.beta_max - self.beta_min
        # positive root of beta_min t + db t^2 / 2 = B, cancellation-free form
        t = 2 * B / (self.beta_min + np.sqrt(self.beta_min**2 + 2 * db * B))
        return float(min(t, 1.0))

    def drift_coef(self, t):
        return -0.5 * self.beta(t)

    def diffusion(self, t):
        return np.sqrt(self.beta(t))


def make_schedule(kind, **params):
    """Build a schedule from a name (``"ve"`` or ``"vp"``) and its parameters."""
    kind = kind.lower()
    if kind == "ve":
        return VESchedule(**params)
    if kind == "vp":
        return VPSchedule(**params)
    raise ValueError(f"unknown schedule {kind!r}; expected 've' or 'vp'")
