"""Exception types raised across lidkit."""


class LidkitError(Exception):
    """Base class for all lidkit errors."""


class OffManifoldError(LidkitError, ValueError):
    """A point does not lie on the manifold it was evaluated against."""

    def __init__(self, residual, tol=1e-9):
        self.residual = float(residual)
        self.tol = tol
        super().__init__(
            f"point is off the manifold: projection residual {self.residual:.3e} exceeds {tol:.0e}"
        )


class UnsupportedError(LidkitError, NotImplementedError):
    """The requested operation has no implementation for this variant."""


class InfiniteDistanceError(LidkitError, ValueError):
    """Geodesic distance between points on different connected components."""


class ScheduleRangeError(LidkitError, ValueError):
    """A log-scale delta falls outside the range of a noise schedule."""

    def __init__(self, delta, low, high):
        self.delta = delta
        self.interval = (low, high)
        super().__init__(
            f"delta out of schedule range: {delta!r} not in [{low:.6g}, {high:.6g}]"
        )


class AssumptionViolated(LidkitError, ArithmeticError):
    """A numerical quantity that must be finite diverged."""


class ConfigError(LidkitError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class StepSizeWarning(UserWarning):
    """Finite-difference result is sensitive to the step size."""
