"""Input validation helpers shared by the public API."""

import numbers

import numpy as np

ON_MANIFOLD_TOL = 1e-9


def check_random_state(seed):
    """Turn ``seed`` into a ``np.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def check_point(x, ambient_dim=None, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-d point, got shape {x.shape}")
    if ambient_dim is not None and x.shape[0] != ambient_dim:
        raise ValueError(f"{name} has dimension {x.shape[0]}, expected {ambient_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_points(X, ambient_dim=None, name="X"):
    """Return ``X`` as a float array of shape (n, D), promoting a single point."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {X.shape}")
    if ambient_dim is not None and X.shape[1] != ambient_dim:
        raise ValueError(f"{name} has dimension {X.shape[1]}, expected {ambient_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_delta(delta):
    delta = float(delta)
    if not np.isfinite(delta):
        raise ValueError(f"delta must be finite, got {delta}")
    return delta


def check_positive_int(n, name, minimum=1):
    if not isinstance(n, numbers.Integral) or n < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)
