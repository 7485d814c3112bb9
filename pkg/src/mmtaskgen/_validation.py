"""Small input checks used at public entry points."""
import numbers

import numpy as np

from .errors import DomainError


def check_points(points, dim=3, name="points", min_count=0):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == dim:
        arr = arr.reshape(1, dim)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"{name} must have shape (k, {dim}), got {arr.shape}")
    if arr.shape[0] < min_count:
        raise DomainError(f"{name} needs at least {min_count} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_vector(v, dim=3, name="vector"):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (dim,):
        raise DomainError(f"{name} must have length {dim}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_unit(v, name="normal", tol=1e-9):
    arr = check_vector(v, 3, name)
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > tol:
        raise DomainError(f"{name} must be a unit vector (norm {norm!r})")
    return arr


def check_positive(x, name):
    if not isinstance(x, numbers.Real) or not np.isfinite(x) or x <= 0:
        raise DomainError(f"{name} must be a positive finite number, got {x!r}")
    return float(x)


def check_count(n, name="n"):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {n!r}")
    return int(n)


def check_rng(seed):
    """Return a ``numpy.random.Generator`` for an int seed, ``None`` or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    raise DomainError(f"cannot build a random generator from {seed!r}")
