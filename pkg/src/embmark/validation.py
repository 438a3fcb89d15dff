"""Small input-validation helpers shared by the estimators and stats."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .exceptions import DimensionMismatchError


def check_texts(texts: Iterable[str], name: str = "texts") -> list[str]:
    """Materialize and type-check a batch of input texts."""
    out = list(texts)
    for i, t in enumerate(out):
        if not isinstance(t, str):
            raise TypeError(f"{name}[{i}] is {type(t).__name__}, expected str")
    return out


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally enforcing its length."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(
            f"{name} has dimension {arr.shape[0]}, expected {dim}"
        )
    return arr


def as_matrix(m, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally enforcing column count."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatchError(
            f"{name} has {arr.shape[1]} columns, expected {cols}"
        )
    return arr


def as_unit_vector(v, name: str = "vector", tol: float = 1e-6) -> np.ndarray:
    """Validate that v is unit-norm within tol, return it exactly normalized."""
    arr = as_vector(v, name=name)
    norm = float(np.linalg.norm(arr))
    if not np.isfinite(norm) or abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must be unit-norm, got ||{name}|| = {norm!r}")
    return arr / norm


def check_interval(interval: Sequence[float], name: str = "interval") -> tuple[float, float]:
    """Validate a frequency interval 0 <= lo < hi <= 1."""
    lo, hi = float(interval[0]), float(interval[1])
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError(f"{name} must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]")
    return lo, hi


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
