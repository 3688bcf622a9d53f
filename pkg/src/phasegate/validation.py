"""Input validation helpers used across the package and by the estimators."""

from __future__ import annotations

import numpy as np

__all__ = ["as_field", "as_real_field", "check_same_shape", "as_field_stack"]


def as_field(x, name="field"):
    """Coerce to a finite complex128 2D array (copy only when needed)."""
    a = np.asarray(x)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    a = a.astype(np.complex128, copy=False)
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError(f"{name} contains non-finite values")
    return a


def as_real_field(x, name="field"):
    """Coerce to a finite float64 2D array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def check_same_shape(a, b, name_a="first", name_b="second"):
    if np.shape(a) != np.shape(b):
        raise ValueError(
            f"shape mismatch: {name_a} {np.shape(a)} vs {name_b} {np.shape(b)}"
        )


def as_field_stack(X, name="X"):
    """Coerce a sequence of 2D fields (or a 3D array) to a list of complex fields."""
    if isinstance(X, np.ndarray) and X.ndim == 3:
        return [as_field(X[i], f"{name}[{i}]") for i in range(X.shape[0])]
    if isinstance(X, np.ndarray) and X.ndim == 2:
        raise ValueError(f"{name} must be a stack of 2D fields, got a single 2D array")
    fields = [as_field(f, f"{name}[{i}]") for i, f in enumerate(X)]
    if not fields:
        raise ValueError(f"{name} is empty")
    return fields
