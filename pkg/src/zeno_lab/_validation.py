"""Input validation helpers in the spirit of ``sklearn.utils.validation``.

``sklearn.utils.check_array`` rejects complex input, so the checks needed for
operators on complex Hilbert spaces live here.
"""
import numpy as np

from .exceptions import ValidationError


def check_matrix(A, name="A", *, square=False):
    """Return ``A`` as a finite complex128 2-D array."""
    try:
        arr = np.asarray(A, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return arr


def check_vectors(X, dim, name="X"):
    """Return ``X`` as a (dim, m) complex array; a 1-D input becomes one column."""
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != dim:
        raise ValidationError(f"{name} must have {dim} rows, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return arr


def check_positive(value, name, *, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValidationError(f"{name} must be finite and {bound}, got {value}")
    return value


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or int(value) < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
