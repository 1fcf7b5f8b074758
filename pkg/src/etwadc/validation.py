"""Small input-validation helpers in the spirit of ``sklearn.utils.validation``."""
import numpy as np

from .exceptions import DimensionMismatch


def as_matrix(value, name="array", shape=None):
    """Return ``value`` as a finite 2-D float array.

    Scalars become 1x1 and 1-D arrays become a single column. ``shape`` may
    contain ``None`` wildcards.
    """
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be at most 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if shape is not None:
        for axis, want in enumerate(shape):
            if want is not None and arr.shape[axis] != want:
                raise DimensionMismatch(
                    f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def check_square(value, name="matrix"):
    arr = as_matrix(value, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {arr.shape}")
    return arr


def as_vector(value, name="vector", size=None):
    arr = np.array(value, dtype=float).reshape(-1)
    if size is not None and arr.size != size:
        raise DimensionMismatch(f"{name} has {arr.size} entries, expected {size}")
    return arr


def check_sigma(sigma):
    from .exceptions import SigmaOutOfRange

    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise SigmaOutOfRange(f"sigma must lie in (0, 1), got {sigma}")
    return sigma
