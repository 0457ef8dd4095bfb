"""Shared argument checking helpers.

Public entry points across the package funnel their inputs through these
functions so that error messages stay uniform and the numeric core can
assume clean float64 arrays.
"""

import numpy as np


def as_float_matrix(arr, name="array"):
    """Coerce to a 2-D float64 ndarray, rejecting non-finite entries."""
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError("%s must be 2-D, got %d-D" % (name, out.ndim))
    if out.size and not np.all(np.isfinite(out)):
        raise ValueError("%s contains non-finite values" % name)
    return out


def check_image(img, name="image"):
    """Validate a grayscale image: 2-D float array with values in [0, 1]."""
    out = as_float_matrix(img, name)
    if out.size == 0:
        raise ValueError("%s is empty" % name)
    lo = out.min()
    hi = out.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError(
            "%s intensities must lie in [0, 1], found [%g, %g]" % (name, lo, hi)
        )
    return out


def check_mask(mask, shape, name="mask"):
    """Validate a boolean focus mask against a companion image shape."""
    out = np.asarray(mask)
    if out.shape != tuple(shape):
        raise ValueError(
            "%s shape %s does not match image shape %s"
            % (name, out.shape, tuple(shape))
        )
    return out.astype(bool)


def check_odd_size(value, name="size"):
    v = int(value)
    if v < 1 or v % 2 == 0:
        raise ValueError("%s must be an odd positive integer, got %s" % (name, value))
    return v


def check_positive(value, name="value"):
    v = float(value)
    if not v > 0.0:
        raise ValueError("%s must be positive, got %s" % (name, value))
    return v


def check_at_least(value, minimum, name="value"):
    v = int(value)
    if v < minimum:
        raise ValueError("%s must be >= %d, got %s" % (name, minimum, value))
    return v
