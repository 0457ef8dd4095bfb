"""Sliding-window patch extraction and overlap-averaged reconstruction.

A patch matrix stores every n x n window of an image as one column,
windows enumerated over a row-major grid with a fixed step, pixels
inside each window vectorized row-major.  Reconstruction averages all
patch entries that map to the same pixel; the two operations are exact
inverses on every covered pixel.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import as_float_matrix, check_image

__all__ = ["PatchGeometry", "PatchMatrix", "extract_patches", "reconstruct_average"]


@dataclass(frozen=True)
class PatchGeometry:
    """Window layout of a patch matrix over an image.

    rows = floor((height - window) / step) + 1 and likewise for cols;
    count = rows * cols is the number of windows.
    """

    height: int
    width: int
    window: int
    step: int

    def __post_init__(self):
        for name in ("height", "width", "window", "step"):
            if int(getattr(self, name)) < 1:
                raise ValueError("%s must be >= 1" % name)
        if self.window > min(self.height, self.width):
            raise ValueError(
                "window %d exceeds image size %dx%d"
                % (self.window, self.height, self.width)
            )

    @property
    def rows(self):
        return (self.height - self.window) // self.step + 1

    @property
    def cols(self):
        return (self.width - self.window) // self.step + 1

    @property
    def count(self):
        return self.rows * self.cols

    def grid(self, index):
        """Map a column index to its (row, col) window grid position."""
        if not 0 <= index < self.count:
            raise IndexError("patch index %d out of range" % index)
        return index // self.cols, index % self.cols

    def index(self, row, col):
        """Map a window grid position back to its column index."""
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError("grid position (%d, %d) out of range" % (row, col))
        return row * self.cols + col


@dataclass(frozen=True)
class PatchMatrix:
    """window^2 x count matrix of vectorized patches plus its geometry."""

    geometry: PatchGeometry
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = as_float_matrix(self.data, "patch data")
        expected = (self.geometry.window ** 2, self.geometry.count)
        if d.shape != expected:
            raise ValueError(
                "patch data shape %s does not match geometry %s"
                % (d.shape, expected)
            )
        object.__setattr__(self, "data", d)


def extract_patches(img, window, step=1):
    """Slide an n x n window over the image and stack windows as columns.

    Column i holds the window at grid position (i // cols, i % cols),
    whose top-left pixel is (row * step, col * step), vectorized in
    row-major order.
    """
    img = check_image(img)
    geo = PatchGeometry(img.shape[0], img.shape[1], int(window), int(step))
    views = sliding_window_view(img, (geo.window, geo.window))[:: geo.step, :: geo.step]
    data = views.reshape(geo.count, geo.window ** 2).T.copy()
    return PatchMatrix(geo, data)


def _nearest_covered(length, covered):
    """Index of the nearest covered position for every position, lower on ties."""
    pos = np.flatnonzero(covered)
    t = np.arange(length)
    k = np.searchsorted(pos, t)
    left = pos[np.clip(k - 1, 0, len(pos) - 1)]
    right = pos[np.clip(k, 0, len(pos) - 1)]
    return np.where(np.abs(t - left) <= np.abs(right - t), left, right)


def reconstruct_average(patches):
    """Average overlapping patches back into an image.

    Each pixel is the arithmetic mean of every patch entry mapping to
    it, accumulated in float64 with a single division per pixel.  Pixels
    no window covers are filled from the nearest covered pixel (lower
    index on ties, per axis).  Output is clamped to [0, 1].
    """
    geo = patches.geometry
    n, s = geo.window, geo.step
    blocks = patches.data.T.reshape(geo.rows, geo.cols, n, n)
    acc = np.zeros((geo.height, geo.width))
    cnt = np.zeros((geo.height, geo.width))
    for i in range(n):
        rsl = slice(i, i + (geo.rows - 1) * s + 1, s)
        for j in range(n):
            csl = slice(j, j + (geo.cols - 1) * s + 1, s)
            acc[rsl, csl] += blocks[:, :, i, j]
            cnt[rsl, csl] += 1.0
    avg = np.divide(acc, cnt, out=np.zeros_like(acc), where=cnt > 0)
    row_cov = cnt[:, 0] > 0
    col_cov = cnt[0, :] > 0
    if not (row_cov.all() and col_cov.all()):
        rr = _nearest_covered(geo.height, row_cov)
        cc = _nearest_covered(geo.width, col_cov)
        avg = avg[np.ix_(rr, cc)]
    return np.clip(avg, 0.0, 1.0)
