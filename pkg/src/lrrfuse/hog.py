"""Per-patch oriented-gradient histograms and dominant-orientation labels.

Each patch gets one histogram of gradient magnitudes over L unsigned
orientation bins covering [0, 180) degrees.  A patch whose largest bin
holds at least a fraction T of the total magnitude is labeled by that
bin (1-based); patches with no dominant orientation, including flat
ones, get label 0.  Labels partition a patch matrix into L + 1 classes.
"""

import numpy as np

from .validation import as_float_matrix

__all__ = [
    "orientation_histogram",
    "classify_patch",
    "column_labels",
    "partition_patches",
]


def _histograms(blocks, bins):
    """Histograms for a (count, n, n) stack of patches, one row each.

    Central differences with replicate edges, per-pixel magnitude
    sqrt(gx^2 + gy^2), unsigned orientation folded into [0, 180), hard
    binning into bins of width 180 / L.  The whole magnitude of a pixel
    lands in a single bin, so the histogram total equals the total
    gradient magnitude.
    """
    count = blocks.shape[0]
    p = np.pad(blocks, ((0, 0), (1, 1), (1, 1)), mode="edge")
    gx = p[:, 1:-1, 2:] - p[:, 1:-1, :-2]
    gy = p[:, 2:, 1:-1] - p[:, :-2, 1:-1]
    mag = np.sqrt(gx * gx + gy * gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    idx = np.minimum((ang * bins / 180.0).astype(np.int64), bins - 1)
    flat = idx + (np.arange(count, dtype=np.int64) * bins)[:, None, None]
    hist = np.bincount(flat.ravel(), weights=mag.ravel(), minlength=count * bins)
    return hist.reshape(count, bins)


def orientation_histogram(patch, window, bins):
    """Oriented-gradient histogram of one vectorized n x n patch.

    Parameters
    ----------
    patch : array of length window^2, row-major pixel order
    window : patch side n
    bins : number of orientation bins L, bin j covers
        [j 180 / L, (j + 1) 180 / L) degrees

    Returns
    -------
    ndarray of L non-negative magnitudes.
    """
    window = int(window)
    bins = int(bins)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    vec = np.asarray(patch, dtype=np.float64).ravel()
    if vec.size != window * window:
        raise ValueError(
            "patch length %d does not match window %d" % (vec.size, window)
        )
    return _histograms(vec.reshape(1, window, window), bins)[0]


def classify_patch(hist, threshold):
    """Dominant-orientation label of a histogram.

    Returns 0 when the histogram is empty or its peak holds less than a
    fraction ``threshold`` of the total, else the 1-based peak bin,
    lowest bin on ties.
    """
    t = float(threshold)
    if not 0.0 < t < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    h = np.asarray(hist, dtype=np.float64).ravel()
    total = h.sum()
    if total == 0.0 or h.max() / total < t:
        return 0
    return int(h.argmax()) + 1


def column_labels(data, window, bins, threshold):
    """Labels for every column of a window^2 x count patch matrix."""
    t = float(threshold)
    if not 0.0 < t < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    bins = int(bins)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    data = as_float_matrix(data, "patch data")
    window = int(window)
    if data.shape[0] != window * window:
        raise ValueError(
            "patch rows %d do not match window %d" % (data.shape[0], window)
        )
    blocks = data.T.reshape(-1, window, window)
    hists = _histograms(blocks, bins)
    totals = hists.sum(axis=1)
    peaks = hists.max(axis=1)
    ratio = np.divide(peaks, totals, out=np.zeros_like(peaks), where=totals > 0)
    labels = np.where((totals == 0.0) | (ratio < t), 0, hists.argmax(axis=1) + 1)
    return labels.astype(np.int64)


def partition_patches(patches, bins, threshold):
    """Split patch-matrix columns into L + 1 disjoint index sets by label.

    Entry j of the returned list holds the (sorted) column indices with
    label j; the sets are disjoint and their union is every column.
    """
    labels = column_labels(patches.data, patches.geometry.window, bins, threshold)
    return [np.flatnonzero(labels == j) for j in range(int(bins) + 1)]
