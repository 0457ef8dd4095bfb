"""Image quality metrics: average gradient, PSNR, SSIM.

Average gradient is no-reference; PSNR and SSIM compare against the
all-in-focus original.  All three assume unit-range intensities, so the
PSNR peak is 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .validation import check_image

__all__ = [
    "MetricsReport",
    "average_gradient",
    "psnr",
    "ssim",
    "evaluate_pair",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class MetricsReport:
    ag: float
    psnr: float
    ssim: float


def average_gradient(img):
    """Mean magnitude of forward differences over interior sites.

    AG = (1 / ((N-1)(M-1))) sum sqrt((dx^2 + dy^2) / 2) with
    dx = I[r, c+1] - I[r, c] and dy = I[r+1, c] - I[r, c], summed over
    r < N-1, c < M-1.
    """
    img = check_image(img)
    n, m = img.shape
    if n < 2 or m < 2:
        raise ValueError("image must be at least 2x2 for the average gradient")
    dx = (img[:, 1:] - img[:, :-1])[:-1, :]
    dy = (img[1:, :] - img[:-1, :])[:, :-1]
    return float(np.sqrt((dx * dx + dy * dy) / 2.0).sum() / ((n - 1) * (m - 1)))


def psnr(img, ref):
    """Peak signal-to-noise ratio in dB for unit-range images.

    Returns +inf for identical inputs.
    """
    img = check_image(img)
    ref = check_image(ref, "reference")
    if img.shape != ref.shape:
        raise ValueError("shapes differ: %s vs %s" % (img.shape, ref.shape))
    mse = float(((img - ref) ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return float(-10.0 * np.log10(mse))


def _ssim_window():
    ax = np.arange(SSIM_WINDOW, dtype=np.float64) - (SSIM_WINDOW - 1) / 2.0
    xx, yy = np.meshgrid(ax, ax)
    w = np.exp(-(xx * xx + yy * yy) / (2.0 * SSIM_SIGMA ** 2))
    return w / w.sum()


def ssim(img, ref):
    """Mean local structural similarity, 11 x 11 Gaussian window.

    Gaussian weights with sigma 1.5, C1 = 0.01^2, C2 = 0.03^2 for unit
    dynamic range, computed over valid windows only (no padding), in the
    standard luminance, contrast, structure product form.
    """
    x = check_image(img)
    y = check_image(ref, "reference")
    if x.shape != y.shape:
        raise ValueError("shapes differ: %s vs %s" % (x.shape, y.shape))
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(
            "image must be at least %dx%d for SSIM" % (SSIM_WINDOW, SSIM_WINDOW)
        )
    w = _ssim_window()
    pad = SSIM_WINDOW // 2

    def valid(arr):
        return ndimage.correlate(arr, w, mode="constant")[pad:-pad, pad:-pad]

    mx = valid(x)
    my = valid(y)
    sxx = valid(x * x) - mx * mx
    syy = valid(y * y) - my * my
    sxy = valid(x * y) - mx * my
    num = (2.0 * mx * my + SSIM_C1) * (2.0 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float((num / den).mean())


def evaluate_pair(img, ref):
    """AG of ``img`` plus PSNR and SSIM against ``ref``."""
    return MetricsReport(
        ag=average_gradient(img), psnr=psnr(img, ref), ssim=ssim(img, ref)
    )
