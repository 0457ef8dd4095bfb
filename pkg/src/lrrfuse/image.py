"""Grayscale images, raster file I/O, blurring, synthetic focus pairs.

Images are plain 2-D float64 arrays with intensities in [0, 1]; focus
masks are boolean arrays of the same shape, true where the companion
image is kept sharp.  Binary PGM (P5, maxval 255) is the bit-exact
interchange format; 8-bit PNG is supported through Pillow.  RGB input
is reduced to luma before scaling.
"""

import io

import numpy as np
from PIL import Image
from scipy import ndimage

from .validation import check_image, check_mask, check_odd_size, check_positive

__all__ = [
    "ImageFormatError",
    "load_gray",
    "save_gray",
    "gaussian_kernel",
    "gaussian_blur",
    "make_focus_pair",
    "mask_from_spec",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(OSError):
    """Raised for rasters the package cannot decode or encode."""


def _read_pgm(blob, path):
    # Binary PGM: "P5", whitespace-separated width/height/maxval with
    # '#' comments, one whitespace byte, then the raster.
    pos = 2

    def token():
        nonlocal pos
        while pos < len(blob):
            ch = blob[pos : pos + 1]
            if ch == b"#":
                nl = blob.find(b"\n", pos)
                pos = len(blob) if nl < 0 else nl + 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("%s: truncated PGM header" % path)
        return blob[start:pos]

    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError:
        raise ImageFormatError("%s: malformed PGM header" % path)
    if width < 1 or height < 1:
        raise ImageFormatError("%s: bad PGM dimensions %dx%d" % (path, width, height))
    if maxval != 255:
        raise ImageFormatError(
            "%s: unsupported PGM maxval %d, only 8-bit rasters are handled"
            % (path, maxval)
        )
    pos += 1  # single whitespace byte after maxval
    raster = blob[pos : pos + width * height]
    if len(raster) < width * height:
        raise ImageFormatError("%s: truncated PGM raster" % path)
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return data.astype(np.float64) / 255.0


def load_gray(path):
    """Load an 8-bit grayscale or RGB raster as a [0, 1] float image.

    Parameters
    ----------
    path : str or Path
        PGM (binary P5) or any raster Pillow can decode, PNG in practice.

    Returns
    -------
    ndarray of shape (height, width) with values in [0, 1].  RGB input
    is reduced to luma 0.299 R + 0.587 G + 0.114 B before scaling.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] == b"P5":
        return _read_pgm(blob, path)
    try:
        with Image.open(io.BytesIO(blob)) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                im = im.convert("L")
                mode = "L"
            if mode == "L":
                data = np.asarray(im, dtype=np.float64)
            elif mode in ("I", "F") or mode.startswith("I;16"):
                raise ImageFormatError("%s: unsupported bit depth (mode %s)" % (path, mode))
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                data = rgb @ np.asarray(LUMA_WEIGHTS)
    except ImageFormatError:
        raise
    except Exception as exc:
        raise ImageFormatError("%s: cannot decode raster (%s)" % (path, exc))
    return data / 255.0


def save_gray(img, path):
    """Write an image as 8-bit grayscale, PGM or PNG by file extension.

    Intensities are quantized round-half-up: byte = floor(255 v + 0.5).
    A save/load roundtrip therefore moves each pixel by at most 1/510.
    """
    img = check_image(img)
    q = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    name = str(path).lower()
    if name.endswith((".pgm", ".pnm")):
        header = b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0])
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(q.tobytes())
        return
    try:
        Image.fromarray(q, mode="L").save(path)
    except ValueError as exc:
        raise ImageFormatError("%s: cannot encode raster (%s)" % (path, exc))


def gaussian_kernel(size, sigma):
    """Normalized size x size Gaussian kernel exp(-(x^2+y^2)/(2 sigma^2))."""
    size = check_odd_size(size, "kernel size")
    sigma = check_positive(sigma, "sigma")
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img, size, sigma):
    """Blur with a normalized Gaussian kernel, replicate-edge boundary.

    The kernel is non-negative and sums to one, so output values stay in
    [0, 1]; the final clip only guards float roundoff.  size = 1 is the
    identity.
    """
    img = check_image(img)
    k = gaussian_kernel(size, sigma)
    out = ndimage.correlate(img, k, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def make_focus_pair(original, mask, size=3, sigma=7.0):
    """Build a complementary defocus pair from one sharp image.

    Returns (a, b) where a keeps the original on mask-true pixels and is
    blurred elsewhere, and b is the complement, so every pixel is sharp
    in exactly one output.  Sharp regions are copied bit-exactly.
    """
    original = check_image(original, "original")
    mask = check_mask(mask, original.shape)
    blurred = gaussian_blur(original, size, sigma)
    a = np.where(mask, original, blurred)
    b = np.where(mask, blurred, original)
    return a, b


def mask_from_spec(spec, shape):
    """Build a focus mask from a textual spec or a mask image file.

    Accepted specs: ``left``, ``right``, ``top``, ``bottom``,
    ``circle:cx,cy,r`` (pixel coordinates, column/row order), or a path
    to an image whose pixels >= 0.5 mark the mask-true region.
    """
    height, width = int(shape[0]), int(shape[1])
    word = str(spec).strip()
    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    if word == "left":
        return np.broadcast_to(c < width // 2, (height, width)).copy()
    if word == "right":
        return np.broadcast_to(c >= width // 2, (height, width)).copy()
    if word == "top":
        return np.broadcast_to(r < height // 2, (height, width)).copy()
    if word == "bottom":
        return np.broadcast_to(r >= height // 2, (height, width)).copy()
    if word.startswith("circle:"):
        try:
            cx, cy, rad = (float(v) for v in word[len("circle:") :].split(","))
        except ValueError:
            raise ValueError("bad circle mask spec %r, expected circle:cx,cy,r" % spec)
        return (c - cx) ** 2 + (r - cy) ** 2 <= rad * rad
    if "." in word or "/" in word:
        img = load_gray(word)
        if img.shape != (height, width):
            raise ValueError(
                "mask image shape %s does not match image shape %s"
                % (img.shape, (height, width))
            )
        return img >= 0.5
    raise ValueError("unknown mask spec %r" % spec)
