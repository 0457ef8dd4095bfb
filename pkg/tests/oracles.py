"""Independent reference implementations used to pin expected test values.

Everything here is written as plain per-pixel or per-element loops,
deliberately avoiding the package's own vectorized code paths.
"""

import math

import numpy as np


def hog_histogram(block, bins):
    """Brute-force oriented-gradient histogram of one 2-D patch."""
    block = np.asarray(block, dtype=np.float64)
    n, m = block.shape
    hist = [0.0] * bins

    def px(r, c):
        r = min(max(r, 0), n - 1)
        c = min(max(c, 0), m - 1)
        return block[r, c]

    for r in range(n):
        for c in range(m):
            gx = px(r, c + 1) - px(r, c - 1)
            gy = px(r + 1, c) - px(r - 1, c)
            mag = math.sqrt(gx * gx + gy * gy)
            ang = math.degrees(math.atan2(gy, gx)) % 180.0
            idx = min(int(ang * bins / 180.0), bins - 1)
            hist[idx] += mag
    return np.array(hist)


def hog_class(hist, threshold):
    """Brute-force dominant-orientation label."""
    total = float(sum(hist))
    if total == 0.0:
        return 0
    peak = max(hist)
    if peak / total < threshold:
        return 0
    for j, v in enumerate(hist):
        if v == peak:
            return j + 1


def golden_min(fun, lo, hi, tol=1e-12):
    """Golden-section minimizer of a unimodal function on [lo, hi]."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def l21_prox_column(q, tau):
    """Column shrinkage via a 1-D golden-section search over the scale.

    Comparisons alone cannot localize a flat quadratic minimum beyond
    sqrt(machine epsilon), so the bracket is polished with one parabolic
    interpolation step, which is exact for a quadratic objective.
    """
    q = np.asarray(q, dtype=np.float64)
    norm = float(np.sqrt((q * q).sum()))
    if norm == 0.0:
        return np.zeros_like(q)

    def objective(t):
        return tau * t + 0.5 * (t - norm) ** 2

    mid = golden_min(objective, 0.0, norm, tol=1e-6)
    h = max(1e-3 * norm, 1e-9)
    x1, x2, x3 = mid - h, mid, mid + h
    f1, f2, f3 = objective(x1), objective(x2), objective(x3)
    denom = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1)
    if denom != 0.0:
        vertex = x2 - 0.5 * (
            (x2 - x1) ** 2 * (f2 - f3) - (x2 - x3) ** 2 * (f2 - f1)
        ) / denom
    else:
        vertex = mid
    best = min(max(vertex, 0.0), norm)
    return (best / norm) * q


def svt_direct(mtx, tau):
    """Direct SVD soft-thresholding, the reference for any fast path."""
    u, s, vt = np.linalg.svd(np.asarray(mtx, dtype=np.float64), full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vt


def reconstruct_brute(data, geometry):
    """Per-window loop reconstruction; returns (sum/count image, counts)."""
    n, s = geometry.window, geometry.step
    acc = np.zeros((geometry.height, geometry.width))
    cnt = np.zeros((geometry.height, geometry.width))
    for idx in range(geometry.count):
        r, c = divmod(idx, geometry.cols)
        block = data[:, idx].reshape(n, n)
        acc[r * s : r * s + n, c * s : c * s + n] += block
        cnt[r * s : r * s + n, c * s : c * s + n] += 1.0
    out = np.where(cnt > 0, acc / np.maximum(cnt, 1.0), 0.0)
    return out, cnt


def match_atoms(true_atoms, learned_atoms, threshold=0.95):
    """Greedy one-to-one atom matching by largest absolute inner product."""
    ips = np.abs(true_atoms.T @ learned_atoms)
    pairs = [
        (ips[i, j], i, j)
        for i in range(ips.shape[0])
        for j in range(ips.shape[1])
    ]
    pairs.sort(reverse=True)
    used_true = set()
    used_learned = set()
    matched = 0
    for value, i, j in pairs:
        if i in used_true or j in used_learned:
            continue
        used_true.add(i)
        used_learned.add(j)
        if value > threshold:
            matched += 1
    return matched


def textured_image(seed, shape=(128, 128)):
    """Deterministic textured test image with energy at two scales."""
    from lrrfuse import gaussian_blur

    rng = np.random.default_rng(seed)
    fine = gaussian_blur(rng.random(shape), 7, 1.2)
    coarse = gaussian_blur(rng.random(shape), 13, 3.0)
    img = 0.6 * fine + 0.4 * coarse
    img = (img - img.min()) / (img.max() - img.min())
    return 0.05 + 0.9 * img
