"""Choose-max fusion of low-rank coefficients and the full pipeline.

The pipeline: extract sliding-window patches from both sources, label
the pooled patches by dominant gradient orientation, train one K-SVD
sub-dictionary per label and unite them, represent each source's patch
matrix against the global dictionary with the low-rank solver, keep
per column the coefficient vector with the larger l1 norm, reconstruct
the fused patch matrix as D Z and overlap-average it into the fused
image.

``MultiFocusFusion`` wraps the pipeline with scikit-learn style
parameter handling.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator

from .dictionary import Dictionary, KsvdParams, build_global_dictionary
from .hog import column_labels
from .lrr import LrrParams, column_l1_norms, lrr_solve
from .patches import PatchMatrix, extract_patches, reconstruct_average
from .validation import check_image, check_mask

__all__ = [
    "FusionConfig",
    "FusedCoefficients",
    "SolverDiagnostics",
    "FusionReport",
    "fuse_coefficients",
    "reconstruct_fused",
    "fuse_images",
    "provenance_accuracy",
    "MultiFocusFusion",
]


@dataclass(frozen=True)
class FusionConfig:
    """Pipeline settings; component defaults mirror the usual run setup."""

    window: int = 8
    step: int = 1
    bins: int = 6
    hog_threshold: float = 0.3
    ksvd: KsvdParams = field(default_factory=KsvdParams)
    lrr: LrrParams = field(default_factory=LrrParams)
    tie_break: str = "b"

    def __post_init__(self):
        if int(self.window) < 1 or int(self.step) < 1 or int(self.bins) < 1:
            raise ValueError("window, step, and bins must be >= 1")
        if not 0.0 < float(self.hog_threshold) < 1.0:
            raise ValueError("hog_threshold must lie strictly between 0 and 1")
        if self.tie_break not in ("a", "b"):
            raise ValueError("tie_break must be 'a' or 'b'")


@dataclass(frozen=True)
class FusedCoefficients:
    """Fused coefficient matrix and per-column provenance flags."""

    z: np.ndarray = field(repr=False)
    from_a: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    feasibility_residual: float
    split_residual: float
    objective: float
    converged: bool


@dataclass(frozen=True)
class FusionReport:
    """Everything a run learned besides the fused image itself."""

    config: FusionConfig
    geometry: object
    class_counts: np.ndarray
    dictionary_size: int
    solver_a: SolverDiagnostics
    solver_b: SolverDiagnostics
    from_a: np.ndarray = field(repr=False)
    timings: dict = field(default_factory=dict)
    warnings: tuple = ()
    arrays: dict = None


def fuse_coefficients(z_a, z_b, tie_break="b"):
    """Keep, per column, the coefficient vector with the larger l1 norm.

    Ties go to source B under the default policy (strict inequality for
    A), or to A with ``tie_break="a"``.  Every fused column equals the
    corresponding column of one input exactly.
    """
    if tie_break not in ("a", "b"):
        raise ValueError("tie_break must be 'a' or 'b'")
    za = np.asarray(z_a, dtype=np.float64)
    zb = np.asarray(z_b, dtype=np.float64)
    if za.shape != zb.shape:
        raise ValueError(
            "coefficient shapes differ: %s vs %s" % (za.shape, zb.shape)
        )
    norms_a = column_l1_norms(za)
    norms_b = column_l1_norms(zb)
    if tie_break == "b":
        from_a = norms_a > norms_b
    else:
        from_a = norms_a >= norms_b
    fused = np.where(from_a[None, :], za, zb)
    return FusedCoefficients(z=fused, from_a=from_a)


def reconstruct_fused(dictionary, fused, geometry):
    """Rebuild the fused image from fused coefficients: V_f = D Z_f.

    ``fused`` may be a :class:`FusedCoefficients` or a plain (K, Q)
    array.  Columns are reshaped back into windows and overlap-averaged,
    output clamped to [0, 1].
    """
    atoms = dictionary.atoms if isinstance(dictionary, Dictionary) else np.asarray(
        dictionary, dtype=np.float64
    )
    z = fused.z if isinstance(fused, FusedCoefficients) else np.asarray(
        fused, dtype=np.float64
    )
    if atoms.shape[1] != z.shape[0]:
        raise ValueError(
            "dictionary size %d does not match coefficient rows %d"
            % (atoms.shape[1], z.shape[0])
        )
    if z.shape[1] != geometry.count:
        raise ValueError(
            "coefficient columns %d do not match geometry count %d"
            % (z.shape[1], geometry.count)
        )
    return reconstruct_average(PatchMatrix(geometry, atoms @ z))


def fuse_images(image_a, image_b, config=None, dictionary=None, keep_arrays=False):
    """Fuse two registered source images into one all-in-focus image.

    Parameters
    ----------
    image_a, image_b : same-shape [0, 1] grayscale arrays
    config : FusionConfig, defaults apply when omitted
    dictionary : optional pretrained :class:`Dictionary`; when omitted a
        dictionary is trained on the pooled patches of both sources
    keep_arrays : retain intermediate matrices on the report for
        debugging dumps

    Returns
    -------
    (fused image, :class:`FusionReport`)
    """
    a = check_image(image_a, "image_a")
    b = check_image(image_b, "image_b")
    if a.shape != b.shape:
        raise ValueError("source shapes differ: %s vs %s" % (a.shape, b.shape))
    cfg = config if config is not None else FusionConfig()

    timings = {}
    clock = time.perf_counter

    t = clock()
    pa = extract_patches(a, cfg.window, cfg.step)
    pb = extract_patches(b, cfg.window, cfg.step)
    geometry = pa.geometry
    timings["extract"] = clock() - t

    if dictionary is None:
        t = clock()
        pooled = np.hstack([pa.data, pb.data])
        labels = column_labels(pooled, cfg.window, cfg.bins, cfg.hog_threshold)
        class_counts = np.bincount(labels, minlength=int(cfg.bins) + 1)
        timings["classify"] = clock() - t
        t = clock()
        classes = [pooled[:, labels == j] for j in range(int(cfg.bins) + 1)]
        dic = build_global_dictionary(classes, cfg.ksvd)
        timings["train"] = clock() - t
    else:
        dic = dictionary
        if dic.dim != int(cfg.window) ** 2:
            raise ValueError(
                "dictionary dimension %d does not match window %d"
                % (dic.dim, cfg.window)
            )
        class_counts = np.bincount(dic.labels, minlength=dic.bins + 1)
        timings["classify"] = 0.0
        timings["train"] = 0.0

    t = clock()
    sol_a = lrr_solve(pa.data, dic, cfg.lrr)
    timings["solve_a"] = clock() - t
    t = clock()
    sol_b = lrr_solve(pb.data, dic, cfg.lrr)
    timings["solve_b"] = clock() - t

    t = clock()
    fused_coef = fuse_coefficients(sol_a.z, sol_b.z, cfg.tie_break)
    fused = reconstruct_fused(dic, fused_coef, geometry)
    timings["fuse"] = clock() - t

    warnings = []
    for name, sol in (("a", sol_a), ("b", sol_b)):
        if not sol.converged:
            warnings.append(
                "solver %s stopped at %d iterations with residuals %.3e / %.3e"
                % (name, sol.iterations, sol.feasibility_residual, sol.split_residual)
            )

    arrays = None
    if keep_arrays:
        arrays = {
            "va": pa.data,
            "vb": pb.data,
            "za": sol_a.z,
            "zb": sol_b.z,
            "ea": sol_a.e,
            "eb": sol_b.e,
            "zf": fused_coef.z,
            "dictionary": dic,
        }

    report = FusionReport(
        config=cfg,
        geometry=geometry,
        class_counts=class_counts,
        dictionary_size=dic.size,
        solver_a=SolverDiagnostics(
            sol_a.iterations,
            sol_a.feasibility_residual,
            sol_a.split_residual,
            sol_a.objective,
            sol_a.converged,
        ),
        solver_b=SolverDiagnostics(
            sol_b.iterations,
            sol_b.feasibility_residual,
            sol_b.split_residual,
            sol_b.objective,
            sol_b.converged,
        ),
        from_a=fused_coef.from_a,
        timings=timings,
        warnings=tuple(warnings),
        arrays=arrays,
    )
    return fused, report


def provenance_accuracy(from_a, mask, geometry):
    """Fraction of decided patches whose coefficients came from the
    in-focus source.

    Only windows lying entirely inside one mask region count: fully
    mask-true windows should come from source A, fully mask-false ones
    from source B.  Returns NaN when no window is fully interior.
    """
    mask = check_mask(mask, (geometry.height, geometry.width))
    flags = np.asarray(from_a, dtype=bool).reshape(geometry.rows, geometry.cols)
    n, s = geometry.window, geometry.step
    counts = sliding_window_view(mask, (n, n))[::s, ::s].sum(axis=(2, 3))
    full = counts == n * n
    empty = counts == 0
    interior = full | empty
    if not interior.any():
        return float("nan")
    correct = (flags & full) | (~flags & empty)
    return float(correct[interior].mean())


class MultiFocusFusion(BaseEstimator):
    """The fusion pipeline with flat scikit-learn parameter handling.

    Parameters cover the window grid (``window``, ``step``), orientation
    labeling (``bins``, ``threshold``), dictionary learning (``atoms``,
    ``sparsity``, ``iterations``, ``seed``), and the low-rank solver
    (``lam``, ``mu0``, ``rho``, ``mu_max``, ``tol``, ``max_iter``),
    plus the l1 ``tie_break`` policy.  ``fuse(a, b)`` returns the fused
    image and stores the run report on ``report_``.
    """

    def __init__(
        self,
        window=8,
        step=1,
        bins=6,
        threshold=0.3,
        atoms=128,
        sparsity=6,
        iterations=30,
        seed=0,
        lam=100.0,
        mu0=None,
        rho=1.1,
        mu_max=1e10,
        tol=1e-6,
        max_iter=1000,
        tie_break="b",
    ):
        self.window = window
        self.step = step
        self.bins = bins
        self.threshold = threshold
        self.atoms = atoms
        self.sparsity = sparsity
        self.iterations = iterations
        self.seed = seed
        self.lam = lam
        self.mu0 = mu0
        self.rho = rho
        self.mu_max = mu_max
        self.tol = tol
        self.max_iter = max_iter
        self.tie_break = tie_break

    def config(self):
        """The :class:`FusionConfig` these parameters describe."""
        return FusionConfig(
            window=self.window,
            step=self.step,
            bins=self.bins,
            hog_threshold=self.threshold,
            ksvd=KsvdParams(
                atoms=self.atoms,
                sparsity=self.sparsity,
                iterations=self.iterations,
                seed=self.seed,
            ),
            lrr=LrrParams(
                lam=self.lam,
                mu0=self.mu0,
                rho=self.rho,
                mu_max=self.mu_max,
                tol=self.tol,
                max_iter=self.max_iter,
            ),
            tie_break=self.tie_break,
        )

    def fuse(self, image_a, image_b, dictionary=None):
        fused, report = fuse_images(
            image_a, image_b, self.config(), dictionary=dictionary
        )
        self.report_ = report
        return fused
