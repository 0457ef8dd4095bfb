"""Multi-focus image fusion with learned dictionaries and low-rank
representation.

Patches from two differently focused source images are labeled by
dominant gradient orientation, a K-SVD sub-dictionary is trained per
label and united into one global dictionary, each source's patch matrix
is represented against it by a low-rank plus column-sparse decomposition,
coefficient columns are fused by the larger l1 norm, and the fused image
is rebuilt by overlap averaging.
"""

from .image import (
    ImageFormatError,
    gaussian_blur,
    gaussian_kernel,
    load_gray,
    make_focus_pair,
    mask_from_spec,
    save_gray,
)
from .patches import PatchGeometry, PatchMatrix, extract_patches, reconstruct_average
from .hog import classify_patch, column_labels, orientation_histogram, partition_patches
from .dictionary import (
    Dictionary,
    KsvdParams,
    KsvdResult,
    PatchDictionaryLearner,
    build_global_dictionary,
    ksvd_train,
    omp,
    omp_all,
)
from .lrr import (
    LowRankRepresentation,
    LrrParams,
    LrrSolution,
    column_l1_norms,
    lrr_solve,
    nuclear_norm,
    shrink_l21,
    svt,
)
from .fusion import (
    FusedCoefficients,
    FusionConfig,
    FusionReport,
    MultiFocusFusion,
    SolverDiagnostics,
    fuse_coefficients,
    fuse_images,
    provenance_accuracy,
    reconstruct_fused,
)
from .metrics import MetricsReport, average_gradient, evaluate_pair, psnr, ssim
from .matrixio import (
    FileFormatError,
    load_dictionary,
    load_matrix,
    save_dictionary,
    save_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "ImageFormatError",
    "load_gray",
    "save_gray",
    "gaussian_kernel",
    "gaussian_blur",
    "make_focus_pair",
    "mask_from_spec",
    "PatchGeometry",
    "PatchMatrix",
    "extract_patches",
    "reconstruct_average",
    "orientation_histogram",
    "classify_patch",
    "column_labels",
    "partition_patches",
    "Dictionary",
    "KsvdParams",
    "KsvdResult",
    "omp",
    "omp_all",
    "ksvd_train",
    "build_global_dictionary",
    "PatchDictionaryLearner",
    "LrrParams",
    "LrrSolution",
    "svt",
    "shrink_l21",
    "lrr_solve",
    "column_l1_norms",
    "nuclear_norm",
    "LowRankRepresentation",
    "FusionConfig",
    "FusedCoefficients",
    "SolverDiagnostics",
    "FusionReport",
    "fuse_coefficients",
    "reconstruct_fused",
    "fuse_images",
    "provenance_accuracy",
    "MultiFocusFusion",
    "MetricsReport",
    "average_gradient",
    "psnr",
    "ssim",
    "evaluate_pair",
    "FileFormatError",
    "save_matrix",
    "load_matrix",
    "save_dictionary",
    "load_dictionary",
    "__version__",
]
