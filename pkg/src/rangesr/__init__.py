"""Color-guided super-resolution of range images.

Low-resolution range images are lifted onto the high-resolution grid as
sparse samples, then completed by iterating mean-shift color segmentation
with growing bandwidths, RANSAC plane fits per segment, and local cost
minimization over a discrete label set.
"""
import os as _os

# The workqueue layer is always available and honors set_num_threads.
_os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .errors import (
    DegenerateGeometryError,
    EmptyInputError,
    FormatError,
    InsufficientDataError,
    NoConsensusError,
    RangeSrError,
    SizeMismatchError,
)
from .evaluate import (
    ExperimentResult,
    MetricsReport,
    bicubic_upsample,
    compute_metrics,
    run_experiment,
)
from .imgio import read_image, write_pgm, write_png, write_ppm
from .labeling import (
    CostParams,
    LabelSet,
    assign_median_segment,
    assign_planar_segment,
    build_label_set,
    context_weight,
    median_cost,
    planar_cost,
)
from .lift import decimate, lift_sparse, sparsity_ratio
from .meanshift import MsParams, rgb_to_luv, segment
from .pipeline import (
    PassReport,
    SrConfig,
    bandwidth_schedule,
    default_config,
    super_resolve,
)
from .planefit import Plane, RansacParams, eval_plane, ransac_plane
from .raster import (
    LABELED,
    MISSING,
    OBSERVED,
    ColorImage,
    RangeImage,
    SegmentMap,
    VisibilityMask,
    VisibilityPolicy,
    neighbors2,
    segment_stats,
)

__version__ = "0.1.0"

__all__ = [
    "ColorImage",
    "CostParams",
    "DegenerateGeometryError",
    "EmptyInputError",
    "ExperimentResult",
    "FormatError",
    "InsufficientDataError",
    "LABELED",
    "LabelSet",
    "MISSING",
    "MetricsReport",
    "MsParams",
    "NoConsensusError",
    "OBSERVED",
    "PassReport",
    "Plane",
    "RangeImage",
    "RangeSrError",
    "RansacParams",
    "SegmentMap",
    "SizeMismatchError",
    "SrConfig",
    "VisibilityMask",
    "VisibilityPolicy",
    "assign_median_segment",
    "assign_planar_segment",
    "bandwidth_schedule",
    "bicubic_upsample",
    "build_label_set",
    "compute_metrics",
    "context_weight",
    "decimate",
    "default_config",
    "eval_plane",
    "lift_sparse",
    "median_cost",
    "neighbors2",
    "planar_cost",
    "ransac_plane",
    "read_image",
    "rgb_to_luv",
    "run_experiment",
    "segment",
    "segment_stats",
    "sparsity_ratio",
    "super_resolve",
    "write_pgm",
    "write_png",
    "write_ppm",
    "__version__",
]
