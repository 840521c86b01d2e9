"""The LR<->HR decimation model.

An LR range image is modeled as a decimation of the HR image: pixels are
selected at regular lattice intervals, with no averaging or pre-filtering.
Lifting places the LR samples back onto their HR lattice sites and marks
everything else missing (the stored 0 is a placeholder, never data).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import SizeMismatchError
from .raster import MISSING, OBSERVED, RangeImage, VisibilityMask

ANCHORS = ("topleft", "center")


def _check_factor(f: int) -> int:
    if not isinstance(f, (int, np.integer)) or f < 1:
        raise ValueError(f"factor must be an integer >= 1, got {f!r}")
    return int(f)


def site_indices(n_hr: int, f: int, anchor: str = "topleft") -> np.ndarray:
    """Lattice sites along one axis: one sample per f-sized block.

    The default anchor is the top-left pixel of each block; "center" shifts
    by f//2 (clipped inside the last partial block).
    """
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}, got {anchor!r}")
    base = np.arange(math.ceil(n_hr / f), dtype=np.int64) * f
    if anchor == "center":
        base = np.minimum(base + f // 2, n_hr - 1)
    return base


def decimate(hr: RangeImage, f: int, anchor: str = "topleft") -> RangeImage:
    """Select every f-th pixel of hr on the sampling lattice."""
    f = _check_factor(f)
    ys = site_indices(hr.height, f, anchor)
    xs = site_indices(hr.width, f, anchor)
    return RangeImage(hr.data[np.ix_(ys, xs)])


def lift_sparse(
    lr: RangeImage, f: int, hr_w: int, hr_h: int, anchor: str = "topleft"
):
    """Place LR samples at their lattice sites on an hr_h x hr_w grid.

    Returns the HR-sized range raster and a mask with the lattice sites
    OBSERVED and everything else MISSING (value 0).
    """
    f = _check_factor(f)
    if math.ceil(hr_h / f) != lr.height or math.ceil(hr_w / f) != lr.width:
        raise SizeMismatchError(
            f"LR {lr.width}x{lr.height} is not the factor-{f} decimation of "
            f"HR {hr_w}x{hr_h}"
        )
    values = np.zeros((hr_h, hr_w), dtype=np.float32)
    state = np.full((hr_h, hr_w), MISSING, dtype=np.uint8)
    ys = site_indices(hr_h, f, anchor)
    xs = site_indices(hr_w, f, anchor)
    values[np.ix_(ys, xs)] = lr.data
    state[np.ix_(ys, xs)] = OBSERVED
    return RangeImage(values), VisibilityMask(state)


def sparsity_ratio(mask: VisibilityMask) -> float:
    """Fraction of MISSING pixels."""
    return int(np.count_nonzero(mask.state == MISSING)) / mask.state.size
