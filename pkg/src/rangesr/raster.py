"""Core raster types: color/range images, visibility masks, segment maps.

All types are immutable after construction (the numpy payloads are marked
read-only), so instances can be shared freely across threads.

Pixel coordinates are (y, x) row-major throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import SizeMismatchError

# Visibility states of an HR-grid pixel.
MISSING = 0   # no trusted data yet; the stored value is a placeholder
OBSERVED = 1  # came from the sparse lift of the LR observation
LABELED = 2   # assigned by the labeling stage in an earlier pass


class VisibilityPolicy(Enum):
    """Which mask states count as trusted ("visible") range data."""

    OBSERVED_ONLY = "observed_only"
    OBSERVED_AND_LABELED = "observed_and_labeled"


# Canonical neighbor offsets, row-major. The 8-connected set is the default
# reading of "second-order neighborhood"; 4-connected is kept for ablation.
NEIGHBOR_OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
NEIGHBOR_OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))


def neighbor_offsets(connectivity: int):
    if connectivity == 8:
        return NEIGHBOR_OFFSETS_8
    if connectivity == 4:
        return NEIGHBOR_OFFSETS_4
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def _frozen(data, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=dtype)
    if arr is data or arr.base is not None:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ColorImage:
    """HR guidance raster, 8-bit RGB, shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.data, np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"color image must have shape (h, w, 3), got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RangeImage:
    """Range raster: non-negative finite values, stored as float32.

    Values are unitless range/disparity levels; files are quantized only
    on write.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.data, np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"range image must have shape (h, w), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("range values must be finite")
        if (arr < 0).any():
            raise ValueError("range values must be non-negative")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class VisibilityMask:
    """Per-pixel state raster: MISSING, OBSERVED, or LABELED."""

    state: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.state, np.uint8)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must have shape (h, w), got {arr.shape}")
        if (arr > LABELED).any():
            raise ValueError("mask states must be MISSING, OBSERVED, or LABELED")
        object.__setattr__(self, "state", arr)

    @property
    def height(self) -> int:
        return self.state.shape[0]

    @property
    def width(self) -> int:
        return self.state.shape[1]

    def visible(self, policy: VisibilityPolicy = VisibilityPolicy.OBSERVED_ONLY) -> np.ndarray:
        """Boolean raster of pixels that count as trusted data under policy."""
        if policy is VisibilityPolicy.OBSERVED_ONLY:
            return self.state == OBSERVED
        return self.state != MISSING


@dataclass(frozen=True)
class SegmentMap:
    """Dense segment ids plus per-segment statistics.

    ids are contiguous integers 0..S-1. visible_count is n_a under whatever
    visibility policy the stats were computed with. mean_rgb is taken over
    all pixels of the segment (it is a pure color quantity). adjacency pairs
    segments sharing a 4-connected boundary and is symmetric.
    """

    ids: np.ndarray
    pixel_count: np.ndarray
    visible_count: np.ndarray
    mean_rgb: np.ndarray
    adjacency: tuple

    def __post_init__(self):
        ids = _frozen(self.ids, np.int32)
        if ids.ndim != 2:
            raise ValueError("segment ids must be a 2-d raster")
        counts = _frozen(self.pixel_count, np.int64)
        vis = _frozen(self.visible_count, np.int64)
        rgb = _frozen(self.mean_rgb, np.float64)
        n = counts.shape[0]
        if ids.min() < 0 or ids.max() + 1 != n:
            raise ValueError("segment ids must be contiguous 0..S-1")
        if (counts <= 0).any():
            raise ValueError("every segment id must cover at least one pixel")
        if counts.sum() != ids.size:
            raise ValueError("segment pixel counts must sum to the raster size")
        if (vis > counts).any() or (vis < 0).any():
            raise ValueError("visible counts must lie in [0, pixel_count]")
        if rgb.shape != (n, 3):
            raise ValueError("mean_rgb must have shape (S, 3)")
        adj = tuple(tuple(a) for a in self.adjacency)
        if len(adj) != n:
            raise ValueError("adjacency must have one entry per segment")
        for s, neigh in enumerate(adj):
            for a in neigh:
                if s not in adj[a]:
                    raise ValueError(f"adjacency is not symmetric for segments {s} and {a}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "pixel_count", counts)
        object.__setattr__(self, "visible_count", vis)
        object.__setattr__(self, "mean_rgb", rgb)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n_segments(self) -> int:
        return self.pixel_count.shape[0]

    @property
    def height(self) -> int:
        return self.ids.shape[0]

    @property
    def width(self) -> int:
        return self.ids.shape[1]


def neighbors2(p, w: int, h: int, connectivity: int = 8):
    """In-bounds neighbors of pixel p = (y, x), in row-major order.

    Returns the up-to-8 adjacent pixels (including diagonals) by default.
    """
    y, x = p
    if not (0 <= y < h and 0 <= x < w):
        raise ValueError(f"pixel {p} lies outside a {w}x{h} image")
    out = []
    for dy, dx in neighbor_offsets(connectivity):
        ny, nx = y + dy, x + dx
        if 0 <= ny < h and 0 <= nx < w:
            out.append((ny, nx))
    return out


def adjacency_pairs(ids: np.ndarray) -> np.ndarray:
    """Unique ordered (s, a) pairs of segment ids sharing a 4-connected edge.

    Diagonal contact does not make segments adjacent.
    """
    left, right = ids[:, :-1].ravel(), ids[:, 1:].ravel()
    up, down = ids[:-1, :].ravel(), ids[1:, :].ravel()
    hmask = left != right
    vmask = up != down
    a = np.concatenate([left[hmask], up[vmask]])
    b = np.concatenate([right[hmask], down[vmask]])
    if a.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate([np.stack([a, b], axis=1), np.stack([b, a], axis=1)])
    return np.unique(pairs.astype(np.int64), axis=0)


def segment_stats(
    ids: np.ndarray,
    color: ColorImage,
    mask: VisibilityMask | None = None,
    policy: VisibilityPolicy = VisibilityPolicy.OBSERVED_ONLY,
) -> SegmentMap:
    """Build a SegmentMap with per-segment counts, mean RGB, and adjacency.

    Accumulation runs in fixed row-major order (np.bincount), so results are
    bit-identical regardless of any outer parallelism.
    """
    ids = np.ascontiguousarray(ids, dtype=np.int32)
    if ids.shape != (color.height, color.width):
        raise SizeMismatchError(
            f"segment ids {ids.shape} do not match color image "
            f"{(color.height, color.width)}"
        )
    if mask is not None and (mask.height, mask.width) != (color.height, color.width):
        raise SizeMismatchError(
            f"mask {(mask.height, mask.width)} does not match color image "
            f"{(color.height, color.width)}"
        )
    flat = ids.ravel()
    n = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=n).astype(np.int64)
    if mask is None:
        visible = np.zeros(n, dtype=np.int64)
    else:
        vis = mask.visible(policy).ravel()
        visible = np.bincount(flat[vis], minlength=n).astype(np.int64)
    sums = np.empty((n, 3), dtype=np.float64)
    for c in range(3):
        sums[:, c] = np.bincount(
            flat, weights=color.data[:, :, c].ravel().astype(np.float64), minlength=n
        )
    mean_rgb = sums / counts[:, None]

    pairs = adjacency_pairs(ids)
    adjacency = [[] for _ in range(n)]
    for s, a in pairs:
        adjacency[s].append(int(a))
    return SegmentMap(
        ids=ids,
        pixel_count=counts,
        visible_count=visible,
        mean_rgb=mean_rgb,
        adjacency=tuple(tuple(a) for a in adjacency),
    )
