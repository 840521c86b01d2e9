"""Range-label assignment by exhaustive minimization of two local costs.

Segments with a trusted plane fit label each missing pixel with the label
minimizing

    C_p = |z - z_pl| + lambda_p * sum_q |z - z_q|

over the candidate label set, where z_pl is the plane value at the pixel
and q runs over its visible neighbors inside the same segment. Small
segments get one label for all their missing pixels, minimizing

    C_s = |z - z_m| + sum_a w_a * |z - z_ma|

where z_m is the median of the segment's visible pixels, z_ma the medians
of visible pixels of adjacent segments, and w_a an inverse-color-distance
contextual weight. Ties always break toward the smaller label, and label
scans run in ascending label order, so assignments are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import EmptyInputError
from .raster import (
    OBSERVED,
    RangeImage,
    SegmentMap,
    VisibilityMask,
    neighbor_offsets,
)
from .planefit import Plane, eval_plane


@dataclass(frozen=True)
class LabelSet:
    """Ascending candidate z values; contains every observed value."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("label set must be a non-empty 1-d array")
        if not (np.diff(vals) > 0).all():
            raise ValueError("label values must be strictly ascending")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CostParams:
    lambda_p: float = 0.5
    lambda_m: float = 1.0
    n_pl: int = 9
    color_eps: float = 1.0

    def __post_init__(self):
        if self.lambda_p < 0 or self.lambda_m < 0:
            raise ValueError("cost weights must be non-negative")
        if self.n_pl < 3:
            raise ValueError(f"n_pl must be >= 3, got {self.n_pl}")
        if self.color_eps <= 0:
            raise ValueError(f"color_eps must be positive, got {self.color_eps}")


def build_label_set(rng_img: RangeImage, mask: VisibilityMask, quant: float) -> LabelSet:
    """Observed values united with a uniform grid of step quant over their span."""
    if quant <= 0:
        raise ValueError(f"quant must be positive, got {quant}")
    observed = rng_img.data[mask.state == OBSERVED]
    if observed.size == 0:
        raise EmptyInputError("label set needs at least one observed pixel")
    lo = float(observed.min())
    hi = float(observed.max())
    steps = int(np.floor((hi - lo) / quant + 1e-9)) + 1
    grid = (lo + quant * np.arange(steps, dtype=np.float64)).astype(np.float32)
    return LabelSet(np.unique(np.concatenate([observed, grid])))


def lower_median(values) -> float:
    """Median that stays in the value set: element (n-1)//2 of the sorted list."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    if vals.size == 0:
        raise ValueError("median of empty set")
    return float(vals[(vals.size - 1) // 2])


def planar_cost(z: float, z_pl: float, neighbor_zs, lambda_p: float) -> float:
    """Plane-fit labeling cost at one pixel for candidate label z."""
    acc = 0.0
    for q in neighbor_zs:
        acc += abs(z - q)
    return abs(z - z_pl) + lambda_p * acc


def context_weight(mean_s, mean_a, lambda_m: float, color_eps: float = 1.0) -> float:
    """Inverse-color-distance coupling between adjacent segments.

    The L1 distance of mean RGB is floored at color_eps so identical means
    do not produce an unbounded weight.
    """
    d = (
        abs(float(mean_s[0]) - float(mean_a[0]))
        + abs(float(mean_s[1]) - float(mean_a[1]))
        + abs(float(mean_s[2]) - float(mean_a[2]))
    )
    return lambda_m / max(color_eps, d)


def median_cost(z: float, z_m: float, adj_medians) -> float:
    """Small-segment labeling cost: adj_medians is a list of (z_ma, w_a)."""
    acc = abs(z - z_m)
    for z_ma, w_a in adj_medians:
        acc += w_a * abs(z - z_ma)
    return acc


@njit(parallel=True, cache=True)
def _argmin_planar(labels, z_pl, nb_vals, nb_ok, lambda_p):
    m = z_pl.shape[0]
    n_labels = labels.shape[0]
    k = nb_vals.shape[1]
    out = np.empty(m, np.int64)
    for i in prange(m):
        best = 0
        best_cost = np.inf
        for li in range(n_labels):
            z = labels[li]
            acc = 0.0
            for j in range(k):
                if nb_ok[i, j]:
                    acc += abs(z - nb_vals[i, j])
            cost = abs(z - z_pl[i]) + lambda_p * acc
            if cost < best_cost:
                best_cost = cost
                best = li
        out[i] = best
    return out


def neighbor_values_at(ys, xs, values, ids, seg_id, visible, connectivity: int = 8):
    """Visible same-segment neighbor values at each (y, x), canonical order.

    Returns (vals, ok) of shape (len(ys), connectivity); slots with ok False
    are absent neighbors.
    """
    offsets = neighbor_offsets(connectivity)
    h, w = values.shape
    m = ys.shape[0]
    vals = np.zeros((m, len(offsets)), dtype=np.float64)
    ok = np.zeros((m, len(offsets)), dtype=np.bool_)
    for j, (dy, dx) in enumerate(offsets):
        ny = ys + dy
        nx = xs + dx
        inb = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        nyc = np.clip(ny, 0, h - 1)
        nxc = np.clip(nx, 0, w - 1)
        use = inb & (ids[nyc, nxc] == seg_id) & visible[nyc, nxc]
        vals[:, j] = np.where(use, values[nyc, nxc].astype(np.float64), 0.0)
        ok[:, j] = use
    return vals, ok


def planar_labels_at(
    ys,
    xs,
    values: np.ndarray,
    ids: np.ndarray,
    seg_id: int,
    visible: np.ndarray,
    plane: Plane,
    labels: LabelSet,
    lambda_p: float,
    connectivity: int = 8,
    labels64: np.ndarray | None = None,
):
    """Plane-fit cost argmin labels for the pixels at (ys, xs) of one segment."""
    if labels64 is None:
        labels64 = labels.values.astype(np.float64)
    z_pl = eval_plane(plane, xs, ys)
    nb_vals, nb_ok = neighbor_values_at(ys, xs, values, ids, seg_id, visible, connectivity)
    idx = _argmin_planar(labels64, z_pl, nb_vals, nb_ok, float(lambda_p))
    return labels.values[idx]


def assign_planar_segment(
    seg_mask: np.ndarray,
    missing: np.ndarray,
    visible: np.ndarray,
    values: np.ndarray,
    plane: Plane,
    labels: LabelSet,
    lambda_p: float,
    connectivity: int = 8,
    seg_ids: np.ndarray | None = None,
    seg_id: int = 1,
):
    """Label every missing pixel of a plane-fitted segment.

    Returns (ys, xs, assigned) in row-major pixel order. Observed and
    previously labeled pixels are never touched.
    """
    ys, xs = np.nonzero(seg_mask & missing)
    if ys.size == 0:
        return ys, xs, np.empty(0, dtype=np.float32)
    if seg_ids is None:
        seg_ids = np.where(seg_mask, seg_id, -1)
    assigned = planar_labels_at(
        ys, xs, values, seg_ids, seg_id, visible, plane, labels, lambda_p, connectivity
    )
    return ys, xs, assigned


def segment_visible_median(ids, visible, values, seg_id) -> float | None:
    vals = values[(ids == seg_id) & visible]
    if vals.size == 0:
        return None
    return lower_median(vals)


def median_label(
    seg_id: int,
    segmap: SegmentMap,
    visible: np.ndarray,
    values: np.ndarray,
    labels: LabelSet,
    params: CostParams,
    medians: np.ndarray | None = None,
) -> float:
    """Single label minimizing the small-segment cost for segment seg_id.

    medians may carry precomputed per-segment visible medians (NaN when a
    segment has no visible pixel); otherwise they are computed on the fly.
    Adjacent segments contribute in ascending id order.
    """

    def visible_median(s: int):
        if medians is not None:
            v = float(medians[s])
            return None if np.isnan(v) else v
        return segment_visible_median(segmap.ids, visible, values, s)

    z_m = visible_median(seg_id)
    if z_m is None:
        raise EmptyInputError(f"segment {seg_id} has no visible pixel")
    lab = labels.values.astype(np.float64)
    cost = np.abs(lab - z_m)
    for a in sorted(segmap.adjacency[seg_id]):
        z_ma = visible_median(a)
        if z_ma is None:
            continue
        w_a = context_weight(
            segmap.mean_rgb[seg_id], segmap.mean_rgb[a], params.lambda_m, params.color_eps
        )
        cost += w_a * np.abs(lab - z_ma)
    return float(labels.values[int(np.argmin(cost))])


def assign_median_segment(
    seg_id: int,
    segmap: SegmentMap,
    missing: np.ndarray,
    visible: np.ndarray,
    values: np.ndarray,
    labels: LabelSet,
    params: CostParams,
    medians: np.ndarray | None = None,
):
    """Label all missing pixels of a small segment with one median-cost label."""
    label = median_label(seg_id, segmap, visible, values, labels, params, medians)
    ys, xs = np.nonzero((segmap.ids == seg_id) & missing)
    return ys, xs, np.full(ys.size, label, dtype=np.float32)
