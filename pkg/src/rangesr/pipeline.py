"""Iterative super-resolution loop.

Each pass segments the color image with slightly larger bandwidths, fits a
plane to every segment with enough visible pixels and labels its missing
pixels by the plane-fit cost; segments with only a few visible pixels get
one median-cost label. Segments with no visible pixel wait for a later
pass, when coarser segmentation subsumes them into labeled ones. Labels
are final once assigned.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateGeometryError, NoConsensusError, SizeMismatchError
from .labeling import (
    CostParams,
    LabelSet,
    build_label_set,
    lower_median,
    median_label,
    planar_labels_at,
)
from .lift import ANCHORS, lift_sparse
from .meanshift import MsParams, segment
from .planefit import RansacParams, ransac_plane
from .raster import (
    LABELED,
    MISSING,
    ColorImage,
    RangeImage,
    SegmentMap,
    VisibilityMask,
    VisibilityPolicy,
    segment_stats,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SrConfig:
    """All tunables of the super-resolution pipeline."""

    factor: int
    ms0: MsParams = field(default_factory=lambda: MsParams(h_s=7.0, h_r=6.5, min_region=20))
    bw_growth: float = 1.25
    max_passes: int = 8
    cost: CostParams = field(default_factory=CostParams)
    ransac: RansacParams = field(default_factory=RansacParams)
    visibility_policy: VisibilityPolicy = VisibilityPolicy.OBSERVED_ONLY
    quant: float = 1.0
    anchor: str = "topleft"
    neighborhood: int = 8

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError(f"factor must be >= 1, got {self.factor}")
        if self.bw_growth <= 1.0:
            raise ValueError(f"bw_growth must be > 1, got {self.bw_growth}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")
        if self.quant <= 0:
            raise ValueError(f"quant must be positive, got {self.quant}")
        if self.anchor not in ANCHORS:
            raise ValueError(f"anchor must be one of {ANCHORS}, got {self.anchor!r}")
        if self.neighborhood not in (4, 8):
            raise ValueError(f"neighborhood must be 4 or 8, got {self.neighborhood}")


@dataclass(frozen=True)
class PassReport:
    """Observability record for one labeling pass."""

    index: int
    h_s: float
    h_r: float
    segments: int
    labeled: int
    missing: int
    fallback: bool = False

    def line(self) -> str:
        tail = " fallback" if self.fallback else ""
        return (
            f"pass={self.index} h_s={self.h_s:.4f} h_r={self.h_r:.4f} "
            f"segments={self.segments} labeled={self.labeled} missing={self.missing}{tail}"
        )


def bandwidth_schedule(ms0: MsParams, growth: float, k: int) -> MsParams:
    """Bandwidths for pass k: both kernels scaled by growth**k."""
    if k < 0:
        raise ValueError(f"pass index must be >= 0, got {k}")
    scale = growth**k
    return replace(
        ms0,
        h_s=ms0.h_s * scale,
        h_r=ms0.h_r * scale,
        min_region=math.ceil(ms0.min_region * scale),
    )


def default_config(factor: int, seed: int = 0) -> SrConfig:
    return SrConfig(factor=factor, ransac=RansacParams(seed=seed))


def _pass_medians(n_segments, starts, values_sorted):
    medians = np.full(n_segments, np.nan)
    for s in range(n_segments):
        lo, hi = starts[s], starts[s + 1]
        if hi > lo:
            medians[s] = lower_median(values_sorted[lo:hi])
    return medians


def _group_by_segment(ids, mask2d):
    """Pixels of mask2d grouped by segment id, row-major within a segment."""
    ys, xs = np.nonzero(mask2d)
    sid = ids[ys, xs]
    order = np.argsort(sid, kind="stable")
    ys, xs, sid = ys[order], xs[order], sid[order]
    starts = np.searchsorted(sid, np.arange(int(ids.max()) + 2))
    return ys, xs, starts


def _run_pass(values, state, color, segmap: SegmentMap, cfg: SrConfig, labels: LabelSet):
    """Label what this pass can; returns (ys, xs, assigned)."""
    ids = segmap.ids
    n_seg = segmap.n_segments
    visible2d = VisibilityMask(state).visible(cfg.visibility_policy)
    missing2d = state == MISSING

    vys, vxs, vstarts = _group_by_segment(ids, visible2d)
    vvals = values[vys, vxs].astype(np.float64)
    medians = _pass_medians(n_seg, vstarts, vvals)
    mys, mxs, mstarts = _group_by_segment(ids, missing2d)

    labels64 = labels.values.astype(np.float64)
    n_a = segmap.visible_count
    out_ys, out_xs, out_vals = [], [], []
    for s in range(n_seg):
        mlo, mhi = mstarts[s], mstarts[s + 1]
        if mhi == mlo or n_a[s] == 0:
            continue
        sys_, sxs_ = mys[mlo:mhi], mxs[mlo:mhi]
        assigned = None
        if n_a[s] >= cfg.cost.n_pl:
            vlo, vhi = vstarts[s], vstarts[s + 1]
            samples = np.stack(
                [vxs[vlo:vhi].astype(np.float64), vys[vlo:vhi].astype(np.float64), vvals[vlo:vhi]],
                axis=1,
            )
            params = replace(cfg.ransac, seed=cfg.ransac.seed ^ s)
            try:
                plane = ransac_plane(samples, params)
            except (DegenerateGeometryError, NoConsensusError):
                plane = None
            if plane is not None:
                assigned = planar_labels_at(
                    sys_, sxs_, values, ids, s, visible2d, plane, labels,
                    cfg.cost.lambda_p, cfg.neighborhood, labels64=labels64,
                )
        if assigned is None:
            label = median_label(s, segmap, visible2d, values, labels, cfg.cost, medians)
            assigned = np.full(sys_.size, label, dtype=np.float32)
        out_ys.append(sys_)
        out_xs.append(sxs_)
        out_vals.append(assigned)
    if not out_ys:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0, dtype=np.float32)
    return np.concatenate(out_ys), np.concatenate(out_xs), np.concatenate(out_vals)


def _nearest_labeled_fallback(values, state):
    """Give still-missing pixels the value of the nearest non-missing pixel."""
    from scipy import ndimage

    missing2d = state == MISSING
    iy, ix = ndimage.distance_transform_edt(
        missing2d, return_distances=False, return_indices=True
    )
    values[missing2d] = values[iy[missing2d], ix[missing2d]]
    state[missing2d] = LABELED
    return int(missing2d.sum())


def super_resolve(lr: RangeImage, color: ColorImage, cfg: SrConfig):
    """Reconstruct a dense HR range image from an LR one plus its color guide.

    The HR grid is the color image's grid; the color image is assumed
    registered to it. Returns the dense range image and one PassReport per
    labeling pass. Observed pixels pass through bit-identically.
    """
    f = cfg.factor
    hr_h, hr_w = color.height, color.width
    if math.ceil(hr_h / f) != lr.height or math.ceil(hr_w / f) != lr.width:
        raise SizeMismatchError(
            f"color image {hr_w}x{hr_h} is not {f}x the LR range image "
            f"{lr.width}x{lr.height}"
        )
    hr, mask = lift_sparse(lr, f, hr_w, hr_h, cfg.anchor)
    values = hr.data.copy()
    state = mask.state.copy()
    reports: list[PassReport] = []
    missing = int(np.count_nonzero(state == MISSING))
    if missing == 0:
        return RangeImage(values), reports

    labels = build_label_set(hr, mask, cfg.quant)
    for k in range(cfg.max_passes):
        ms_k = bandwidth_schedule(cfg.ms0, cfg.bw_growth, k)
        raw = segment(color, ms_k)
        segmap = segment_stats(raw.ids, color, VisibilityMask(state), cfg.visibility_policy)
        ys, xs, assigned = _run_pass(values, state, color, segmap, cfg, labels)
        values[ys, xs] = assigned
        state[ys, xs] = LABELED
        missing -= ys.size
        reports.append(
            PassReport(
                index=k,
                h_s=ms_k.h_s,
                h_r=ms_k.h_r,
                segments=segmap.n_segments,
                labeled=int(ys.size),
                missing=missing,
            )
        )
        logger.info("%s", reports[-1].line())
        if missing == 0:
            break

    if len(reports) > 5:
        logger.warning(
            "complete labeling needed %d passes (typical is 4-5)", len(reports)
        )
    if missing > 0:
        last = reports[-1]
        filled = _nearest_labeled_fallback(values, state)
        reports.append(
            PassReport(
                index=len(reports),
                h_s=last.h_s,
                h_r=last.h_r,
                segments=0,
                labeled=filled,
                missing=0,
                fallback=True,
            )
        )
        logger.warning(
            "%d pixels still missing after %d passes; applied nearest-labeled fallback",
            filled,
            cfg.max_passes,
        )
    return RangeImage(values), reports


# --- flat key=value view of SrConfig (config files, echo files, hashing) ---

_GROUP_ATTR = {"ms": "ms0", "cost": "cost", "ransac": "ransac"}

_FIELDS = {
    "factor": int,
    "quant": float,
    "anchor": str,
    "neighborhood": int,
    "visibility_policy": VisibilityPolicy,
    "bw_growth": float,
    "max_passes": int,
    "ms.h_s": float,
    "ms.h_r": float,
    "ms.min_region": int,
    "ms.max_iters": int,
    "ms.converge_tol": float,
    "ms.color_space": str,
    "cost.lambda_p": float,
    "cost.lambda_m": float,
    "cost.n_pl": int,
    "cost.color_eps": float,
    "ransac.iters": int,
    "ransac.inlier_tol": float,
    "ransac.min_inlier_frac": float,
    "ransac.seed": int,
}


def _get_key(cfg: SrConfig, key: str):
    if "." in key:
        group, name = key.split(".", 1)
        return getattr(getattr(cfg, _GROUP_ATTR[group]), name)
    return getattr(cfg, key)


def _format_value(value) -> str:
    if isinstance(value, VisibilityPolicy):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_items(cfg: SrConfig) -> list[tuple[str, str]]:
    """All effective parameters as (key, value-string) pairs, fixed order."""
    return [(key, _format_value(_get_key(cfg, key))) for key in _FIELDS]


def apply_overrides(cfg: SrConfig, overrides: dict[str, str]) -> SrConfig:
    """Apply dotted key=value overrides; unknown keys raise ValueError."""
    groups: dict[str, dict] = {}
    top: dict = {}
    for key, raw in overrides.items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        typ = _FIELDS[key]
        try:
            value = typ(raw) if typ is not VisibilityPolicy else VisibilityPolicy(raw)
        except ValueError:
            raise ValueError(f"bad value {raw!r} for config key {key!r}") from None
        if "." in key:
            group, name = key.split(".", 1)
            groups.setdefault(group, {})[name] = value
        else:
            top[key] = value
    for group, kwargs in groups.items():
        attr = _GROUP_ATTR[group]
        top[attr] = replace(getattr(cfg, attr), **kwargs)
    return replace(cfg, **top)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key=value lines; blank lines and # comments are ignored."""
    out: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {ln}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_text(cfg: SrConfig) -> str:
    return "\n".join(f"{k}={v}" for k, v in config_items(cfg)) + "\n"


def config_hash(cfg: SrConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode("ascii")).hexdigest()[:12]
