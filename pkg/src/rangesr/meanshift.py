"""Mean-shift color segmentation with flat spatial/color kernels.

A pixel's feature is (x/h_s, y/h_s, L/h_r, u/h_r, v/h_r): mode seeking
averages over the pixels within both the spatial and the color ball of the
current center, which is exact for the flat kernel when restricted to a
(2*ceil(h_s)+1)^2 spatial window. Modes are fused in canonical row-major
order, clusters are split into 4-connected components, and regions below
min_region are merged into their closest-color neighbor.

Mode seeking is embarrassingly parallel per pixel; everything downstream is
sequential in canonical order, so output is bit-identical for any thread
count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .raster import ColorImage, SegmentMap, adjacency_pairs, segment_stats

# D65 reference white (sRGB).
_XN, _YN, _ZN = 0.95047, 1.0, 1.08883
_UN = 4.0 * _XN / (_XN + 15.0 * _YN + 3.0 * _ZN)
_VN = 9.0 * _YN / (_XN + 15.0 * _YN + 3.0 * _ZN)
_EPS_CUBE = (6.0 / 29.0) ** 3
_KAPPA = (29.0 / 3.0) ** 3


def rgb_to_luv(rgb: np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB (..., 3) to CIE L*u*v* (D65), float64."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    x = lin[..., 0] * 0.4124564 + lin[..., 1] * 0.3575761 + lin[..., 2] * 0.1804375
    y = lin[..., 0] * 0.2126729 + lin[..., 1] * 0.7151522 + lin[..., 2] * 0.0721750
    z = lin[..., 0] * 0.0193339 + lin[..., 1] * 0.1191920 + lin[..., 2] * 0.9503041
    yr = y / _YN
    lum = np.where(yr > _EPS_CUBE, 116.0 * np.cbrt(yr) - 16.0, _KAPPA * yr)
    denom = x + 15.0 * y + 3.0 * z
    safe = denom > 0
    up = np.divide(4.0 * x, denom, out=np.full_like(denom, _UN), where=safe)
    vp = np.divide(9.0 * y, denom, out=np.full_like(denom, _VN), where=safe)
    return np.stack([lum, 13.0 * lum * (up - _UN), 13.0 * lum * (vp - _VN)], axis=-1)


@dataclass(frozen=True)
class MsParams:
    """Mean-shift tunables.

    h_s/h_r are the spatial (pixels) and color (Luv units) bandwidths that
    set the coarseness of the segmentation; larger values give coarser
    segments.
    """

    h_s: float
    h_r: float
    min_region: int = 20
    max_iters: int = 100
    converge_tol: float = 0.01
    color_space: str = "luv"

    def __post_init__(self):
        if self.h_s <= 0 or self.h_r <= 0:
            raise ValueError(f"bandwidths must be positive, got ({self.h_s}, {self.h_r})")
        if self.min_region < 1:
            raise ValueError(f"min_region must be >= 1, got {self.min_region}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.converge_tol <= 0:
            raise ValueError(f"converge_tol must be positive, got {self.converge_tol}")
        if self.color_space not in ("luv", "rgb"):
            raise ValueError(f"color_space must be 'luv' or 'rgb', got {self.color_space!r}")


@njit(cache=True)
def _seek_from(feat, h_s, h_r, y0, x0, tol, max_iters):
    h, w = feat.shape[0], feat.shape[1]
    hs2 = h_s * h_s
    hr2 = h_r * h_r
    cy = float(y0)
    cx = float(x0)
    c0 = feat[y0, x0, 0]
    c1 = feat[y0, x0, 1]
    c2 = feat[y0, x0, 2]
    tol2 = tol * tol
    for _ in range(max_iters):
        ylo = int(np.ceil(cy - h_s))
        yhi = int(np.floor(cy + h_s))
        xlo = int(np.ceil(cx - h_s))
        xhi = int(np.floor(cx + h_s))
        if ylo < 0:
            ylo = 0
        if xlo < 0:
            xlo = 0
        if yhi > h - 1:
            yhi = h - 1
        if xhi > w - 1:
            xhi = w - 1
        sy = 0.0
        sx = 0.0
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        cnt = 0
        for yy in range(ylo, yhi + 1):
            dy = yy - cy
            dy2 = dy * dy
            for xx in range(xlo, xhi + 1):
                dx = xx - cx
                if dy2 + dx * dx > hs2:
                    continue
                d0 = feat[yy, xx, 0] - c0
                d1 = feat[yy, xx, 1] - c1
                d2 = feat[yy, xx, 2] - c2
                if d0 * d0 + d1 * d1 + d2 * d2 > hr2:
                    continue
                sy += yy
                sx += xx
                s0 += feat[yy, xx, 0]
                s1 += feat[yy, xx, 1]
                s2 += feat[yy, xx, 2]
                cnt += 1
        if cnt == 0:
            break
        ny = sy / cnt
        nx = sx / cnt
        n0 = s0 / cnt
        n1 = s1 / cnt
        n2 = s2 / cnt
        step2 = ((ny - cy) ** 2 + (nx - cx) ** 2) / hs2 + (
            (n0 - c0) ** 2 + (n1 - c1) ** 2 + (n2 - c2) ** 2
        ) / hr2
        cy, cx, c0, c1, c2 = ny, nx, n0, n1, n2
        if step2 < tol2:
            break
    return cy, cx, c0, c1, c2


@njit(parallel=True, cache=True)
def _seek_all(feat, h_s, h_r, tol, max_iters):
    h, w = feat.shape[0], feat.shape[1]
    modes = np.empty((h * w, 5), np.float64)
    for i in prange(h * w):
        y = i // w
        x = i - y * w
        cy, cx, c0, c1, c2 = _seek_from(feat, h_s, h_r, y, x, tol, max_iters)
        modes[i, 0] = cy
        modes[i, 1] = cx
        modes[i, 2] = c0
        modes[i, 3] = c1
        modes[i, 4] = c2
    return modes


@njit(cache=True)
def _fuse(modes, h, w, h_s, h_r):
    # Transitive merge: modes within h_s spatially AND h_r in color belong
    # to one cluster. A spatial grid of cell size h_s limits pair checks;
    # every qualifying pair falls in the same or an adjacent cell.
    n = modes.shape[0]
    hs2 = h_s * h_s
    hr2 = h_r * h_r
    gw = int(w / h_s) + 2
    gh = int(h / h_s) + 2
    ncell = gh * gw
    cell = np.empty(n, np.int64)
    start = np.zeros(ncell + 1, np.int64)
    for i in range(n):
        gy = int(modes[i, 0] / h_s)
        gx = int(modes[i, 1] / h_s)
        if gy > gh - 1:
            gy = gh - 1
        if gx > gw - 1:
            gx = gw - 1
        c = gy * gw + gx
        cell[i] = c
        start[c + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]
    order = np.empty(n, np.int64)
    fill = start[:ncell].copy()
    for i in range(n):
        c = cell[i]
        order[fill[c]] = i
        fill[c] += 1

    parent = np.empty(n, np.int64)
    for i in range(n):
        parent[i] = i
    # Visit each cell pair once: own cell plus E, SW, S, SE neighbors.
    for gy in range(gh):
        for gx in range(gw):
            c0 = gy * gw + gx
            if start[c0 + 1] == start[c0]:
                continue
            for k in range(5):
                if k == 0:
                    ny, nx = gy, gx
                elif k == 1:
                    ny, nx = gy, gx + 1
                elif k == 2:
                    ny, nx = gy + 1, gx - 1
                elif k == 3:
                    ny, nx = gy + 1, gx
                else:
                    ny, nx = gy + 1, gx + 1
                if ny >= gh or nx < 0 or nx >= gw:
                    continue
                c1 = ny * gw + nx
                for ii in range(start[c0], start[c0 + 1]):
                    i = order[ii]
                    jj0 = ii + 1 if c1 == c0 else start[c1]
                    for jj in range(jj0, start[c1 + 1]):
                        j = order[jj]
                        ds = (modes[i, 0] - modes[j, 0]) ** 2 + (modes[i, 1] - modes[j, 1]) ** 2
                        if ds > hs2:
                            continue
                        dc = (
                            (modes[i, 2] - modes[j, 2]) ** 2
                            + (modes[i, 3] - modes[j, 3]) ** 2
                            + (modes[i, 4] - modes[j, 4]) ** 2
                        )
                        if dc > hr2:
                            continue
                        a = i
                        while parent[a] != a:
                            parent[a] = parent[parent[a]]
                            a = parent[a]
                        b = j
                        while parent[b] != b:
                            parent[b] = parent[parent[b]]
                            b = parent[b]
                        if a != b:
                            if a < b:
                                parent[b] = a
                            else:
                                parent[a] = b

    labels = np.empty(n, np.int64)
    remap = np.full(n, -1, np.int64)
    count = 0
    for i in range(n):
        a = i
        while parent[a] != a:
            a = parent[a]
        if remap[a] < 0:
            remap[a] = count
            count += 1
        labels[i] = remap[a]
    return labels


@njit(cache=True)
def _components4(lab):
    h, w = lab.shape
    n = h * w
    parent = np.empty(n, np.int64)
    for i in range(n):
        parent[i] = i
    for y in range(h):
        for x in range(w):
            i = y * w + x
            v = lab[y, x]
            if x > 0 and lab[y, x - 1] == v:
                a = i
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                b = i - 1
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
            if y > 0 and lab[y - 1, x] == v:
                a = i
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                b = i - w
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
    out = np.empty((h, w), np.int32)
    remap = np.full(n, -1, np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            a = y * w + x
            while parent[a] != a:
                a = parent[a]
            if remap[a] < 0:
                remap[a] = count
                count += 1
            out[y, x] = remap[a]
    return out, count


def mode_seek(feat: np.ndarray, params: MsParams, y: int, x: int) -> np.ndarray:
    """Converged mode (y, x, c0, c1, c2) for the pixel at (y, x)."""
    feat = np.ascontiguousarray(feat, dtype=np.float64)
    out = _seek_from(
        feat, float(params.h_s), float(params.h_r), int(y), int(x),
        float(params.converge_tol), int(params.max_iters),
    )
    return np.array(out, dtype=np.float64)


def fuse_modes(modes: np.ndarray, shape, params: MsParams) -> np.ndarray:
    """Cluster converged modes: any two modes within h_s spatially AND
    within h_r in color are merged, transitively.

    Cluster ids are canonical: row-major order of first occurrence. The
    merge relation is symmetric, so the partition does not depend on any
    processing order.
    """
    h, w = shape
    modes = np.ascontiguousarray(modes, dtype=np.float64)
    return _fuse(modes, int(h), int(w), float(params.h_s), float(params.h_r))


def connected_components4(labels: np.ndarray):
    """Split a label raster into 4-connected components, ids in row-major
    order of first occurrence."""
    out, count = _components4(np.ascontiguousarray(labels, dtype=np.int64))
    return out, int(count)


def _adjacency_sets(ids: np.ndarray, n: int):
    adj = [set() for _ in range(n)]
    for s, a in adjacency_pairs(ids):
        adj[s].add(int(a))
    return adj


def enforce_min_region(ids: np.ndarray, feat: np.ndarray, min_region: int) -> np.ndarray:
    """Merge regions smaller than min_region into the adjacent region with
    the closest mean color, repeating to fixpoint.

    Regions with no neighbor (single-region images) are left alone. The
    scan order is ascending region id, so the result is deterministic.
    """
    ids = np.ascontiguousarray(ids, dtype=np.int32)
    n = int(ids.max()) + 1
    if min_region <= 1 or n == 1:
        return ids
    flat = ids.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.int64)
    sums = np.zeros((n, 3), dtype=np.float64)
    for c in range(3):
        sums[:, c] = np.bincount(flat, weights=feat[..., c].ravel(), minlength=n)
    adj = _adjacency_sets(ids, n)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    changed = True
    while changed:
        changed = False
        for r in range(n):
            if find(r) != r or counts[r] >= min_region:
                continue
            roots = {find(a) for a in adj[r]}
            roots.discard(r)
            if not roots:
                continue
            mean_r = sums[r] / counts[r]
            best = -1
            best_d = np.inf
            for a in sorted(roots):
                diff = mean_r - sums[a] / counts[a]
                d = float(diff @ diff)
                if d < best_d:
                    best_d = d
                    best = a
            parent[r] = best
            counts[best] += counts[r]
            sums[best] += sums[r]
            adj[best] |= adj[r]
            changed = True

    root = np.array([find(i) for i in range(n)], dtype=np.int64)
    rooted = root[flat]
    _, first = np.unique(rooted, return_index=True)
    order = rooted[np.sort(first)]
    remap = np.full(n, -1, dtype=np.int32)
    remap[order] = np.arange(order.size, dtype=np.int32)
    return remap[rooted].reshape(ids.shape)


def features(img: ColorImage, params: MsParams) -> np.ndarray:
    """Color feature raster used for mode seeking (Luv by default)."""
    if params.color_space == "luv":
        return np.ascontiguousarray(rgb_to_luv(img.data))
    return np.ascontiguousarray(img.data.astype(np.float64))


def segment(img: ColorImage, params: MsParams) -> SegmentMap:
    """Mean-shift segmentation of a color image.

    Every output segment is 4-connected and (where merging is possible) at
    least min_region pixels; ids are contiguous from 0 in row-major order.
    Deterministic for fixed inputs, regardless of thread count.
    """
    feat = features(img, params)
    h, w = img.height, img.width
    modes = _seek_all(
        feat, float(params.h_s), float(params.h_r),
        float(params.converge_tol), int(params.max_iters),
    )
    clusters = _fuse(modes, h, w, float(params.h_s), float(params.h_r))
    comp, _ = _components4(clusters.reshape(h, w))
    ids = enforce_min_region(comp, feat, params.min_region)
    return segment_stats(ids, img)
