"""Robust plane fitting over a segment's visible range pixels.

RANSAC with 3-point minimal samples selects a consensus set, then the plane
is refit by least squares on that set. Sampling is driven by a seeded
generator and inputs are canonically pre-sorted, so the result is
bit-identical for any input ordering and any thread count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InsufficientDataError, NoConsensusError

# Minimal samples whose (x, y) triangle area falls below this are redrawn.
DEGENERATE_AREA = 1e-9


@dataclass(frozen=True)
class Plane:
    """z = a*x + b*y + c, with the consensus size that selected it."""

    a: float
    b: float
    c: float
    inlier_count: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and np.isfinite(self.c)):
            raise ValueError("plane coefficients must be finite")
        if self.inlier_count < 3:
            raise ValueError(f"inlier_count must be >= 3, got {self.inlier_count}")


@dataclass(frozen=True)
class RansacParams:
    iters: int = 200
    inlier_tol: float = 1.0
    min_inlier_frac: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
        if self.inlier_tol <= 0:
            raise ValueError(f"inlier_tol must be positive, got {self.inlier_tol}")
        if not 0.0 < self.min_inlier_frac <= 1.0:
            raise ValueError(
                f"min_inlier_frac must be in (0, 1], got {self.min_inlier_frac}"
            )


def eval_plane(plane: Plane, x, y):
    """Plane value a*x + b*y + c; accepts scalars or arrays."""
    return plane.a * np.asarray(x, dtype=np.float64) + plane.b * np.asarray(
        y, dtype=np.float64
    ) + plane.c


def _lsq_plane(x, y, z):
    """Least-squares plane through (x, y, z), via centered normal equations.

    Sums use numpy's fixed pairwise reduction, keeping the result
    independent of BLAS threading.
    """
    xm, ym, zm = x.mean(), y.mean(), z.mean()
    xc, yc, zc = x - xm, y - ym, z - zm
    sxx = float(np.sum(xc * xc))
    syy = float(np.sum(yc * yc))
    sxy = float(np.sum(xc * yc))
    sxz = float(np.sum(xc * zc))
    syz = float(np.sum(yc * zc))
    det = sxx * syy - sxy * sxy
    a = (syy * sxz - sxy * syz) / det
    b = (sxx * syz - sxy * sxz) / det
    c = zm - a * xm - b * ym
    return a, b, c


def ransac_plane(samples, params: RansacParams, details: bool = False):
    """Fit a plane to (x, y, z) samples, robust to outliers.

    Draws `iters` minimal samples (collinear draws are discarded), keeps the
    plane with the largest inlier count, and refits by least squares on its
    inlier set. Raises InsufficientDataError for fewer than 3 samples,
    DegenerateGeometryError if every draw was collinear, and
    NoConsensusError when the best consensus stays below
    max(3, min_inlier_frac * n).
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"samples must be (n, 3) of (x, y, z), got {arr.shape}")
    n = arr.shape[0]
    if n < 3:
        raise InsufficientDataError(f"plane fit needs >= 3 samples, got {n}")
    order = np.lexsort((arr[:, 0], arr[:, 1]))
    arr = arr[order]
    x, y, z = arr[:, 0], arr[:, 1], arr[:, 2]

    rng = np.random.default_rng(params.seed & 0xFFFFFFFFFFFFFFFF)
    idx = rng.integers(0, n, size=(params.iters, 3))
    x1, y1, z1 = x[idx[:, 0]], y[idx[:, 0]], z[idx[:, 0]]
    x2, y2, z2 = x[idx[:, 1]], y[idx[:, 1]], z[idx[:, 1]]
    x3, y3, z3 = x[idx[:, 2]], y[idx[:, 2]], z[idx[:, 2]]
    cross = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    ok = np.abs(cross) >= 2.0 * DEGENERATE_AREA
    if not ok.any():
        raise DegenerateGeometryError(
            f"all {params.iters} minimal samples were collinear"
        )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = ((z2 - z1) * (y3 - y1) - (z3 - z1) * (y2 - y1)) / cross
        b = ((x2 - x1) * (z3 - z1) - (x3 - x1) * (z2 - z1)) / cross
        c = z1 - a * x1 - b * y1
        resid = np.abs(
            z[None, :] - (a[:, None] * x[None, :] + b[:, None] * y[None, :] + c[:, None])
        )
    counts = np.where(ok, (resid <= params.inlier_tol).sum(axis=1), -1)
    best = int(np.argmax(counts))
    best_count = int(counts[best])
    if best_count < max(3.0, params.min_inlier_frac * n):
        raise NoConsensusError(
            f"best consensus {best_count}/{n} below "
            f"max(3, {params.min_inlier_frac} * {n})"
        )
    inliers = resid[best] <= params.inlier_tol
    fa, fb, fc = _lsq_plane(x[inliers], y[inliers], z[inliers])
    plane = Plane(fa, fb, fc, best_count)
    if not details:
        return plane
    return plane, {
        "sample_plane": (float(a[best]), float(b[best]), float(c[best])),
        "inlier_x": x[inliers],
        "inlier_y": y[inliers],
        "inlier_z": z[inliers],
    }
