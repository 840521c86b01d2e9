"""Deterministic synthetic scenes with exact piecewise-planar ground truth.

These stand in for registered range/color pairs when no captured dataset is
at hand: every region has an analytic plane for its range values and a
distinct color, and depth discontinuities coincide with color edges.

Run as a module to write a demo pair for the CLI:
    python -m rangesr.synthetic out_dir/ [--size 256]
"""
from __future__ import annotations

import numpy as np

from .raster import ColorImage, RangeImage

# Plane coefficients are multiples of 1/4 so the truth values are exact
# multiples of 0.25 (exactly representable in float32). The global maximum
# sits at pixel (0, 0) and the global minimum fills the flat quadrant, so
# both extremes land on every decimation lattice and the whole value range
# stays inside the observed span (labels never extrapolate).
_QUADRANT_PLANES = (
    (-0.25, -0.25, 240.0),
    (0.25, 0.0, 90.0),
    (-0.25, 0.25, 150.0),
    (0.0, 0.0, 40.0),
)
_QUADRANT_COLORS = (
    (200, 60, 50),
    (60, 180, 70),
    (70, 90, 200),
    (220, 200, 60),
)


def quadrant_scene(size: int = 256):
    """Four color-distinct planar regions in a size x size frame.

    Returns (truth, color, region_ids). Truth values are exact multiples of
    0.25; region boundaries coincide with the color edges.
    """
    if size < 8 or size > 320 or size % 2:
        raise ValueError(f"size must be an even integer in [8, 320], got {size}")
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    half = size // 2
    region = (ys >= half).astype(np.int64) * 2 + (xs >= half).astype(np.int64)
    truth = np.zeros((size, size), dtype=np.float64)
    color = np.zeros((size, size, 3), dtype=np.uint8)
    for r, ((a, b, c), rgb) in enumerate(zip(_QUADRANT_PLANES, _QUADRANT_COLORS)):
        m = region == r
        truth[m] = a * xs[m] + b * ys[m] + c
        color[m] = rgb
    return RangeImage(truth.astype(np.float32)), ColorImage(color), region


def _palette(n: int, rng: np.random.Generator) -> np.ndarray:
    hue = (np.arange(n) * 0.61803398875 + rng.random()) % 1.0
    sat = 0.55 + 0.3 * rng.random(n)
    val = 0.55 + 0.4 * rng.random(n)
    h6 = hue * 6.0
    k = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = val * (1 - sat)
    q = val * (1 - sat * f)
    t = val * (1 - sat * (1 - f))
    comps = [
        np.stack([val, t, p], 1),
        np.stack([q, val, p], 1),
        np.stack([p, val, t], 1),
        np.stack([p, q, val], 1),
        np.stack([t, p, val], 1),
        np.stack([val, p, q], 1),
    ]
    rgb = np.select([(k == i)[:, None] for i in range(6)], comps)
    return np.clip(np.rint(rgb * 255), 16, 255).astype(np.uint8)


def cluttered_scene(width: int = 448, height: int = 384, n_objects: int = 12, seed: int = 7):
    """A benchmark-style scene: slanted background plus planar objects.

    Objects (rectangles and ellipses) occlude each other, each with its own
    gently sloped plane and distinct textured color. Truth values are
    integer levels, like captured disparity maps. Returns (truth, color).
    """
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    truth = 0.05 * xs + 0.03 * ys + 30.0
    colors = _palette(n_objects + 1, rng)
    color = np.empty((height, width, 3), dtype=np.float64)
    color[:] = colors[0]
    region = np.zeros((height, width), dtype=np.int64)

    # Paint near objects last so they occlude farther ones.
    base_depths = np.sort(rng.uniform(60.0, 210.0, n_objects))
    for i in range(n_objects):
        cx = rng.uniform(0.12, 0.88) * width
        cy = rng.uniform(0.12, 0.88) * height
        rx = rng.uniform(0.06, 0.16) * width
        ry = rng.uniform(0.06, 0.16) * height
        a = rng.uniform(-0.3, 0.3)
        b = rng.uniform(-0.3, 0.3)
        if rng.random() < 0.5:
            mask = (np.abs(xs - cx) <= rx) & (np.abs(ys - cy) <= ry)
        else:
            mask = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
        plane = base_depths[i] + a * (xs - cx) + b * (ys - cy)
        truth[mask] = plane[mask]
        color[mask] = colors[i + 1]
        region[mask] = i + 1

    # Shading gradients per region: they over-segment at small color
    # bandwidths, so completion genuinely needs several growing-bandwidth
    # passes, the way captured scenes do.
    for i in range(n_objects + 1):
        mask = region == i
        theta = rng.uniform(0.0, np.pi)
        period = rng.uniform(35.0, 90.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = np.sin(2.0 * np.pi * (xs * np.cos(theta) + ys * np.sin(theta)) / period + phase)
        color[mask] *= (0.82 + 0.18 * wave[mask])[:, None]

    texture = rng.normal(0.0, 1.5, size=color.shape)
    color = np.clip(np.rint(color + texture), 0, 255).astype(np.uint8)
    truth = np.clip(np.rint(truth), 5.0, 250.0).astype(np.float32)
    return RangeImage(truth), ColorImage(color)


def _main(argv=None) -> int:
    import argparse
    from pathlib import Path

    from .imgio import write_pgm, write_png

    parser = argparse.ArgumentParser(description="write a demo range/color pair")
    parser.add_argument("out_dir")
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--kind", choices=("quadrants", "clutter"), default="clutter")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "quadrants":
        truth, color, _ = quadrant_scene(args.size)
    else:
        truth, color = cluttered_scene(args.size, args.size, seed=args.seed)
    write_pgm(out / "truth.pgm", truth, maxval=255)
    write_png(out / "color.png", color)
    print(f"wrote {out / 'truth.pgm'} and {out / 'color.png'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(_main())
