"""Image file I/O.

Range rasters travel as PGM (P2/P5, maxval 255 or 65535); color rasters as
PPM (P6) or 8-bit RGB PNG. Range data is float32 in memory and quantized
only on write; written PGM is P5 with maxval 65535 unless asked otherwise.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError
from .raster import ColorImage, RangeImage

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _next_token(buf: bytes, pos: int, field: str):
    """Scan the next whitespace-delimited header token, skipping comments."""
    n = len(buf)
    while pos < n:
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError(f"unexpected end of data while reading {field}")
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WHITESPACE and buf[pos : pos + 1] != b"#":
        pos += 1
    return buf[start:pos], pos


def _header_int(buf: bytes, pos: int, field: str, lo: int, hi: int):
    token, pos = _next_token(buf, pos, field)
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"malformed {field} {token!r}") from None
    if not lo <= value <= hi:
        raise FormatError(f"{field} must be in [{lo}, {hi}], got {value}")
    return value, pos


def _parse_pnm_header(buf: bytes):
    if len(buf) < 2:
        raise FormatError("unexpected end of data while reading magic")
    magic = buf[:2]
    if magic not in (b"P2", b"P5", b"P6"):
        raise FormatError(f"unsupported magic {magic!r} (expected P2, P5, or P6)")
    width, pos = _header_int(buf, 2, "width", 1, 1 << 20)
    height, pos = _header_int(buf, pos, "height", 1, 1 << 20)
    maxval, pos = _header_int(buf, pos, "maxval", 1, 1 << 16)
    if maxval not in (255, 65535):
        raise FormatError(f"maxval must be 255 or 65535, got {maxval}")
    if magic == b"P6" and maxval != 255:
        raise FormatError(f"maxval must be 255 for P6 color data, got {maxval}")
    return magic, width, height, maxval, pos


def _read_binary_samples(buf: bytes, pos: int, count: int, maxval: int) -> np.ndarray:
    # Exactly one whitespace byte separates the header from the raster.
    pos += 1
    width_bytes = 1 if maxval <= 255 else 2
    need = count * width_bytes
    payload = buf[pos : pos + need]
    if len(payload) < need:
        raise FormatError("unexpected end of data")
    dtype = np.uint8 if width_bytes == 1 else np.dtype(">u2")
    return np.frombuffer(payload, dtype=dtype, count=count)


def _read_ascii_samples(buf: bytes, pos: int, count: int, maxval: int) -> np.ndarray:
    out = np.empty(count, dtype=np.uint16)
    for i in range(count):
        try:
            token, pos = _next_token(buf, pos, "sample")
        except FormatError:
            raise FormatError("unexpected end of data") from None
        try:
            value = int(token)
        except ValueError:
            raise FormatError(f"malformed sample {token!r}") from None
        if value < 0 or value > maxval:
            raise FormatError(f"sample {value} exceeds maxval {maxval}")
        out[i] = value
    return out


def read_pgm(path) -> RangeImage:
    buf = Path(path).read_bytes()
    magic, width, height, maxval, pos = _parse_pnm_header(buf)
    if magic == b"P6":
        raise FormatError("range images must be PGM (P2/P5), got P6 color data")
    count = width * height
    if magic == b"P5":
        samples = _read_binary_samples(buf, pos, count, maxval)
    else:
        samples = _read_ascii_samples(buf, pos, count, maxval)
    return RangeImage(samples.reshape(height, width).astype(np.float32))


def read_ppm(path) -> ColorImage:
    buf = Path(path).read_bytes()
    magic, width, height, maxval, pos = _parse_pnm_header(buf)
    if magic != b"P6":
        raise FormatError(f"color images must be P6 or PNG, got {magic.decode()}")
    samples = _read_binary_samples(buf, pos, width * height * 3, maxval)
    return ColorImage(samples.reshape(height, width, 3))


def read_png(path) -> ColorImage:
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise FormatError(f"cannot decode PNG: {exc}") from None
    if img.mode in ("I", "I;16", "I;16B", "F"):
        raise FormatError(f"unsupported bit depth (PNG mode {img.mode}, expected 8-bit RGB)")
    if img.mode != "RGB":
        img = img.convert("RGB")
    return ColorImage(np.asarray(img, dtype=np.uint8))


def read_image(path, kind: str):
    """Read `path` as a range or color raster.

    kind="range" decodes PGM (P2/P5); kind="color" decodes PPM (P6) or
    8-bit RGB PNG. Dispatch is by file magic, not extension.
    """
    p = Path(path)
    head = p.open("rb").read(8)
    if kind == "range":
        return read_pgm(p)
    if kind == "color":
        if head.startswith(b"\x89PNG"):
            return read_png(p)
        return read_ppm(p)
    raise ValueError(f"kind must be 'range' or 'color', got {kind!r}")


def write_pgm(path, img, maxval: int = 65535) -> None:
    """Write a range raster as binary PGM, quantizing to the target maxval."""
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    data = img.data if isinstance(img, RangeImage) else np.asarray(img)
    quant = np.clip(np.rint(data.astype(np.float64)), 0, maxval)
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + quant.astype(dtype).tobytes())


def write_ppm(path, img: ColorImage) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.data.tobytes())


def write_png(path, rgb) -> None:
    data = rgb.data if isinstance(rgb, ColorImage) else np.asarray(rgb, dtype=np.uint8)
    Image.fromarray(data, mode="RGB").save(Path(path), format="PNG")


def segment_palette(n: int) -> np.ndarray:
    """Deterministic distinct colors for up to n segment ids (golden-ratio hues)."""
    hue = (np.arange(n, dtype=np.float64) * 0.61803398875) % 1.0
    sat = np.where(np.arange(n) % 2 == 0, 0.75, 0.5)
    val = np.where(np.arange(n) % 3 == 0, 0.95, 0.75)
    h6 = hue * 6.0
    k = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = val * (1 - sat)
    q = val * (1 - sat * f)
    t = val * (1 - sat * (1 - f))
    rgb = np.select(
        [(k == i)[:, None] for i in range(6)],
        [
            np.stack([val, t, p], 1),
            np.stack([q, val, p], 1),
            np.stack([p, val, t], 1),
            np.stack([p, q, val], 1),
            np.stack([t, p, val], 1),
            np.stack([val, p, q], 1),
        ],
    )
    return np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8)


def segment_visualization(ids: np.ndarray) -> np.ndarray:
    """Color-coded uint8 RGB rendering of a segment id raster."""
    palette = segment_palette(int(ids.max()) + 1)
    return palette[ids]
