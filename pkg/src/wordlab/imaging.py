"""Grayscale word-image I/O and resizing.

Images are 2-D float64 numpy arrays with values in [0, 1], 1.0 being the
white background.  Only PGM (P2/P5, maxval <= 255) is supported; corpora in
other formats must be converted beforehand.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

CNN_WIDTH = 100
CNN_HEIGHT = 50

# Working-scale rule for the patch/codebook path: one halving approximates
# the 300dpi -> 150dpi reduction for typical scans.
HALVE_ABOVE = 600


class PgmError(ValueError):
    pass


def _read_tokens(data: bytes, count: int, pos: int):
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PgmError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def load_pgm(path) -> np.ndarray:
    """Load a P2 or P5 PGM file; pixel v maps to v/maxval."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise PgmError(f"{path}: not a PGM file (P2/P5)")
    magic = data[:2]
    tokens, pos = _read_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1:
        raise PgmError(f"{path}: bad dimensions {width}x{height}")
    if maxval > 255:
        raise PgmError(f"{path}: unsupported maxval {maxval} (must be <= 255)")
    if maxval < 1:
        raise PgmError(f"{path}: bad maxval {maxval}")
    npix = width * height
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        raster = data[pos : pos + npix]
        if len(raster) < npix:
            raise PgmError(f"{path}: truncated pixel data")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        try:
            values = np.array(data[pos:].split()[:npix], dtype=np.float64)
        except ValueError:
            raise PgmError(f"{path}: non-numeric P2 pixel data") from None
        if values.size < npix:
            raise PgmError(f"{path}: truncated pixel data")
    if values.max(initial=0.0) > maxval:
        raise PgmError(f"{path}: pixel value exceeds maxval")
    return (values / maxval).reshape(height, width)


def save_pgm(img: np.ndarray, path) -> None:
    """Write a binary (P5) PGM with maxval 255."""
    h, w = img.shape
    raster = np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(raster.tobytes())


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resampling with pixel-center alignment and edge clamping."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target size must be positive, got {out_w}x{out_h}")
    in_h, in_w = img.shape
    if (out_h, out_w) == (in_h, in_w):
        return img.copy()
    sx = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1.0)
    sy = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = sx - x0
    fy = (sy - y0)[:, None]
    top = img[y0[:, None], x0] * (1.0 - fx) + img[y0[:, None], x1] * fx
    bot = img[y1[:, None], x0] * (1.0 - fx) + img[y1[:, None], x1] * fx
    return top * (1.0 - fy) + bot * fy


def prepare_cnn_input(img: np.ndarray) -> np.ndarray:
    """Resize to the network's fixed 100x50 input."""
    return resize_bilinear(img, CNN_WIDTH, CNN_HEIGHT)


def prepare_bovw_scale(img: np.ndarray) -> np.ndarray:
    """Halve images whose larger dimension exceeds the working-scale bound."""
    h, w = img.shape
    if max(h, w) > HALVE_ABOVE:
        return resize_bilinear(img, max(1, w // 2), max(1, h // 2))
    return img
