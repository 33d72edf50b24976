"""Elastic-morph augmentation: smooth random warps of word images.

Each human-labeled training image gets a fixed number of morphed variants
(five by default).  The warp is a rubber-sheet displacement field: uniform
noise smoothed with a Gaussian, rescaled so the largest displacement equals
the configured amplitude, applied by backward bilinear warping with white
outside the image.  Everything is a pure function of (seed, sample identity,
draw index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from .dataset import SampleRecord
from .seeds import rng_for


@dataclass(frozen=True)
class MorphParams:
    amplitude: float = 2.5  # max displacement, pixels
    smoothing_radius: float = 8.0  # Gaussian sigma, pixels
    variants_per_sample: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.smoothing_radius <= 0:
            raise ValueError("smoothing_radius must be > 0")
        if self.variants_per_sample < 0:
            raise ValueError("variants_per_sample must be >= 0")


def _smooth(field: np.ndarray, sigma: float) -> np.ndarray:
    half = math.ceil(3.0 * sigma)
    return gaussian_filter(field, sigma=sigma, mode="nearest", radius=half)


def warp_bilinear(img: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Backward-warp: output(y,x) = img(y+dy, x+dx); outside reads are white."""
    h, w = img.shape
    pad = int(np.ceil(max(np.abs(dx).max(initial=0.0), np.abs(dy).max(initial=0.0)))) + 1
    padded = np.ones((h + 2 * pad, w + 2 * pad), dtype=img.dtype)
    padded[pad : pad + h, pad : pad + w] = img
    sx = np.arange(w)[None, :] + dx + pad
    sy = np.arange(h)[:, None] + dy + pad
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    fx = sx - x0
    fy = sy - y0
    top = padded[y0, x0] * (1.0 - fx) + padded[y0, x0 + 1] * fx
    bot = padded[y0 + 1, x0] * (1.0 - fx) + padded[y0 + 1, x0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


def elastic_morph(img: np.ndarray, params: MorphParams, sample_key: str, draw_index: int) -> np.ndarray:
    """One morphed variant of `img`, deterministic in (seed, sample, draw)."""
    if img.size == 0:
        raise ValueError("empty image")
    if params.amplitude == 0.0:
        return img.copy()
    rng = rng_for(params.seed, "morph", sample_key, draw_index)
    dx = rng.uniform(-1.0, 1.0, img.shape)
    dy = rng.uniform(-1.0, 1.0, img.shape)
    dx = _smooth(dx, params.smoothing_radius)
    dy = _smooth(dy, params.smoothing_radius)
    peak = float(np.sqrt(dx * dx + dy * dy).max())
    if peak > 0.0:
        scale = params.amplitude / peak
        dx *= scale
        dy *= scale
    return warp_bilinear(img, dx, dy)


def augment_training_set(
    train: list[tuple[SampleRecord, np.ndarray]], params: MorphParams
) -> list[tuple[SampleRecord, np.ndarray]]:
    """Originals plus `variants_per_sample` morphs per human record.

    Variant k of sample s gets sample_id (and image_ref) "<s>_m<k>",
    origin "augmented", and s's class label.
    """
    out: list[tuple[SampleRecord, np.ndarray]] = []
    for rec, img in train:
        if rec.origin != "human":
            raise ValueError(f"augmentation input must be human-origin, got {rec.sample_id}")
        out.append((rec, img))
        for k in range(params.variants_per_sample):
            morphed = elastic_morph(img, params, rec.sample_id, k)
            stem, dot, ext = rec.image_ref.rpartition(".")
            ref = f"{stem}_m{k}.{ext}" if dot else f"{rec.image_ref}_m{k}"
            out.append(
                (
                    replace(
                        rec,
                        sample_id=f"{rec.sample_id}_m{k}",
                        origin="augmented",
                        image_ref=ref,
                        source_id=rec.sample_id,
                    ),
                    morphed,
                )
            )
    return out
