"""Deterministic synthetic "books" of glyph-like word images.

Each class gets a prototype rendered from random smooth strokes (dark ink
on white); samples are elastic-morphed, noise-corrupted variants of the
prototype.  Style families perturb the stroke statistics so that several
books can share a visual style.  Output is PGM files plus a manifest in the
dataset module's TSV format, all fully determined by the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .augment import MorphParams, elastic_morph
from .dataset import BookManifest, SampleRecord, save_manifest
from .imaging import save_pgm
from .seeds import derive_seed, rng_for


@dataclass(frozen=True)
class SynthBookSpec:
    book_id: str
    n_classes: int
    samples_per_class: int
    image_w: int = 200
    image_h: int = 100
    strokes_min: int = 3
    strokes_max: int = 8
    jitter_amplitude: float = 2.0
    noise_sigma: float = 0.03
    style_family: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.samples_per_class < 1:
            raise ValueError("need at least 1 sample per class")
        if self.strokes_min < 1 or self.strokes_max < self.strokes_min:
            raise ValueError("bad stroke count range")


def _render_prototype(spec: SynthBookSpec, class_index: int) -> np.ndarray:
    """Random smooth polylines stamped onto a canvas, blurred into ink."""
    rng = rng_for(spec.seed, "proto", spec.style_family, class_index)
    h, w = spec.image_h, spec.image_w
    # style family shifts stroke thickness and wiggliness
    style = rng_for("style", spec.style_family)
    thickness = 1.2 + 0.6 * style.uniform()
    wiggle = 0.15 + 0.2 * style.uniform()
    canvas = np.zeros((h, w))
    n_strokes = int(rng.integers(spec.strokes_min, spec.strokes_max + 1))
    margin_x, margin_y = 0.1 * w, 0.15 * h
    for _ in range(n_strokes):
        n_ctrl = int(rng.integers(3, 6))
        cx = rng.uniform(margin_x, w - margin_x, n_ctrl)
        cy = rng.uniform(margin_y, h - margin_y, n_ctrl)
        # densify with a smooth parametric interpolation
        t_ctrl = np.linspace(0.0, 1.0, n_ctrl)
        t = np.linspace(0.0, 1.0, 200)
        px = np.interp(t, t_ctrl, cx)
        py = np.interp(t, t_ctrl, cy)
        # soften corners, then add a little waviness
        px = gaussian_filter(px, sigma=12, mode="nearest")
        py = gaussian_filter(py, sigma=12, mode="nearest")
        phase = rng.uniform(0, 2 * np.pi)
        px = px + wiggle * 6.0 * np.sin(2 * np.pi * t * 2 + phase)
        py = py + wiggle * 6.0 * np.cos(2 * np.pi * t * 3 + phase)
        ix = np.clip(np.rint(px), 0, w - 1).astype(int)
        iy = np.clip(np.rint(py), 0, h - 1).astype(int)
        canvas[iy, ix] = 1.0
    ink = gaussian_filter(canvas, sigma=thickness, mode="constant")
    peak = ink.max()
    if peak > 0:
        ink = np.clip(ink / peak * 1.8, 0.0, 1.0)
    return 1.0 - ink


def render_book_images(spec: SynthBookSpec):
    """Yield (class_label, sample_index, image) for every sample of the book."""
    morph = MorphParams(
        amplitude=spec.jitter_amplitude,
        smoothing_radius=8.0,
        variants_per_sample=0,  # unused here; morphs are drawn directly
        seed=derive_seed(spec.seed, "synth", spec.book_id),
    )
    width = len(str(spec.n_classes - 1))
    for ci in range(spec.n_classes):
        label = f"w{ci:0{width}d}"
        proto = _render_prototype(spec, ci)
        for si in range(spec.samples_per_class):
            img = elastic_morph(proto, morph, f"{spec.book_id}/{label}", si)
            noise_rng = rng_for(spec.seed, "noise", spec.book_id, label, si)
            img = np.clip(img + noise_rng.normal(0.0, spec.noise_sigma, img.shape), 0.0, 1.0)
            yield label, si, img


def generate_book(spec: SynthBookSpec, out_dir) -> BookManifest:
    """Write the book's PGM files and manifest under `out_dir`.

    Images land in <out_dir>/<book_id>/, the manifest at
    <out_dir>/<book_id>.tsv; image_refs are relative to out_dir.
    """
    out_dir = Path(out_dir)
    img_dir = out_dir / spec.book_id
    img_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for label, si, img in render_book_images(spec):
        ref = f"{spec.book_id}/{label}_{si:04d}.pgm"
        save_pgm(img, out_dir / ref)
        records.append(
            SampleRecord(
                sample_id=ref,
                book_id=spec.book_id,
                class_label=label,
                origin="human",
                image_ref=ref,
            )
        )
    book = BookManifest(spec.book_id, tuple(records), root=out_dir)
    save_manifest([book], out_dir / f"{spec.book_id}.tsv")
    return book


def class_prototypes(spec: SynthBookSpec) -> dict[str, np.ndarray]:
    """The noiseless prototypes, keyed by class label (for diagnostics)."""
    width = len(str(spec.n_classes - 1))
    return {f"w{ci:0{width}d}": _render_prototype(spec, ci) for ci in range(spec.n_classes)}
