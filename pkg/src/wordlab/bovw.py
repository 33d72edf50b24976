"""Bag-of-visual-words front end: patch descriptors, SOM codebooks,
codebook selection at ingest, and per-image histograms.

Descriptors are raw 15x15 intensity windows (stride 5), zero-meaned and
L2-normalized; near-constant windows are discarded.  The codebook is a
Kohonen map over those descriptors; a book ingests the candidate codebook
with the lowest mean quantization error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .seeds import rng_for

PATCH_SIZE = 15
PATCH_STRIDE = 5
MIN_PATCH_STD = 0.05

CODEBOOK_MAGIC = b"WFCB"
CODEBOOK_VERSION = 1


def extract_patches(
    img: np.ndarray,
    patch_size: int = PATCH_SIZE,
    stride: int = PATCH_STRIDE,
    min_std: float = MIN_PATCH_STD,
) -> np.ndarray:
    """(N, patch_size^2) descriptor matrix; N may be 0 for blank images."""
    h, w = img.shape
    if h < patch_size or w < patch_size:
        return np.empty((0, patch_size * patch_size), dtype=np.float64)
    v = sliding_window_view(img, (patch_size, patch_size))[::stride, ::stride]
    flat = v.reshape(-1, patch_size * patch_size).astype(np.float64)
    keep = flat.std(axis=1) >= min_std
    flat = flat[keep]
    if flat.size == 0:
        return np.empty((0, patch_size * patch_size), dtype=np.float64)
    flat = flat - flat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(flat, axis=1, keepdims=True)
    return flat / norms


@dataclass(frozen=True)
class Codebook:
    codebook_id: str
    grid_w: int
    grid_h: int
    prototypes: np.ndarray  # (grid_w*grid_h, dim)

    def __post_init__(self):
        if self.prototypes.shape[0] != self.grid_w * self.grid_h:
            raise ValueError("prototype count must equal grid_w*grid_h")
        if not np.all(np.isfinite(self.prototypes)):
            raise ValueError("non-finite prototypes")

    @property
    def n_units(self) -> int:
        return self.grid_w * self.grid_h

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]


@dataclass(frozen=True)
class SomSchedule:
    epochs: int = 10
    lr_start: float = 0.9
    lr_end: float = 0.01
    radius_start: float | None = None  # default max(grid_w, grid_h)/2
    radius_end: float = 1.0
    seed: int = 0
    max_samples: int = 200_000

    def __post_init__(self):
        if not (0.0 < self.lr_end <= self.lr_start):
            raise ValueError("need 0 < lr_end <= lr_start")
        if self.radius_end < 0.5:
            raise ValueError("radius_end must be >= 0.5")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def _grid_sq_distances(grid_w: int, grid_h: int) -> np.ndarray:
    ys, xs = np.divmod(np.arange(grid_w * grid_h), grid_w)
    dy = ys[:, None] - ys[None, :]
    dx = xs[:, None] - xs[None, :]
    return (dx * dx + dy * dy).astype(np.float64)


def train_som(
    descriptors: np.ndarray,
    grid_w: int = 15,
    grid_h: int = 15,
    schedule: SomSchedule = SomSchedule(),
    codebook_id: str = "som",
) -> Codebook:
    """Online Kohonen training over a (possibly subsampled) descriptor set.

    Learning rate and neighborhood radius decay exponentially from their
    start to end values across epochs*N steps; each epoch presents the
    sample in a freshly shuffled order.  Sequential by design: updates are
    order-dependent.
    """
    n_units = grid_w * grid_h
    n = descriptors.shape[0]
    if n < n_units:
        raise ValueError(f"need >= {n_units} descriptors to train a {grid_w}x{grid_h} map, got {n}")
    rng = rng_for(schedule.seed, "som", codebook_id)
    if n > schedule.max_samples:
        pick = rng.choice(n, size=schedule.max_samples, replace=False)
        sample = np.ascontiguousarray(descriptors[np.sort(pick)])
        n = schedule.max_samples
    else:
        sample = np.ascontiguousarray(descriptors, dtype=np.float64)
    protos = sample[rng.choice(n, size=n_units, replace=False)].copy()

    total = schedule.epochs * n
    t = np.arange(total, dtype=np.float64) / max(total - 1, 1)
    lr = schedule.lr_start * (schedule.lr_end / schedule.lr_start) ** t
    r_start = schedule.radius_start if schedule.radius_start is not None else max(grid_w, grid_h) / 2.0
    radius = r_start * (schedule.radius_end / r_start) ** t
    grid_d2 = _grid_sq_distances(grid_w, grid_h)

    for epoch in range(schedule.epochs):
        order = rng.permutation(n)
        kernels.som_run(
            np.ascontiguousarray(sample[order]),
            protos,
            np.ascontiguousarray(lr[epoch * n : (epoch + 1) * n]),
            np.ascontiguousarray(radius[epoch * n : (epoch + 1) * n]),
            grid_d2,
        )
    return Codebook(codebook_id, grid_w, grid_h, protos)


def quantization_error(cb: Codebook, descriptors: np.ndarray) -> float:
    """Mean Euclidean distance to the nearest prototype."""
    if descriptors.shape[0] == 0:
        raise ValueError("no descriptors")
    _, dist = kernels.nearest_prototype(
        np.ascontiguousarray(descriptors, dtype=np.float64),
        np.ascontiguousarray(cb.prototypes, dtype=np.float64),
    )
    return float(dist.mean())


def select_codebook(candidates: list[Codebook], probe: np.ndarray) -> str:
    """Id of the candidate with the lowest quantization error on the probe.

    Ties (exact equality) go to the lexicographically smallest id.
    """
    if not candidates:
        raise ValueError("no candidate codebooks")
    best = min(candidates, key=lambda cb: (quantization_error(cb, probe), cb.codebook_id))
    return best.codebook_id


def bovw_histogram(img: np.ndarray, cb: Codebook) -> np.ndarray:
    """L1-normalized histogram of best-matching-unit counts; zeros if blank."""
    patches = extract_patches(img)
    bins = np.zeros(cb.n_units, dtype=np.float64)
    if patches.shape[0] == 0:
        return bins
    idx, _ = kernels.nearest_prototype(
        patches, np.ascontiguousarray(cb.prototypes, dtype=np.float64)
    )
    np.add.at(bins, idx, 1.0)
    return bins / bins.sum()


def save_codebook(cb: Codebook, path) -> None:
    """WFCB binary format: magic, u16 version/grid_w/grid_h/dim, f32-LE rows."""
    with open(path, "wb") as f:
        f.write(CODEBOOK_MAGIC)
        f.write(struct.pack("<HHHH", CODEBOOK_VERSION, cb.grid_w, cb.grid_h, cb.dim))
        f.write(cb.prototypes.astype("<f4").tobytes())


def load_codebook(path, codebook_id: str | None = None) -> Codebook:
    data = Path(path).read_bytes()
    if data[:4] != CODEBOOK_MAGIC:
        raise ValueError(f"{path}: not a codebook file")
    version, grid_w, grid_h, dim = struct.unpack("<HHHH", data[4:12])
    if version != CODEBOOK_VERSION:
        raise ValueError(f"{path}: unsupported codebook version {version}")
    expect = grid_w * grid_h * dim * 4
    raw = data[12 : 12 + expect]
    if len(raw) != expect:
        raise ValueError(f"{path}: truncated codebook")
    protos = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(grid_w * grid_h, dim)
    return Codebook(codebook_id or Path(path).stem, grid_w, grid_h, protos)
