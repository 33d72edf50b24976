"""Elastic-morph augmentation: identity, determinism, and record bookkeeping."""

import hashlib

import numpy as np
import pytest

from wordlab.augment import MorphParams, augment_training_set, elastic_morph, warp_bilinear
from wordlab.dataset import SampleRecord


def checksum(img):
    return hashlib.sha256(np.round(img, 6).astype("<f8").tobytes()).hexdigest()


def fixed_image():
    rng = np.random.default_rng(123)
    return np.round(rng.random((40, 60)), 3)


def test_zero_amplitude_is_bit_exact():
    img = fixed_image()
    out = elastic_morph(img, MorphParams(amplitude=0.0, seed=3), "s", 0)
    assert out is not img
    np.testing.assert_array_equal(out, img)


def test_output_shape_matches_input():
    img = fixed_image()
    out = elastic_morph(img, MorphParams(amplitude=3.0, seed=3), "s", 0)
    assert out.shape == img.shape


def test_golden_checksums():
    # frozen from the first verified run (amplitude 2.5, radius 8, seed 7);
    # values quantized to 1e-6 before hashing
    img = fixed_image()
    p = MorphParams(amplitude=2.5, smoothing_radius=8.0, seed=7)
    assert checksum(elastic_morph(img, p, "golden", 0)) == (
        "24b7186a6023c4f6a34313965578b2cc02ef9887523eb35a6cfc410b2e9f9f00"
    )
    assert checksum(elastic_morph(img, p, "golden", 1)) == (
        "aa9fefa3e0370e4423263cb47710c1b4e0023158255cce790849a921bedfb540"
    )


def test_morph_deterministic_per_identity():
    img = fixed_image()
    p = MorphParams(seed=5)
    a = elastic_morph(img, p, "k", 2)
    b = elastic_morph(img, p, "k", 2)
    np.testing.assert_array_equal(a, b)
    c = elastic_morph(img, p, "k", 3)
    assert not np.array_equal(a, c)
    d = elastic_morph(img, p, "other", 2)
    assert not np.array_equal(a, d)


def test_morph_range_stays_valid():
    out = elastic_morph(fixed_image(), MorphParams(amplitude=4.0, seed=1), "s", 0)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_displacement_peak_equals_amplitude():
    # a pure shift field moves content; indirectly check via warp of a ramp
    h, w = 10, 10
    img = np.tile(np.arange(w, dtype=float) / w, (h, 1))
    dx = np.full((h, w), 2.0)
    dy = np.zeros((h, w))
    out = warp_bilinear(img, dx, dy)
    # interior columns read two pixels to the right
    np.testing.assert_allclose(out[:, :6], img[:, 2:8], atol=1e-12)


def test_warp_outside_reads_white():
    img = np.zeros((5, 5))
    out = warp_bilinear(img, np.full((5, 5), 10.0), np.zeros((5, 5)))
    np.testing.assert_allclose(out, 1.0)


def test_empty_image_rejected():
    with pytest.raises(ValueError):
        elastic_morph(np.empty((0, 0)), MorphParams(), "s", 0)


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        MorphParams(amplitude=-1.0)
    with pytest.raises(ValueError):
        MorphParams(smoothing_radius=0.0)


# --------------------------------------------------------- set augmentation


def make_train(n):
    img = fixed_image()
    return [
        (SampleRecord(f"s{i:03d}.pgm", "b", f"c{i % 3}", "human", f"s{i:03d}.pgm"), img)
        for i in range(n)
    ]


def test_augment_counts_default_five():
    out = augment_training_set(make_train(100), MorphParams(seed=1))
    assert len(out) == 600
    n_aug = sum(1 for r, _ in out if r.origin == "augmented")
    assert n_aug == 500


def test_augment_empty_input():
    assert augment_training_set([], MorphParams()) == []


def test_augmented_records_inherit_label_and_source():
    out = augment_training_set(make_train(4), MorphParams(seed=1))
    by_source = {}
    for r, _ in out:
        if r.origin == "augmented":
            by_source.setdefault(r.source_id, []).append(r)
    for src, variants in by_source.items():
        assert len(variants) == 5
        human = next(r for r, _ in out if r.sample_id == src)
        assert all(v.class_label == human.class_label for v in variants)
        assert [v.sample_id for v in variants] == [f"{src}_m{k}" for k in range(5)]


def test_augmented_image_refs_keep_extension():
    out = augment_training_set(make_train(1), MorphParams(seed=1))
    refs = [r.image_ref for r, _ in out if r.origin == "augmented"]
    assert refs == [f"s000_m{k}.pgm" for k in range(5)]


def test_augment_rejects_non_human_input():
    r = SampleRecord("x_m0", "b", "c", "augmented", "x_m0.pgm", source_id="x")
    with pytest.raises(ValueError):
        augment_training_set([(r, fixed_image())], MorphParams())
