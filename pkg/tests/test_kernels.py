"""Compiled and numpy kernel backends must agree."""

import numpy as np
import pytest

from wordlab import kernels
from wordlab.kernels import fallback

compiled = pytest.importorskip("wordlab.kernels._core")


def test_backend_selected():
    assert kernels.BACKEND in ("numpy", "compiled", "mixed")
    assert kernels.HAVE_COMPILED


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_conv_forward_backward_agree(dtype):
    rng = np.random.default_rng(42)
    x = rng.standard_normal((3, 4, 8, 9)).astype(dtype)
    w = rng.standard_normal((5, 4, 3, 3)).astype(dtype)
    b = rng.standard_normal(5).astype(dtype)
    tol = 1e-4 if dtype == np.float32 else 1e-10
    yf = fallback.conv2d_forward(x, w, b)
    yc = compiled.conv2d_forward(x, w, b)
    np.testing.assert_allclose(yf, yc, atol=tol)
    gy = rng.standard_normal(yf.shape).astype(dtype)
    for need_gx in (True, False):
        rf = fallback.conv2d_backward(x, w, gy, need_gx)
        rc = compiled.conv2d_backward(x, w, gy, need_gx)
        if need_gx:
            np.testing.assert_allclose(rf[0], rc[0], atol=tol)
        else:
            assert rf[0] is None and rc[0] is None
        np.testing.assert_allclose(rf[1], rc[1], atol=tol)
        np.testing.assert_allclose(rf[2], rc[2], atol=tol)


def test_maxpool_agrees_exactly():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 3, 9, 11)).astype(np.float32)
    yf, af = fallback.maxpool_forward(x, 3, 2)
    yc, ac = compiled.maxpool_forward(x, 3, 2)
    np.testing.assert_array_equal(yf, yc)
    np.testing.assert_array_equal(af, ac)
    gy = rng.standard_normal(yf.shape).astype(np.float32)
    np.testing.assert_array_equal(
        fallback.maxpool_backward(gy, af, 9, 11), compiled.maxpool_backward(gy, ac, 9, 11)
    )


def test_maxpool_tie_rule_agrees():
    # quantized values force ties; both backends must pick the first
    # occurrence in row-major window order
    rng = np.random.default_rng(1)
    x = rng.integers(0, 3, (4, 3, 9, 11)).astype(np.float32)
    _, af = fallback.maxpool_forward(x, 3, 2)
    _, ac = compiled.maxpool_forward(x, 3, 2)
    np.testing.assert_array_equal(af, ac)
    xc = np.zeros((1, 1, 4, 4), dtype=np.float32)
    _, a1 = fallback.maxpool_forward(xc, 2, 2)
    _, a2 = compiled.maxpool_forward(xc, 2, 2)
    np.testing.assert_array_equal(a1.ravel(), [0, 2, 8, 10])
    np.testing.assert_array_equal(a1, a2)


def test_nearest_prototype_agrees():
    rng = np.random.default_rng(2)
    x = np.ascontiguousarray(rng.standard_normal((200, 7)))
    p = np.ascontiguousarray(rng.standard_normal((9, 7)))
    i1, d1 = fallback.nearest_prototype(x, p)
    i2, d2 = compiled.nearest_prototype(x, p)
    np.testing.assert_array_equal(i1, i2)
    np.testing.assert_allclose(d1, d2, atol=1e-10)


def test_som_run_agrees():
    rng = np.random.default_rng(3)
    data = np.ascontiguousarray(rng.standard_normal((100, 7)))
    protos1 = np.ascontiguousarray(rng.standard_normal((9, 7)))
    protos2 = protos1.copy()
    lr = np.full(100, 0.3)
    radius = np.full(100, 1.5)
    g = rng.random((9, 9))
    g = np.ascontiguousarray((g + g.T) / 2)
    fallback.som_run(data, protos1, lr, radius, g)
    compiled.som_run(data, protos2, lr, radius, g)
    np.testing.assert_allclose(protos1, protos2, atol=1e-12)


def test_benchmark_runs():
    from wordlab.bench import benchmark_cases

    # every benchmark case is callable on both backends
    for _, _, call in benchmark_cases():
        call(fallback)
        call(compiled)
