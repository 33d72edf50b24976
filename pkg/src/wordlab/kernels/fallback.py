"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or explicitly requested via
WORDLAB_KERNELS=numpy).  Convolutions go through im2col + BLAS gemm; pooling
and prototype search use strided views and vectorized reductions.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _im2col(x, kh, kw):
    """(B,C,H,W) -> (B, C*kh*kw, oh*ow) patch matrix, stride 1.

    Built from kh*kw contiguous block copies instead of one transposed
    gather; the copy cost is what dominates conv time on a single core.
    """
    b, c, h, w = x.shape
    oh, ow = h - kh + 1, w - kw + 1
    cols = np.empty((b, c, kh * kw, oh, ow), dtype=x.dtype)
    for dy in range(kh):
        for dx in range(kw):
            cols[:, :, dy * kw + dx] = x[:, :, dy : dy + oh, dx : dx + ow]
    return cols.reshape(b, c * kh * kw, oh * ow), oh, ow


def conv2d_forward(x, w, b):
    """Valid cross-correlation, stride 1.

    x: (B,C,H,W), w: (O,C,kh,kw), b: (O,).  Returns (B,O,oh,ow).
    """
    nb = x.shape[0]
    o, _, kh, kw = w.shape
    cols, oh, ow = _im2col(x, kh, kw)
    y = np.matmul(w.reshape(o, -1), cols)  # (B, O, oh*ow)
    y += b[:, None]
    return y.reshape(nb, o, oh, ow)


def conv2d_backward(x, w, gy, need_gx=True):
    """Gradients of conv2d_forward w.r.t. input, kernels, and biases.

    `need_gx=False` skips the input gradient (first layer of a network);
    the returned gx is then None.
    """
    nb, c, h, wdt = x.shape
    o, _, kh, kw = w.shape
    _, _, oh, ow = gy.shape
    gb = gy.sum(axis=(0, 2, 3))

    cols, _, _ = _im2col(x, kh, kw)
    gy_mat = gy.reshape(nb, o, oh * ow)
    gw = np.matmul(gy_mat, cols.transpose(0, 2, 1)).sum(axis=0).reshape(o, c, kh, kw)
    if not need_gx:
        return None, gw, gb

    # Input gradient: spread W^T @ gy back over the kh*kw window offsets.
    gcols = np.matmul(w.reshape(o, -1).T, gy_mat)  # (B, C*kh*kw, oh*ow)
    gcols = gcols.reshape(nb, c, kh * kw, oh, ow)
    gx = np.zeros((nb, c, h, wdt), dtype=gy.dtype)
    for dy in range(kh):
        for dx in range(kw):
            gx[:, :, dy : dy + oh, dx : dx + ow] += gcols[:, :, dy * kw + dx]
    return gx, gw, gb


def maxpool_forward(x, window, stride):
    """Max pooling over (window x window) tiles.

    Returns (y, arg) where arg holds, per output cell, the flat index of the
    max within the (H,W) plane.  Ties take the first occurrence in row-major
    window order.
    """
    b, c, h, w = x.shape
    v = sliding_window_view(x, (window, window), axis=(2, 3))[:, :, ::stride, ::stride]
    oh, ow = v.shape[2], v.shape[3]
    flat = v.reshape(b, c, oh, ow, window * window)
    local = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, local[..., None], axis=-1)[..., 0]
    rows = np.arange(oh)[:, None] * stride + local // window
    cols = np.arange(ow)[None, :] * stride + local % window
    arg = (rows * w + cols).astype(np.int64)
    return np.ascontiguousarray(y), arg


def maxpool_backward(gy, arg, h, w):
    """Scatter upstream gradients back to the argmax positions."""
    b, c = gy.shape[:2]
    gx = np.zeros((b * c, h * w), dtype=gy.dtype)
    np.add.at(
        gx,
        (np.arange(b * c)[:, None], arg.reshape(b * c, -1)),
        gy.reshape(b * c, -1),
    )
    return gx.reshape(b, c, h, w)


def nearest_prototype(x, protos, chunk=8192):
    """Index of and Euclidean distance to the closest prototype per row."""
    n = x.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    p2 = np.einsum("ij,ij->i", protos, protos)
    for s in range(0, n, chunk):
        xs = x[s : s + chunk]
        d2 = p2 - 2.0 * (xs @ protos.T)
        d2 += np.einsum("ij,ij->i", xs, xs)[:, None]
        i = d2.argmin(axis=1)
        idx[s : s + chunk] = i
        dist[s : s + chunk] = np.sqrt(np.maximum(d2[np.arange(len(xs)), i], 0.0))
    return idx, dist


def som_run(data, protos, lr, radius, grid_d2):
    """Sequential online SOM pass; updates `protos` in place.

    data: (N,D) presentation order; lr, radius: per-step schedules (N,);
    grid_d2: (U,U) squared grid distances between units.
    """
    for t in range(data.shape[0]):
        diff = protos - data[t]
        bmu = int(np.einsum("ij,ij->i", diff, diff).argmin())
        h = np.exp(grid_d2[bmu] / (-2.0 * radius[t] * radius[t]))
        protos -= (lr[t] * h)[:, None] * diff
