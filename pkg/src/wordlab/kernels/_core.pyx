# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: direct-loop convolution, pooling, prototype search,
and the sequential online-SOM update loop."""

import numpy as np

cimport cython
from libc.math cimport exp, sqrt

ctypedef fused real:
    float
    double


def conv2d_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] w, real[::1] b):
    cdef Py_ssize_t nb = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t o = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = h - kh + 1, ow = wd - kw + 1
    if real is float:
        y_arr = np.empty((nb, o, oh, ow), dtype=np.float32)
    else:
        y_arr = np.empty((nb, o, oh, ow), dtype=np.float64)
    cdef real[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t ib, io, ic, ikh, ikw, iy, ix
    cdef real wv
    with nogil:
        for ib in range(nb):
            for io in range(o):
                for iy in range(oh):
                    for ix in range(ow):
                        y[ib, io, iy, ix] = b[io]
                for ic in range(c):
                    for ikh in range(kh):
                        for ikw in range(kw):
                            wv = w[io, ic, ikh, ikw]
                            for iy in range(oh):
                                for ix in range(ow):
                                    y[ib, io, iy, ix] = y[ib, io, iy, ix] + wv * x[ib, ic, iy + ikh, ix + ikw]
    return y_arr


def conv2d_backward(real[:, :, :, ::1] x, real[:, :, :, ::1] w, real[:, :, :, ::1] gy,
                    bint need_gx=True):
    cdef Py_ssize_t nb = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t o = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = gy.shape[2], ow = gy.shape[3]
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    gx_arr = np.zeros((nb, c, h, wd), dtype=dt)
    gw_arr = np.zeros((o, c, kh, kw), dtype=dt)
    gb_arr = np.zeros(o, dtype=dt)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef real[:, :, :, ::1] gw = gw_arr
    cdef real[::1] gb = gb_arr
    cdef Py_ssize_t ib, io, ic, ikh, ikw, iy, ix
    cdef real acc, g, wv
    with nogil:
        for ib in range(nb):
            for io in range(o):
                acc = 0
                for iy in range(oh):
                    for ix in range(ow):
                        acc = acc + gy[ib, io, iy, ix]
                gb[io] = gb[io] + acc
                for ic in range(c):
                    for ikh in range(kh):
                        for ikw in range(kw):
                            wv = w[io, ic, ikh, ikw]
                            acc = 0
                            if need_gx:
                                for iy in range(oh):
                                    for ix in range(ow):
                                        g = gy[ib, io, iy, ix]
                                        acc = acc + g * x[ib, ic, iy + ikh, ix + ikw]
                                        gx[ib, ic, iy + ikh, ix + ikw] = gx[ib, ic, iy + ikh, ix + ikw] + wv * g
                            else:
                                for iy in range(oh):
                                    for ix in range(ow):
                                        acc = acc + gy[ib, io, iy, ix] * x[ib, ic, iy + ikh, ix + ikw]
                            gw[io, ic, ikh, ikw] = gw[io, ic, ikh, ikw] + acc
    return (gx_arr if need_gx else None), gw_arr, gb_arr


def maxpool_forward(real[:, :, :, ::1] x, Py_ssize_t window, Py_ssize_t stride):
    cdef Py_ssize_t nb = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t oh = (h - window) // stride + 1
    cdef Py_ssize_t ow = (wd - window) // stride + 1
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    y_arr = np.empty((nb, c, oh, ow), dtype=dt)
    arg_arr = np.empty((nb, c, oh, ow), dtype=np.int64)
    cdef real[:, :, :, ::1] y = y_arr
    cdef long long[:, :, :, ::1] arg = arg_arr
    # flat window offsets into the (H,W) plane, row-major
    off_arr = (
        (np.arange(window)[:, None] * wd + np.arange(window)[None, :]).ravel().astype(np.int64)
    )
    cdef long long[::1] off = off_arr
    cdef Py_ssize_t k = window * window
    cdef Py_ssize_t ib, ic, iy, ix, j, base, mi
    cdef real best, v
    cdef const real* plane
    with nogil:
        for ib in range(nb):
            for ic in range(c):
                plane = &x[ib, ic, 0, 0]
                for iy in range(oh):
                    for ix in range(ow):
                        base = iy * stride * wd + ix * stride
                        # branchless max, then a reverse equality scan so
                        # ties resolve to the first window position
                        best = plane[base]
                        for j in range(1, k):
                            v = plane[base + off[j]]
                            best = v if v > best else best
                        mi = 0
                        for j in range(k - 1, -1, -1):
                            mi = j if plane[base + off[j]] == best else mi
                        y[ib, ic, iy, ix] = best
                        arg[ib, ic, iy, ix] = base + off[mi]
    return y_arr, arg_arr


def maxpool_backward(real[:, :, :, ::1] gy, long long[:, :, :, ::1] arg, Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t nb = gy.shape[0], c = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    gx_arr = np.zeros((nb, c, h, w), dtype=dt)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t ib, ic, iy, ix
    cdef long long fl
    with nogil:
        for ib in range(nb):
            for ic in range(c):
                for iy in range(oh):
                    for ix in range(ow):
                        fl = arg[ib, ic, iy, ix]
                        gx[ib, ic, fl // w, fl % w] = gx[ib, ic, fl // w, fl % w] + gy[ib, ic, iy, ix]
    return gx_arr


def nearest_prototype(real[:, ::1] x, real[:, ::1] protos):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], u = protos.shape[0]
    idx_arr = np.empty(n, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, k, best
    cdef double d2, bd, t
    with nogil:
        for i in range(n):
            bd = -1
            best = 0
            for j in range(u):
                d2 = 0
                for k in range(d):
                    t = x[i, k] - protos[j, k]
                    d2 = d2 + t * t
                if bd < 0 or d2 < bd:
                    bd = d2
                    best = j
            idx[i] = best
            dist[i] = sqrt(bd)
    return idx_arr, dist_arr


def som_run(double[:, ::1] data, double[:, ::1] protos, double[::1] lr,
            double[::1] radius, double[:, ::1] grid_d2):
    cdef Py_ssize_t n = data.shape[0], d = data.shape[1], u = protos.shape[0]
    cdef Py_ssize_t t, j, k, bmu
    cdef double d2, bd, diff, hj, a
    with nogil:
        for t in range(n):
            bd = -1
            bmu = 0
            for j in range(u):
                d2 = 0
                for k in range(d):
                    diff = protos[j, k] - data[t, k]
                    d2 = d2 + diff * diff
                if bd < 0 or d2 < bd:
                    bd = d2
                    bmu = j
            a = -0.5 / (radius[t] * radius[t])
            for j in range(u):
                hj = lr[t] * exp(grid_d2[bmu, j] * a)
                for k in range(d):
                    protos[j, k] = protos[j, k] - hj * (protos[j, k] - data[t, k])
    return None
