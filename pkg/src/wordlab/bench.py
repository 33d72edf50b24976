"""Micro-benchmark comparing the compiled and numpy kernel backends.

Times each hot kernel on training-representative shapes and prints one line
per (kernel, backend).  Used to decide which backend the "auto" selection
should prefer per kernel.
"""

from __future__ import annotations

import time

import numpy as np

from .kernels import HAVE_COMPILED, fallback

if HAVE_COMPILED:
    from .kernels import _core
else:
    _core = None


def _time(fn, *args, repeat=5, min_seconds=0.2):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeat):
        n = 0
        t0 = time.perf_counter()
        while time.perf_counter() - t0 < min_seconds / repeat:
            fn(*args)
            n += 1
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def benchmark_cases(dtype=np.float32):
    """Yield (name, flops, args-per-backend callables)."""
    rng = np.random.default_rng(0)

    # conv shapes from the word classifier's three blocks, batch 32
    for name, (b, c, h, w, o, k) in {
        "conv1": (32, 1, 50, 100, 32, 3),
        "conv2": (32, 32, 23, 48, 32, 3),
        "conv3": (32, 32, 10, 23, 24, 3),
    }.items():
        x = rng.random((b, c, h, w), dtype=dtype)
        wt = rng.standard_normal((o, c, k, k)).astype(dtype)
        bias = np.zeros(o, dtype=dtype)
        oh, ow = h - k + 1, w - k + 1
        flops = 2.0 * b * o * oh * ow * c * k * k
        yield f"{name}_fwd", flops, lambda m, x=x, wt=wt, bias=bias: m.conv2d_forward(x, wt, bias)
        gy = rng.standard_normal((b, o, oh, ow)).astype(dtype)
        yield f"{name}_bwd", 2 * flops, lambda m, x=x, wt=wt, gy=gy: m.conv2d_backward(x, wt, gy)

    x = rng.random((32, 32, 48, 98), dtype=dtype)
    yield "maxpool_fwd", float(x.size), lambda m, x=x: m.maxpool_forward(x, 3, 2)
    y, arg = fallback.maxpool_forward(x, 3, 2)
    gy = rng.standard_normal(y.shape).astype(dtype)
    yield "maxpool_bwd", float(x.size), lambda m, gy=gy, arg=arg: m.maxpool_backward(gy, arg, 48, 98)

    descs = rng.standard_normal((20000, 225))
    protos = rng.standard_normal((225, 225))
    yield "nearest_prototype", 2.0 * 20000 * 225 * 225, (
        lambda m, d=descs, p=protos: m.nearest_prototype(d, p)
    )

    data = rng.standard_normal((2000, 225))
    lr = np.full(2000, 0.1)
    radius = np.full(2000, 3.0)
    ys, xs = np.divmod(np.arange(225), 15)
    grid_d2 = ((xs[:, None] - xs) ** 2 + (ys[:, None] - ys) ** 2).astype(np.float64)
    yield "som_run", 2000 * (225 * 225 * 3.0 + 225 * 225 * 2.0), (
        lambda m, d=data, p=protos, lr=lr, r=radius, g=grid_d2: m.som_run(d, p.copy(), lr, r, g)
    )


def run_benchmark(dtype=np.float32):
    """Returns rows (kernel, backend, seconds, gflops) and prints a table."""
    backends = [("numpy", fallback)]
    if _core is not None:
        backends.append(("compiled", _core))
    rows = []
    print(f"{'kernel':<20} {'backend':<10} {'ms':>10} {'GFLOP/s':>10}")
    for name, flops, call in benchmark_cases(dtype):
        for bname, mod in backends:
            dt = _time(call, mod)
            rows.append((name, bname, dt, flops / dt / 1e9))
            print(f"{name:<20} {bname:<10} {dt * 1e3:>10.3f} {flops / dt / 1e9:>10.2f}")
    return rows
