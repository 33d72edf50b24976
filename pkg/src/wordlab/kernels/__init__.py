"""Kernel backend selection.

Two implementations of the hot kernels exist: a Cython extension
(``wordlab.kernels._core``) and a pure-numpy fallback (``fallback``).  The
backend is chosen once at import time:

* ``WORDLAB_KERNELS=compiled`` — compiled kernels for everything (error if
  the extension is missing).
* ``WORDLAB_KERNELS=numpy`` — numpy fallback for everything.
* ``WORDLAB_KERNELS=auto`` (default) — the faster implementation per
  kernel, as measured by ``wordlab.bench`` on a single core: compiled loops
  for pooling and the sequential SOM pass; the BLAS-backed numpy path for
  convolutions and prototype search, where im2col/gemm dominates.  Falls
  back to numpy wholesale if the extension is absent.

``wordlab.bench`` compares both backends kernel by kernel.
"""

import os

from . import fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

HAVE_COMPILED = _core is not None

_mode = os.environ.get("WORDLAB_KERNELS", "auto").lower()
if _mode not in ("auto", "compiled", "numpy"):
    raise ValueError(f"WORDLAB_KERNELS must be auto, compiled or numpy; got {_mode!r}")
if _mode == "compiled" and not HAVE_COMPILED:
    raise ImportError("WORDLAB_KERNELS=compiled but wordlab.kernels._core is not built")

if _mode == "numpy" or not HAVE_COMPILED:
    BACKEND = "numpy"
    conv2d_forward = fallback.conv2d_forward
    conv2d_backward = fallback.conv2d_backward
    maxpool_forward = fallback.maxpool_forward
    maxpool_backward = fallback.maxpool_backward
    nearest_prototype = fallback.nearest_prototype
    som_run = fallback.som_run
elif _mode == "compiled":
    BACKEND = "compiled"
    conv2d_forward = _core.conv2d_forward
    conv2d_backward = _core.conv2d_backward
    maxpool_forward = _core.maxpool_forward
    maxpool_backward = _core.maxpool_backward
    nearest_prototype = _core.nearest_prototype
    som_run = _core.som_run
else:
    BACKEND = "mixed"
    conv2d_forward = fallback.conv2d_forward
    conv2d_backward = fallback.conv2d_backward
    maxpool_forward = _core.maxpool_forward
    maxpool_backward = _core.maxpool_backward
    nearest_prototype = fallback.nearest_prototype
    som_run = _core.som_run
