"""Finite-difference verification of the analytic gradients.

Runs the whole network end to end on one sample in double precision and
compares every parameter's analytic gradient against a central difference
of the loss.  A tamper hook lets tests confirm the check actually catches a
broken backward pass.
"""

from __future__ import annotations

import numpy as np

from .layers import bce_loss
from .model import CnnModel


def _loss(model: CnnModel, x: np.ndarray, t: np.ndarray) -> float:
    return bce_loss(model.forward(x), t)[0]


def grad_check(
    model: CnnModel,
    x: np.ndarray,
    target: np.ndarray,
    eps: float = 1e-4,
    tamper: tuple[int, int] | None = None,
) -> float:
    """Max relative error between analytic and numeric gradients.

    `x` is a (1,1,H,W) double input, `target` a (1,K) one-hot row.  With
    `tamper=(param_index, flat_index)` the analytic gradient of that one
    scalar is sign-flipped before comparison (fault-injection probe).
    Relative error per scalar is |a - n| / max(|a|, |n|, 1e-12).
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if model.params[0].dtype != np.float64:
        raise ValueError("grad_check requires a double-precision model")
    p = model.forward(x)
    _, gp = bce_loss(p, target)
    model.backward(gp)
    analytic = [g.copy() for g in model.grads]
    if tamper is not None:
        pi, fi = tamper
        analytic[pi].ravel()[fi] = -analytic[pi].ravel()[fi]
    worst = 0.0
    for param, ga in zip(model.params, analytic):
        flat = param.ravel()
        gflat = ga.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = _loss(model, x, target)
            flat[i] = orig - eps
            lo = _loss(model, x, target)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            a = gflat[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, err)
    return worst
