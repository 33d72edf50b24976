"""Network layers with explicit forward/backward passes, the per-class
binary cross-entropy loss, and the Adam optimizer.

Layers hold their parameters in ``params`` and, after ``backward``, the
matching gradients in ``grads``.  Convolution and pooling dispatch to the
selected kernel backend.
"""

from __future__ import annotations

import numpy as np

from .. import kernels

BCE_CLAMP = 1e-7


class Layer:
    params: list[np.ndarray]
    grads: list[np.ndarray]

    def __init__(self):
        self.params = []
        self.grads = []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError


class Conv2D(Layer):
    """Valid cross-correlation, stride 1."""

    def __init__(self, in_channels, out_channels, kernel_size, dtype=np.float32,
                 needs_input_grad=True):
        super().__init__()
        self.kernel_size = kernel_size
        self.needs_input_grad = needs_input_grad  # False for a network's first layer
        self.w = np.zeros((out_channels, in_channels, kernel_size, kernel_size), dtype=dtype)
        self.b = np.zeros(out_channels, dtype=dtype)
        self.params = [self.w, self.b]
        self._x = None

    def forward(self, x):
        if x.shape[2] < self.kernel_size or x.shape[3] < self.kernel_size:
            raise ValueError(
                f"kernel {self.kernel_size} larger than input {x.shape[2]}x{x.shape[3]}"
            )
        self._x = np.ascontiguousarray(x)
        return kernels.conv2d_forward(self._x, self.w, self.b)

    def backward(self, gy):
        gx, gw, gb = kernels.conv2d_backward(
            self._x, self.w, np.ascontiguousarray(gy), need_gx=self.needs_input_grad
        )
        self.grads = [gw, gb]
        return gx


class MaxPool2D(Layer):
    def __init__(self, window, stride):
        super().__init__()
        if window < 1 or stride < 1:
            raise ValueError("window and stride must be >= 1")
        self.window = window
        self.stride = stride
        self._arg = None
        self._in_hw = None

    def forward(self, x):
        if x.shape[2] < self.window or x.shape[3] < self.window:
            raise ValueError(f"pool window {self.window} larger than input {x.shape[2:]}")
        self._in_hw = x.shape[2:]
        if self.window == 1 and self.stride == 1:
            # identity layer (the architecture keeps pool(1,1) explicit)
            self._arg = None
            return x
        y, self._arg = kernels.maxpool_forward(
            np.ascontiguousarray(x), self.window, self.stride
        )
        return y

    def backward(self, gy):
        self.grads = []
        if self._arg is None:
            return gy
        h, w = self._in_hw
        return kernels.maxpool_backward(np.ascontiguousarray(gy), self._arg, h, w)


class ReLU(Layer):
    def forward(self, x):
        y = np.maximum(x, 0)
        self._mask = y > 0
        return y

    def backward(self, gy):
        self.grads = []
        return np.where(self._mask, gy, 0)


class Sigmoid(Layer):
    def forward(self, x):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, gy):
        self.grads = []
        return gy * self._y * (1.0 - self._y)


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy):
        self.grads = []
        return gy.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_features, out_features, dtype=np.float32):
        super().__init__()
        self.w = np.zeros((in_features, out_features), dtype=dtype)
        self.b = np.zeros(out_features, dtype=dtype)
        self.params = [self.w, self.b]

    def forward(self, x):
        if x.shape[1] != self.w.shape[0]:
            raise ValueError(f"dense expects {self.w.shape[0]} features, got {x.shape[1]}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, gy):
        self.grads = [self._x.T @ gy, gy.sum(axis=0)]
        return gy @ self.w.T


def bce_loss(predictions: np.ndarray, targets: np.ndarray):
    """Per-class binary cross-entropy against a one-hot target.

    Loss is the mean over classes, then the mean over the batch.  Predictions
    are clamped away from 0/1 so the loss stays finite.  Returns
    (loss, gradient w.r.t. predictions).
    """
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch {predictions.shape} vs {targets.shape}")
    rows_onehot = np.all((targets == 0) | (targets == 1), axis=1) & (targets.sum(axis=1) == 1)
    if not np.all(rows_onehot):
        raise ValueError("targets must be one-hot")
    b, k = predictions.shape
    p = np.clip(predictions, BCE_CLAMP, 1.0 - BCE_CLAMP)
    loss = float(-(targets * np.log(p) + (1.0 - targets) * np.log1p(-p)).mean())
    grad = ((p - targets) / (p * (1.0 - p)) / (b * k)).astype(predictions.dtype)
    return loss, grad


class Adam:
    """Bias-corrected Adam; one step per batch."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads):
        if len(grads) != len(self.params):
            raise ValueError("gradient count does not match parameter count")
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} does not match param {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.epsilon)
