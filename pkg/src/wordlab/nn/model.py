"""Network architecture description, parameter initialization, and
checkpoint I/O.

The word classifier is the fixed stack: three conv+relu blocks with max
pooling after each, a flatten, a 150-unit relu layer, and a per-class
sigmoid output trained with binary cross-entropy.  A scaled-down variant of
the same stack exists for gradient checking.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..seeds import rng_for
from .layers import Conv2D, Dense, Flatten, MaxPool2D, ReLU, Sigmoid

CHECKPOINT_MAGIC = b"WFNN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class CnnArchitecture:
    n_classes: int
    input_w: int = 100
    input_h: int = 50
    conv_blocks: tuple[tuple[int, int], ...] = ((32, 3), (32, 3), (24, 3))  # (maps, kernel)
    pools: tuple[tuple[int, int], ...] = ((3, 2), (2, 2), (1, 1))  # (window, stride)
    dense_width: int = 150

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if len(self.conv_blocks) != len(self.pools):
            raise ValueError("one pool per conv block")


def word_architecture(n_classes: int) -> CnnArchitecture:
    """The full-size 100x50 word classifier."""
    return CnnArchitecture(n_classes)


def reduced_architecture(n_classes: int = 5) -> CnnArchitecture:
    """Small 20x10 variant used for finite-difference gradient checking.

    Same layer types as the full stack; kernels and pools shrunk so the
    stack fits the 20x10 input.
    """
    return CnnArchitecture(
        n_classes,
        input_w=20,
        input_h=10,
        conv_blocks=((4, 3), (4, 3), (3, 2)),
        pools=((2, 2), (1, 1), (1, 1)),
        dense_width=13,
    )


def compute_shapes(arch: CnnArchitecture) -> list[tuple[int, int, int]]:
    """Propagate (channels, height, width) through the conv/pool stack.

    Valid padding throughout: conv shrinks each axis by kernel-1; pooling
    yields floor((n - window)/stride) + 1.  Raises if any stage underflows.
    """
    shapes = [(1, arch.input_h, arch.input_w)]
    c, h, w = shapes[0]
    for (maps, ksize), (window, stride) in zip(arch.conv_blocks, arch.pools):
        if h < ksize or w < ksize:
            raise ValueError(f"conv kernel {ksize} does not fit {h}x{w}")
        c, h, w = maps, h - ksize + 1, w - ksize + 1
        shapes.append((c, h, w))
        if h < window or w < window:
            raise ValueError(f"pool window {window} does not fit {h}x{w}")
        h = (h - window) // stride + 1
        w = (w - window) // stride + 1
        shapes.append((c, h, w))
    return shapes


@dataclass
class CnnModel:
    architecture: CnnArchitecture
    layers: list = field(default_factory=list)
    class_labels: tuple[str, ...] | None = None

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, gy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            gy = layer.backward(gy)
        return gy


def build_model(n_classes: int, seed: int = 0, arch: CnnArchitecture | None = None,
                dtype=np.float32) -> CnnModel:
    """Instantiate the stack with He-uniform weights for relu layers,
    Glorot-uniform for the final sigmoid layer, and zero biases."""
    if arch is None:
        arch = word_architecture(n_classes)
    elif arch.n_classes != n_classes:
        raise ValueError("n_classes does not match the architecture")
    shapes = compute_shapes(arch)
    rng = rng_for(seed, "init", arch)
    layers = []
    c_in = 1
    for (maps, ksize), (window, stride) in zip(arch.conv_blocks, arch.pools):
        conv = Conv2D(c_in, maps, ksize, dtype=dtype, needs_input_grad=bool(layers))
        fan_in = c_in * ksize * ksize
        bound = np.sqrt(6.0 / fan_in)
        conv.w[...] = rng.uniform(-bound, bound, conv.w.shape)
        layers += [conv, ReLU(), MaxPool2D(window, stride)]
        c_in = maps
    c, h, w = shapes[-1]
    flat = c * h * w
    d1 = Dense(flat, arch.dense_width, dtype=dtype)
    bound = np.sqrt(6.0 / flat)
    d1.w[...] = rng.uniform(-bound, bound, d1.w.shape)
    d2 = Dense(arch.dense_width, arch.n_classes, dtype=dtype)
    bound = np.sqrt(6.0 / (arch.dense_width + arch.n_classes))
    d2.w[...] = rng.uniform(-bound, bound, d2.w.shape)
    layers += [Flatten(), d1, ReLU(), d2, Sigmoid()]
    return CnnModel(arch, layers)


def save_model(model: CnnModel, path) -> None:
    """WFNN checkpoint: magic, version, architecture descriptor, labels,
    then all parameters as little-endian f32 in layer order."""
    arch = model.architecture
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<HIHHH", CHECKPOINT_VERSION, arch.n_classes,
                            arch.input_w, arch.input_h, arch.dense_width))
        f.write(struct.pack("<H", len(arch.conv_blocks)))
        for (maps, ksize), (window, stride) in zip(arch.conv_blocks, arch.pools):
            f.write(struct.pack("<HHHH", maps, ksize, window, stride))
        labels = model.class_labels or ()
        f.write(struct.pack("<I", len(labels)))
        for lab in labels:
            enc = lab.encode("utf-8")
            f.write(struct.pack("<H", len(enc)))
            f.write(enc)
        for p in model.params:
            f.write(np.ascontiguousarray(p, dtype="<f4").tobytes())


def load_model(path, dtype=np.float32) -> CnnModel:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint")
    version, n_classes, input_w, input_h, dense_width = struct.unpack("<HIHHH", data[4:16])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (n_blocks,) = struct.unpack("<H", data[16:18])
    pos = 18
    conv_blocks, pools = [], []
    for _ in range(n_blocks):
        maps, ksize, window, stride = struct.unpack("<HHHH", data[pos : pos + 8])
        conv_blocks.append((maps, ksize))
        pools.append((window, stride))
        pos += 8
    (n_labels,) = struct.unpack("<I", data[pos : pos + 4])
    pos += 4
    labels = []
    for _ in range(n_labels):
        (ln,) = struct.unpack("<H", data[pos : pos + 2])
        pos += 2
        labels.append(data[pos : pos + ln].decode("utf-8"))
        pos += ln
    arch = CnnArchitecture(n_classes, input_w, input_h, tuple(conv_blocks), tuple(pools),
                           dense_width)
    model = build_model(n_classes, seed=0, arch=arch, dtype=dtype)
    for p in model.params:
        count = p.size * 4
        raw = data[pos : pos + count]
        if len(raw) != count:
            raise ValueError(f"{path}: truncated checkpoint")
        p[...] = np.frombuffer(raw, dtype="<f4").reshape(p.shape)
        pos += count
    model.class_labels = tuple(labels) or None
    return model
