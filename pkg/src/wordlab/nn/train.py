"""Training loop, prediction, and accuracy for the word classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeds import rng_for
from .layers import Adam, bce_loss
from .model import CnnModel, build_model


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 32
    seed: int = 0
    precision: str = "single"  # "single" | "double"
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.precision not in ("single", "double"):
            raise ValueError(f"unknown precision {self.precision!r}")

    @property
    def dtype(self):
        return np.float32 if self.precision == "single" else np.float64


def _as_batch_input(images: np.ndarray, dtype) -> np.ndarray:
    # (N,H,W) -> (N,1,H,W)
    return np.ascontiguousarray(images[:, None, :, :], dtype=dtype)


def predict_scores(model: CnnModel, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Per-class sigmoid scores, (N, n_classes)."""
    dtype = model.params[0].dtype
    outs = []
    for s in range(0, images.shape[0], batch_size):
        outs.append(model.forward(_as_batch_input(images[s : s + batch_size], dtype)))
    return np.concatenate(outs, axis=0)


def predict(model: CnnModel, img: np.ndarray) -> tuple[str, np.ndarray]:
    """(label, per-class scores) for one image; argmax, ties to lowest index."""
    if model.class_labels is None:
        raise ValueError("model carries no class labels (untrained?)")
    scores = predict_scores(model, img[None, :, :])[0]
    return model.class_labels[int(scores.argmax())], scores


def accuracy(model: CnnModel, images: np.ndarray, labels: list[str]) -> float:
    """Word accuracy: fraction of images whose argmax class is the truth."""
    if len(labels) == 0:
        raise ValueError("empty test set")
    if model.class_labels is None:
        raise ValueError("model carries no class labels (untrained?)")
    scores = predict_scores(model, images)
    pred = scores.argmax(axis=1)
    index = {c: i for i, c in enumerate(model.class_labels)}
    hits = sum(1 for p, lab in zip(pred, labels) if index.get(lab, -1) == p)
    return hits / len(labels)


def train(
    model: CnnModel,
    train_images: np.ndarray,
    train_labels: list[str],
    val_images: np.ndarray | None,
    val_labels: list[str] | None,
    config: TrainConfig = TrainConfig(),
) -> list[dict]:
    """Train in place for the configured number of epochs; returns per-epoch
    metrics (train loss, train and validation word accuracy).

    The label index is the sorted class set of the training labels and is
    stored on the model.  Every epoch reshuffles with a seed derived from
    (config.seed, epoch); the final model is simply the last epoch's (the
    validation set is logged, never used for stopping or selection).
    """
    classes = tuple(sorted(set(train_labels)))
    if model.class_labels is None:
        model.class_labels = classes
    index = {c: i for i, c in enumerate(model.class_labels)}
    missing = [c for c in classes if c not in index]
    if missing:
        raise ValueError(f"classes absent from the model's label index: {missing[:5]}")
    k = len(model.class_labels)
    dtype = config.dtype
    y_idx = np.array([index[c] for c in train_labels])
    n = train_images.shape[0]
    optimizer = Adam(model.params, lr=config.lr, beta1=config.beta1,
                     beta2=config.beta2, epsilon=config.epsilon)
    metrics = []
    for epoch in range(config.epochs):
        order = rng_for(config.seed, "shuffle", epoch).permutation(n)
        total_loss = 0.0
        hits = 0
        for s in range(0, n, config.batch_size):
            sel = order[s : s + config.batch_size]
            x = _as_batch_input(train_images[sel], dtype)
            t = np.zeros((len(sel), k), dtype=dtype)
            t[np.arange(len(sel)), y_idx[sel]] = 1.0
            p = model.forward(x)
            loss, gp = bce_loss(p, t)
            total_loss += loss * len(sel)
            hits += int((p.argmax(axis=1) == y_idx[sel]).sum())
            model.backward(gp)
            optimizer.step(model.grads)
        entry = {
            "epoch": epoch + 1,
            "train_loss": total_loss / n,
            "train_acc": hits / n,
        }
        if val_images is not None and len(val_labels or ()) > 0:
            entry["val_acc"] = accuracy(model, val_images, val_labels)
        metrics.append(entry)
    return metrics


def train_new(
    train_images: np.ndarray,
    train_labels: list[str],
    val_images: np.ndarray | None,
    val_labels: list[str] | None,
    config: TrainConfig = TrainConfig(),
) -> tuple[CnnModel, list[dict]]:
    """Build a fresh full-size model for the training label set and train it."""
    classes = tuple(sorted(set(train_labels)))
    model = build_model(len(classes), seed=config.seed, dtype=config.dtype)
    model.class_labels = classes
    metrics = train(model, train_images, train_labels, val_images, val_labels, config)
    return model, metrics
