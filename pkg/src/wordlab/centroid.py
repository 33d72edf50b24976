"""Nearest-mean classification, shared by the BOVW-histogram path and the
tapped (pre-trained network bottleneck) feature path.

"Training" is just a per-class arithmetic mean; classification is a ranked
Euclidean nearest-centroid search.  Tapped feature vectors are ingested from
TSV files, never computed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CentroidModel:
    labels: tuple[str, ...]  # sorted
    centroids: np.ndarray  # (n_classes, dim)

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class TappedFeatureSet:
    dim: int
    rows: tuple[tuple[str, str, np.ndarray], ...]  # (sample_id, class_label, vector)


def fit_centroids(vectors: list[tuple[str, np.ndarray]]) -> CentroidModel:
    """Per-class mean of (class_label, vector) pairs.

    Accumulation runs in input order within each class; callers wanting
    bit-reproducible centroids should present pairs sorted by sample id.
    """
    if not vectors:
        raise ValueError("no vectors to fit")
    dim = len(vectors[0][1])
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for label, v in vectors:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (dim,):
            raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape}")
        if label in sums:
            sums[label] += v
            counts[label] += 1
        else:
            sums[label] = v.copy()
            counts[label] = 1
    labels = tuple(sorted(sums))
    centroids = np.stack([sums[c] / counts[c] for c in labels])
    return CentroidModel(labels, centroids)


def classify(model: CentroidModel, query: np.ndarray) -> tuple[str, list[tuple[str, float]]]:
    """Nearest centroid by Euclidean distance, plus the full ranked hit list.

    Exact distance ties break toward the lexicographically smaller label
    (labels are stored sorted, so a stable sort on distance suffices).
    """
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (model.dim,):
        raise ValueError(f"dimension mismatch: model dim {model.dim}, query {query.shape}")
    d = np.linalg.norm(model.centroids - query, axis=1)
    order = np.argsort(d, kind="stable")
    ranked = [(model.labels[i], float(d[i])) for i in order]
    return ranked[0][0], ranked


def classify_batch(model: CentroidModel, queries: np.ndarray) -> list[str]:
    """Top-1 labels for a (N, dim) query matrix (same tie rule as classify)."""
    q = np.asarray(queries, dtype=np.float64)
    if q.shape[1] != model.dim:
        raise ValueError(f"dimension mismatch: model dim {model.dim}, queries {q.shape}")
    c2 = np.einsum("ij,ij->i", model.centroids, model.centroids)
    d2 = c2 - 2.0 * (q @ model.centroids.T) + np.einsum("ij,ij->i", q, q)[:, None]
    # labels are sorted, argmin returns the first (smallest-label) minimum
    return [model.labels[i] for i in d2.argmin(axis=1)]


def evaluate(model: CentroidModel, test: list[tuple[str, np.ndarray]]) -> float:
    """Fraction of test vectors whose nearest centroid carries the true label."""
    if not test:
        raise ValueError("empty test set")
    queries = np.stack([np.asarray(v, dtype=np.float64) for _, v in test])
    predicted = classify_batch(model, queries)
    hits = sum(1 for (label, _), pred in zip(test, predicted) if pred == label)
    return hits / len(test)


def load_tapped_features(path) -> TappedFeatureSet:
    """TSV: header line "dims<TAB>D", rows "sample_id<TAB>label<TAB>v0..v(D-1)"."""
    path = Path(path)
    dim = None
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if dim is None:
                if len(fields) != 2 or fields[0] != "dims":
                    raise ValueError(f"{path}: line {lineno}: expected header 'dims<TAB>D'")
                dim = int(fields[1])
                if dim < 1:
                    raise ValueError(f"{path}: line {lineno}: bad dimension {dim}")
                continue
            if len(fields) != dim + 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected {dim} values, got {len(fields) - 2}"
                )
            try:
                vec = np.array(fields[2:], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric feature value") from None
            rows.append((fields[0], fields[1], vec))
    if dim is None:
        raise ValueError(f"{path}: missing 'dims' header")
    return TappedFeatureSet(dim, tuple(rows))


def partition_by_index(
    feature_set: TappedFeatureSet, scheme: str
) -> tuple[list[tuple[str, str, np.ndarray]], list[tuple[str, str, np.ndarray]]]:
    """Index-based train/test partition of tapped rows (0-based file order).

    "odd_even": even indices train, odd test (50/50).
    "mod8": index % 8 == 7 test, the rest train (7/8 vs 1/8).
    """
    if len(feature_set.rows) < 2:
        raise ValueError("need at least 2 rows to partition")
    if scheme == "odd_even":
        train = [r for i, r in enumerate(feature_set.rows) if i % 2 == 0]
        test = [r for i, r in enumerate(feature_set.rows) if i % 2 == 1]
    elif scheme == "mod8":
        train = [r for i, r in enumerate(feature_set.rows) if i % 8 != 7]
        test = [r for i, r in enumerate(feature_set.rows) if i % 8 == 7]
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}")
    if not train or not test:
        raise ValueError(f"scheme {scheme!r} left a partition empty")
    return train, test
