"""Experiment harness: run the three classification methods over suites of
books, record per-book results with timing and failure flags, apply the
retry policy, and emit CSV reports, summaries, and accuracy histograms.

Everything reported except wall-clock time is a pure function of
(manifests, config, seed): each book run derives its RNG from
(suite seed, book_id, method, attempt).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import bovw as bovw_mod
from . import centroid as centroid_mod
from . import imaging
from . import nn
from .augment import MorphParams, augment_training_set
from .bovw import SomSchedule
from .dataset import (
    BookManifest,
    EligibilityRule,
    SampleRecord,
    Split,
    SplitSpec,
    filter_eligible,
    split_book,
)
from .seeds import derive_seed, rng_for

METHODS = ("bovw", "cnn", "tapped")

CSV_HEADER = [
    "book_id", "method", "attempt", "n_classes", "n_train_human",
    "n_train_augmented", "n_test", "accuracy", "wall_seconds", "failed",
    "error_note",
]

# Surrogate tapped features (used when no tapped-feature file is provided):
# the image downscaled to 32x64 = 2048 raw intensities, matching the
# dimensionality of the ingested pre-trained feature files.
SURROGATE_H, SURROGATE_W = 32, 64


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    failure_threshold: float = 0.10
    max_attempts: int = 2
    out_dir: Path = Path("results")
    train: nn.TrainConfig = nn.TrainConfig()
    morph: MorphParams = MorphParams()
    # desk-scale SOM budget; the full 10-epoch/200k schedule is for offline
    # codebook building via the train-codebook command
    som: SomSchedule = SomSchedule(epochs=3, max_samples=20_000)
    som_grid: int = 15
    eligibility: EligibilityRule = EligibilityRule()
    partition_scheme: str = "odd_even"
    codebook_paths: tuple[str, ...] = ()
    tapped_dir: Path | None = None
    probe_images: int = 50  # train images sampled for codebook selection

    def __post_init__(self):
        if not (0.0 < self.failure_threshold < 1.0):
            raise ValueError("failure_threshold must be in (0,1)")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass(frozen=True)
class RunResult:
    book_id: str
    method: str
    attempt: int
    n_classes: int
    n_train_human: int
    n_train_augmented: int
    n_test: int
    accuracy: float
    wall_seconds: float
    failed: bool
    error_note: str = ""


@dataclass(frozen=True)
class MethodSummary:
    method: str
    n_books: int
    mean_accuracy: float  # percent
    sd_accuracy: float  # percent, sample sd over books


@dataclass(frozen=True)
class RetrySummary:
    n_retried: int
    still_failed: int
    improved: int
    worsened: int


def _load_images(book: BookManifest, records) -> list[tuple[SampleRecord, np.ndarray]]:
    if book.root is None:
        raise ValueError(f"book {book.book_id} has no image root directory")
    return [(r, imaging.load_pgm(Path(book.root) / r.image_ref)) for r in records]


def _sorted_pairs(items: list[tuple[SampleRecord, np.ndarray]]):
    return sorted(items, key=lambda ri: ri[0].sample_id)


def _run_bovw(train_items, test_items, config: ExperimentConfig, run_seed: int) -> float:
    train_items = [(r, imaging.prepare_bovw_scale(img)) for r, img in _sorted_pairs(train_items)]
    test_items = [(r, imaging.prepare_bovw_scale(img)) for r, img in _sorted_pairs(test_items)]
    if config.codebook_paths:
        candidates = [bovw_mod.load_codebook(p) for p in config.codebook_paths]
        probe_pick = rng_for(run_seed, "probe").permutation(len(train_items))
        probe_imgs = [train_items[i][1] for i in probe_pick[: config.probe_images]]
        chunks = [bovw_mod.extract_patches(img) for img in probe_imgs]
        probe = np.concatenate([c for c in chunks if len(c)]) if chunks else np.empty((0, 225))
        chosen = bovw_mod.select_codebook(candidates, probe)
        cb = next(c for c in candidates if c.codebook_id == chosen)
    else:
        # collect patches from a seeded random subset of the training images,
        # oversampling the SOM budget; pooling every image first would hold
        # gigabytes of descriptors on large books
        order = rng_for(run_seed, "descpool").permutation(len(train_items))
        target = 2 * config.som.max_samples
        chunks, n_pooled = [], 0
        for i in order:
            d = bovw_mod.extract_patches(train_items[i][1])
            if len(d):
                chunks.append(d)
                n_pooled += len(d)
            if n_pooled >= target:
                break
        descriptors = np.concatenate(chunks)
        cb = bovw_mod.train_som(
            descriptors,
            config.som_grid,
            config.som_grid,
            replace(config.som, seed=run_seed),
            codebook_id="book-local",
        )
    train_vecs = [(r.class_label, bovw_mod.bovw_histogram(img, cb)) for r, img in train_items]
    model = centroid_mod.fit_centroids(train_vecs)
    test_vecs = [(r.class_label, bovw_mod.bovw_histogram(img, cb)) for r, img in test_items]
    return centroid_mod.evaluate(model, test_vecs)


def _run_cnn(train_items, val_items, test_items, config: ExperimentConfig, run_seed: int) -> float:
    def stack(items):
        items = _sorted_pairs(items)
        # stacked at training precision; keeps large books within memory
        imgs = np.stack(
            [imaging.prepare_cnn_input(img).astype(config.train.dtype) for _, img in items]
        )
        return imgs, [r.class_label for r, _ in items]

    xtr, ytr = stack(train_items)
    xval, yval = stack(val_items) if val_items else (None, None)
    xte, yte = stack(test_items)
    cfg = replace(config.train, seed=run_seed)
    model, _ = nn.train_new(xtr, ytr, xval, yval, cfg)
    return nn.accuracy(model, xte, yte)


def _surrogate_vector(img: np.ndarray) -> np.ndarray:
    return imaging.resize_bilinear(img, SURROGATE_W, SURROGATE_H).ravel()


def _run_tapped(book, train_items, test_items, config: ExperimentConfig) -> tuple[float, dict]:
    """Nearest-mean on tapped features: from a per-book feature file when one
    exists, otherwise on surrogate downscaled-pixel vectors over the split."""
    if config.tapped_dir is not None:
        feat_path = Path(config.tapped_dir) / f"{book.book_id}.tsv"
        if feat_path.exists():
            feats = centroid_mod.load_tapped_features(feat_path)
            train_rows, test_rows = centroid_mod.partition_by_index(
                feats, config.partition_scheme
            )
            model = centroid_mod.fit_centroids(
                [(lab, v) for _, lab, v in sorted(train_rows, key=lambda r: r[0])]
            )
            acc = centroid_mod.evaluate(model, [(lab, v) for _, lab, v in test_rows])
            counts = {
                "n_classes": len({lab for _, lab, _ in feats.rows}),
                "n_train_human": len(train_rows),
                "n_train_augmented": 0,
                "n_test": len(test_rows),
            }
            return acc, counts
    train_vecs = [
        (r.class_label, _surrogate_vector(img)) for r, img in _sorted_pairs(train_items)
    ]
    model = centroid_mod.fit_centroids(train_vecs)
    test_vecs = [(r.class_label, _surrogate_vector(img)) for r, img in test_items]
    return centroid_mod.evaluate(model, test_vecs), {}


def run_book(
    book: BookManifest, method: str, config: ExperimentConfig, attempt: int = 1
) -> RunResult:
    """One training-and-testing event; errors become failed rows, not aborts."""
    started = time.perf_counter()
    run_seed = derive_seed(config.seed, book.book_id, method, attempt)
    n_classes = n_train_h = n_train_a = n_test = 0
    accuracy = 0.0
    note = ""
    try:
        split = split_book(book, SplitSpec(seed=run_seed))
        elig = filter_eligible(book, split, config.eligibility)
        if not elig.accepted:
            raise ValueError(f"book rejected: {elig.reason}")
        kept_book, split = elig.book, elig.split
        train_h = _load_images(kept_book, split.train)
        train_items = augment_training_set(train_h, replace(config.morph, seed=run_seed))
        n_classes = len(kept_book.classes)
        n_train_h = len(train_h)
        n_train_a = len(train_items) - n_train_h
        n_test = len(split.test)
        test_items = _load_images(kept_book, split.test)
        if method == "bovw":
            accuracy = _run_bovw(train_items, test_items, config, run_seed)
        elif method == "cnn":
            val_items = _load_images(kept_book, split.val)
            accuracy = _run_cnn(train_items, val_items, test_items, config, run_seed)
        elif method == "tapped":
            accuracy, counts = _run_tapped(kept_book, train_items, test_items, config)
            if counts:
                n_classes = counts["n_classes"]
                n_train_h = counts["n_train_human"]
                n_train_a = counts["n_train_augmented"]
                n_test = counts["n_test"]
        else:
            raise ValueError(f"unknown method {method!r}")
    except Exception as e:  # noqa: BLE001 - failed runs are recorded, not raised
        note = f"{type(e).__name__}: {e}"
        accuracy = 0.0
    wall = time.perf_counter() - started
    return RunResult(
        book_id=book.book_id,
        method=method,
        attempt=attempt,
        n_classes=n_classes,
        n_train_human=n_train_h,
        n_train_augmented=n_train_a,
        n_test=n_test,
        accuracy=accuracy,
        wall_seconds=wall,
        failed=accuracy < config.failure_threshold,
        error_note=note,
    )


def apply_retry(
    books: dict[str, BookManifest],
    results: list[RunResult],
    config: ExperimentConfig,
    retry_all: bool = False,
) -> tuple[list[RunResult], RetrySummary]:
    """Retry CNN runs with a freshly derived seed, up to max_attempts.

    By default only failed runs are retried; `retry_all` retries every CNN
    run (which is how retries can also worsen a previously good result).
    Returns the additional results and the three-way retry accounting.
    """
    extra: list[RunResult] = []
    pairs: list[tuple[RunResult, RunResult]] = []
    for first in results:
        if first.method != "cnn":
            continue
        if not first.failed and not retry_all:
            continue
        last = first
        for attempt in range(2, config.max_attempts + 1):
            if not last.failed and not retry_all:
                break
            last = run_book(books[first.book_id], "cnn", config, attempt=attempt)
            extra.append(last)
        if last is not first:
            pairs.append((first, last))
    return extra, classify_retries(pairs)


def classify_retries(pairs: list[tuple[RunResult, RunResult]]) -> RetrySummary:
    """Three-way retry accounting over (first attempt, final attempt) pairs:
    still failed, improved above the threshold, or worsened below it."""
    still = improved = worsened = 0
    for first, last in pairs:
        if first.failed and last.failed:
            still += 1
        elif first.failed and not last.failed:
            improved += 1
        elif not first.failed and last.failed:
            worsened += 1
    return RetrySummary(len(pairs), still, improved, worsened)


def run_suite(
    books: list[BookManifest], config: ExperimentConfig
) -> tuple[list[RunResult], RetrySummary]:
    """Run every (book, method), apply the retry policy, and write the CSV."""
    if not books:
        raise ValueError("no books to run")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    # fail before any computation if the output location is unusable
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write(",".join(CSV_HEADER) + "\n")
    by_id = {b.book_id: b for b in books}
    results = [
        run_book(book, method, config)
        for book in sorted(books, key=lambda b: b.book_id)
        for method in sorted(config.methods)
    ]
    retry_summary = RetrySummary(0, 0, 0, 0)
    if config.max_attempts > 1 and "cnn" in config.methods:
        extra, retry_summary = apply_retry(by_id, results, config)
        results.extend(extra)
    results.sort(key=lambda r: (r.book_id, r.method, r.attempt))
    write_results_csv(results, csv_path)
    return results, retry_summary


def write_results_csv(results: list[RunResult], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in results:
            writer.writerow(
                [
                    r.book_id, r.method, r.attempt, r.n_classes, r.n_train_human,
                    r.n_train_augmented, r.n_test, f"{r.accuracy:.6f}",
                    f"{r.wall_seconds:.3f}", "true" if r.failed else "false",
                    r.error_note,
                ]
            )


def read_results_csv(path) -> list[RunResult]:
    results = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        for row in reader:
            results.append(
                RunResult(
                    book_id=row["book_id"],
                    method=row["method"],
                    attempt=int(row["attempt"]),
                    n_classes=int(row["n_classes"]),
                    n_train_human=int(row["n_train_human"]),
                    n_train_augmented=int(row["n_train_augmented"]),
                    n_test=int(row["n_test"]),
                    accuracy=float(row["accuracy"]),
                    wall_seconds=float(row["wall_seconds"]),
                    failed=row["failed"] == "true",
                    error_note=row["error_note"],
                )
            )
    return results


def best_attempts(results: list[RunResult]) -> list[RunResult]:
    """Highest-accuracy attempt per (book, method)."""
    best: dict[tuple[str, str], RunResult] = {}
    for r in results:
        key = (r.book_id, r.method)
        if key not in best or r.accuracy > best[key].accuracy:
            best[key] = r
    return [best[k] for k in sorted(best)]


def summarize(results: list[RunResult], weighted: bool = False) -> list[MethodSummary]:
    """Per-method mean and sample sd of accuracy over books, in percent.

    Uses the best attempt per (book, method).  Unweighted by default; the
    weighted variant weights each book by its test-set size.
    """
    if not results:
        raise ValueError("no results to summarize")
    by_method: dict[str, list[RunResult]] = {}
    for r in best_attempts(results):
        by_method.setdefault(r.method, []).append(r)
    out = []
    for method in sorted(by_method):
        rows = by_method[method]
        acc = np.array([r.accuracy for r in rows]) * 100.0
        if weighted:
            w = np.array([max(r.n_test, 1) for r in rows], dtype=np.float64)
            mean = float(np.average(acc, weights=w))
        else:
            mean = float(acc.mean())
        sd = float(acc.std(ddof=1)) if len(acc) > 1 else 0.0
        out.append(MethodSummary(method, len(rows), mean, sd))
    return out


def histogram_report(
    results: list[RunResult], band_width: float = 5.0
) -> dict[str, list[tuple[float, float, int]]]:
    """Book counts per accuracy band [k*w, (k+1)*w) per method; the last band
    is closed at 100."""
    if not results:
        raise ValueError("no results")
    n_bands = int(np.ceil(100.0 / band_width))
    report: dict[str, list[tuple[float, float, int]]] = {}
    for r in best_attempts(results):
        bands = report.setdefault(
            r.method,
            [(k * band_width, min((k + 1) * band_width, 100.0), 0) for k in range(n_bands)],
        )
        k = min(int((r.accuracy * 100.0) // band_width), n_bands - 1)
        lo, hi, count = bands[k]
        bands[k] = (lo, hi, count + 1)
    return report


def accuracy_vs_factor(results: list[RunResult], factor: str) -> list[tuple[float, float, str, str]]:
    """(factor value, accuracy, method, book_id) rows sorted ascending by
    factor, ties by book_id; one row per result."""
    def value(r: RunResult) -> float:
        if factor == "n_classes":
            return float(r.n_classes)
        if factor == "avg_train_per_class":
            return r.n_train_human / r.n_classes if r.n_classes else 0.0
        if factor == "n_train_total":
            return float(r.n_train_human + r.n_train_augmented)
        raise ValueError(f"unknown factor {factor!r}")

    rows = [(value(r), r.accuracy, r.method, r.book_id) for r in results]
    rows.sort(key=lambda t: (t[0], t[3]))
    return rows


def write_summary_tsv(summaries: list[MethodSummary], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("method\tn_books\tmean_accuracy_pct\tsd_accuracy_pct\n")
        for s in summaries:
            f.write(f"{s.method}\t{s.n_books}\t{s.mean_accuracy:.2f}\t{s.sd_accuracy:.2f}\n")


def write_histogram_tsv(report, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("method\tband_lo_pct\tband_hi_pct\tn_books\n")
        for method in sorted(report):
            for lo, hi, count in report[method]:
                f.write(f"{method}\t{lo:g}\t{hi:g}\t{count}\n")


def write_factor_tsv(rows, factor: str, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{factor}\taccuracy\tmethod\tbook_id\n")
        for value, acc, method, book_id in rows:
            f.write(f"{value:g}\t{acc:.6f}\t{method}\t{book_id}\n")
