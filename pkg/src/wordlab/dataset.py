"""Corpus loading, per-class splitting, eligibility filtering, and statistics.

A "book" is one document treated as an independent classification dataset.
Manifests are UTF-8 TSV: ``book_id<TAB>class_label<TAB>origin<TAB>image_ref``
with '#' comment lines.  ``image_ref`` doubles as the sample id (it is
required to be unique within a book).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .seeds import sort_key

ORIGINS = ("human", "augmented")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    book_id: str
    class_label: str
    origin: str  # "human" | "augmented"
    image_ref: str
    source_id: str | None = None  # originating human sample for augmented records

    def __post_init__(self):
        if not self.sample_id:
            raise ValueError("empty sample_id")
        if not self.class_label:
            raise ValueError("empty class_label")
        if self.origin not in ORIGINS:
            raise ValueError(f"bad origin {self.origin!r}")
        if self.origin == "augmented" and not self.source_id:
            raise ValueError(f"augmented sample {self.sample_id} lacks a source record")


@dataclass(frozen=True)
class BookManifest:
    book_id: str
    samples: tuple[SampleRecord, ...]
    root: Path | None = field(default=None, compare=False)  # image_ref base dir

    def __post_init__(self):
        seen = set()
        for r in self.samples:
            if r.sample_id in seen:
                raise ManifestError(f"book {self.book_id}: duplicate sample_id {r.sample_id!r}")
            seen.add(r.sample_id)

    @property
    def classes(self) -> frozenset:
        return frozenset(r.class_label for r in self.samples)

    def human_samples(self) -> list[SampleRecord]:
        return [r for r in self.samples if r.origin == "human"]


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    train_fraction: Fraction = Fraction(7, 9)
    val_fraction: Fraction = Fraction(1, 9)
    test_fraction: Fraction = Fraction(1, 9)

    def __post_init__(self):
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fracs):
            raise ValueError("split fractions must be positive")
        if sum(fracs) != 1:
            raise ValueError("split fractions must sum to 1")


@dataclass(frozen=True)
class EligibilityRule:
    min_train_per_class: int = 20
    min_classes: int = 10

    def __post_init__(self):
        if self.min_train_per_class < 1 or self.min_classes < 1:
            raise ValueError("eligibility thresholds must be >= 1")


@dataclass(frozen=True)
class Split:
    train: tuple[SampleRecord, ...]
    val: tuple[SampleRecord, ...]
    test: tuple[SampleRecord, ...]


@dataclass(frozen=True)
class BookStats:
    n_classes: int
    n_human: int
    n_augmented: int

    @property
    def n_total(self) -> int:
        return self.n_human + self.n_augmented


@dataclass(frozen=True)
class ClassCountSummary:
    mean: float
    min: int
    max: int
    sd: float  # sample standard deviation (n-1)


def load_manifest(path) -> list[BookManifest]:
    """Parse a manifest file into one BookManifest per distinct book_id."""
    path = Path(path)
    books: dict[str, list[SampleRecord]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ManifestError(f"{path}: line {lineno}: expected 4 fields, got {len(fields)}")
            book_id, class_label, origin, image_ref = fields
            if origin not in ORIGINS:
                raise ManifestError(f"{path}: line {lineno}: unknown origin {origin!r}")
            # Persisted augmented images carry a "_m<k>" suffix (see the
            # augmentation module); strip it to recover the source id.
            source = None
            if origin == "augmented":
                source = re.sub(r"_m\d+(?=\.[^.]*$|$)", "", image_ref)
            try:
                rec = SampleRecord(
                    sample_id=image_ref,
                    book_id=book_id,
                    class_label=class_label,
                    origin=origin,
                    image_ref=image_ref,
                    source_id=source,
                )
            except ValueError as e:
                raise ManifestError(f"{path}: line {lineno}: {e}") from None
            books.setdefault(book_id, []).append(rec)
    out = []
    for book_id, recs in books.items():
        try:
            out.append(BookManifest(book_id, tuple(recs), root=path.parent))
        except ManifestError as e:
            raise ManifestError(f"{path}: {e}") from None
    return out


def save_manifest(books: list[BookManifest], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# book_id\tclass_label\torigin\timage_ref\n")
        for book in books:
            for r in book.samples:
                f.write(f"{r.book_id}\t{r.class_label}\t{r.origin}\t{r.image_ref}\n")


def _partition_counts(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    # train = round-half-up of the train fraction; the remainder is split as
    # evenly as possible between val and test, val getting the extra one.
    n_train = math.floor(n * spec.train_fraction + Fraction(1, 2))
    rest = n - n_train
    n_val = math.ceil(rest / 2)
    return n_train, n_val, rest - n_val


def split_book(book: BookManifest, spec: SplitSpec) -> Split:
    """Stratified per-class split of the human-origin records.

    Assignment depends only on (seed, book_id, sample_id), never on record
    order: within each class, records are ranked by a keyed hash and the
    partition boundaries are cut on that ranking.
    """
    by_class: dict[str, list[SampleRecord]] = {}
    for r in book.human_samples():
        by_class.setdefault(r.class_label, []).append(r)
    train, val, test = [], [], []
    for label in sorted(by_class):
        recs = by_class[label]
        n = len(recs)
        if n < 9:
            raise ValueError(
                f"book {book.book_id}: class {label!r} has {n} human samples; "
                "need >= 9 for a 7/9-1/9-1/9 split"
            )
        recs = sorted(recs, key=lambda r: (sort_key(spec.seed, book.book_id, r.sample_id), r.sample_id))
        n_train, n_val, _ = _partition_counts(n, spec)
        train.extend(recs[:n_train])
        val.extend(recs[n_train : n_train + n_val])
        test.extend(recs[n_train + n_val :])
    return Split(tuple(train), tuple(val), tuple(test))


@dataclass(frozen=True)
class EligibilityResult:
    accepted: bool
    book: BookManifest | None
    split: Split | None
    removed_classes: tuple[str, ...]
    reason: str | None  # set when rejected


def filter_eligible(book: BookManifest, split: Split, rule: EligibilityRule) -> EligibilityResult:
    """Drop classes that are too small in train; reject books left too small."""
    train_counts: dict[str, int] = {}
    for r in split.train:
        train_counts[r.class_label] = train_counts.get(r.class_label, 0) + 1
    removed = tuple(
        sorted(c for c in book.classes if train_counts.get(c, 0) < rule.min_train_per_class)
    )
    kept = book.classes - set(removed)
    if len(kept) < rule.min_classes:
        return EligibilityResult(
            False, None, None, removed,
            f"only {len(kept)} classes with >= {rule.min_train_per_class} "
            f"train samples (need {rule.min_classes})",
        )
    if not removed:
        return EligibilityResult(True, book, split, (), None)
    new_book = replace(book, samples=tuple(r for r in book.samples if r.class_label in kept))
    new_split = Split(
        tuple(r for r in split.train if r.class_label in kept),
        tuple(r for r in split.val if r.class_label in kept),
        tuple(r for r in split.test if r.class_label in kept),
    )
    return EligibilityResult(True, new_book, new_split, removed, None)


def book_stats(book: BookManifest) -> BookStats:
    n_human = sum(1 for r in book.samples if r.origin == "human")
    return BookStats(len(book.classes), n_human, len(book.samples) - n_human)


def class_count_summary(books: list[BookManifest]) -> ClassCountSummary:
    if not books:
        raise ValueError("no books to summarize")
    counts = np.array([len(b.classes) for b in books], dtype=np.float64)
    sd = float(counts.std(ddof=1)) if len(counts) > 1 else 0.0
    return ClassCountSummary(float(counts.mean()), int(counts.min()), int(counts.max()), sd)
