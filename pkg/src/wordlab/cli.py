"""Command-line interface.

Subcommands:
  gen-synth      synthetic-book spec file -> PGM images + manifests
  train-codebook manifest -> SOM codebook file
  run            manifests + config -> results CSV
  report         results CSV -> summary / histogram / accuracy-vs-factor TSVs
  bench          compare compiled vs numpy kernel backends
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bovw, dataset, harness, synth
from .augment import MorphParams
from .bovw import SomSchedule
from .dataset import EligibilityRule
from .nn import TrainConfig


def parse_kv_file(path) -> dict[str, str]:
    """Flat key=value config text; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def config_from_dict(kv: dict[str, str]) -> harness.ExperimentConfig:
    def get(key, cast, default):
        return cast(kv[key]) if key in kv else default

    train = TrainConfig(
        epochs=get("epochs", int, 15),
        batch_size=get("batch_size", int, 32),
        precision=get("precision", str, "single"),
        lr=get("lr", float, 0.001),
    )
    morph = MorphParams(
        amplitude=get("morph_amplitude", float, 2.5),
        smoothing_radius=get("morph_radius", float, 8.0),
        variants_per_sample=get("morph_variants", int, 5),
    )
    som = SomSchedule(
        epochs=get("som_epochs", int, 3),
        lr_start=get("som_lr_start", float, 0.9),
        lr_end=get("som_lr_end", float, 0.01),
        max_samples=get("som_samples", int, 20_000),
    )
    rule = EligibilityRule(
        min_train_per_class=get("min_train_per_class", int, 20),
        min_classes=get("min_classes", int, 10),
    )
    codebooks = tuple(p for p in kv.get("codebooks", "").split(",") if p)
    return harness.ExperimentConfig(
        methods=tuple(m for m in get("methods", str, "bovw,cnn,tapped").split(",") if m),
        seed=get("seed", int, 0),
        failure_threshold=get("failure_threshold", float, 0.10),
        max_attempts=get("max_attempts", int, 2),
        out_dir=Path(get("out_dir", str, "results")),
        train=train,
        morph=morph,
        som=som,
        som_grid=get("som_grid", int, 15),
        eligibility=rule,
        partition_scheme=get("partition_scheme", str, "odd_even"),
        codebook_paths=codebooks,
        tapped_dir=Path(kv["tapped_dir"]) if "tapped_dir" in kv else None,
        probe_images=get("probe_images", int, 50),
    )


def parse_synth_spec(path) -> list[synth.SynthBookSpec]:
    """Synthetic suite spec: shared key=value lines plus a `books` list of
    book_id:n_classes:samples_per_class[:style_family] entries."""
    kv = parse_kv_file(path)
    if "books" not in kv:
        raise ValueError(f"{path}: missing 'books' key")
    shared = dict(
        image_w=int(kv.get("image_w", 200)),
        image_h=int(kv.get("image_h", 100)),
        strokes_min=int(kv.get("strokes_min", 3)),
        strokes_max=int(kv.get("strokes_max", 8)),
        jitter_amplitude=float(kv.get("jitter_amplitude", 2.0)),
        noise_sigma=float(kv.get("noise_sigma", 0.03)),
        seed=int(kv.get("seed", 0)),
    )
    specs = []
    for entry in kv["books"].split(","):
        parts = entry.strip().split(":")
        if len(parts) not in (3, 4):
            raise ValueError(
                f"{path}: bad book entry {entry!r} "
                "(want book_id:n_classes:samples_per_class[:style_family])"
            )
        specs.append(
            synth.SynthBookSpec(
                book_id=parts[0],
                n_classes=int(parts[1]),
                samples_per_class=int(parts[2]),
                style_family=int(parts[3]) if len(parts) == 4 else 0,
                **shared,
            )
        )
    return specs


def cmd_gen_synth(args) -> int:
    specs = parse_synth_spec(args.spec)
    out = Path(args.out)
    for spec in specs:
        book = synth.generate_book(spec, out)
        print(f"{book.book_id}: {len(book.classes)} classes, {len(book.samples)} samples")
    return 0


def cmd_train_codebook(args) -> int:
    books = dataset.load_manifest(args.manifest)
    if args.book is not None:
        books = [b for b in books if b.book_id == args.book]
        if not books:
            raise ValueError(f"book {args.book!r} not in manifest")
    from . import imaging

    chunks = []
    for book in books:
        for rec in book.samples:
            img = imaging.prepare_bovw_scale(imaging.load_pgm(Path(book.root) / rec.image_ref))
            p = bovw.extract_patches(img)
            if len(p):
                chunks.append(p)
    descriptors = np.concatenate(chunks)
    schedule = SomSchedule(epochs=args.epochs, max_samples=args.samples, seed=args.seed)
    cb = bovw.train_som(descriptors, args.grid, args.grid, schedule,
                        codebook_id=Path(args.out).stem)
    bovw.save_codebook(cb, args.out)
    qe = bovw.quantization_error(cb, descriptors)
    print(f"{cb.codebook_id}: {cb.grid_w}x{cb.grid_h} units, "
          f"{descriptors.shape[0]} descriptors, quantization error {qe:.4f}")
    return 0


def cmd_run(args) -> int:
    kv = parse_kv_file(args.config) if args.config else {}
    config = config_from_dict(kv)
    if args.out:
        config = replace(config, out_dir=Path(args.out))
    books = []
    for m in args.manifests:
        books.extend(dataset.load_manifest(m))
    results, retries = harness.run_suite(books, config)
    print(f"wrote {Path(config.out_dir) / 'results.csv'} ({len(results)} rows)")
    if retries.n_retried:
        print(
            f"retries: {retries.n_retried} retried, {retries.still_failed} still failed, "
            f"{retries.improved} improved, {retries.worsened} worsened"
        )
    for s in harness.summarize(results):
        print(f"{s.method}: n={s.n_books} mean={s.mean_accuracy:.1f}% sd={s.sd_accuracy:.1f}%")
    return 0


def cmd_report(args) -> int:
    results = harness.read_results_csv(args.csv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.write_summary_tsv(harness.summarize(results), out / "summary.tsv")
    harness.write_histogram_tsv(
        harness.histogram_report(results, band_width=args.band_width), out / "histogram.tsv"
    )
    for factor in ("n_classes", "avg_train_per_class", "n_train_total"):
        harness.write_factor_tsv(
            harness.accuracy_vs_factor(results, factor), factor,
            out / f"accuracy_vs_{factor}.tsv",
        )
    print(f"reports written to {out}")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_benchmark
    from .kernels import BACKEND, HAVE_COMPILED

    print(f"active backend: {BACKEND} (compiled extension {'present' if HAVE_COMPILED else 'absent'})")
    run_benchmark(np.float64 if args.double else np.float32)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wordlab",
                                     description="Word-image classification lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate synthetic books from a spec file")
    p.add_argument("spec", help="key=value spec file with a 'books' list")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("train-codebook", help="train a SOM codebook from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="codebook output file")
    p.add_argument("--book", help="restrict to one book_id")
    p.add_argument("--grid", type=int, default=15)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("run", help="run the method suite over books")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--config", help="key=value experiment config file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="aggregate a results CSV into TSV reports")
    p.add_argument("csv")
    p.add_argument("--out", default="reports")
    p.add_argument("--band-width", type=float, default=5.0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", help="benchmark compiled vs numpy kernels")
    p.add_argument("--double", action="store_true", help="use float64")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
