"""End-to-end command-line workflows."""

from pathlib import Path

import pytest

from wordlab.cli import config_from_dict, main, parse_kv_file, parse_synth_spec


def test_parse_kv_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nseed = 5\nmethods=bovw,tapped  # inline\n\n")
    assert parse_kv_file(p) == {"seed": "5", "methods": "bovw,tapped"}


def test_parse_kv_file_bad_line(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("just words\n")
    with pytest.raises(ValueError, match="key=value"):
        parse_kv_file(p)


def test_config_from_dict_defaults_and_overrides():
    cfg = config_from_dict({})
    assert cfg.train.epochs == 15
    assert cfg.morph.variants_per_sample == 5
    assert cfg.failure_threshold == 0.10
    cfg = config_from_dict({"epochs": "2", "methods": "cnn", "seed": "9"})
    assert cfg.train.epochs == 2
    assert cfg.methods == ("cnn",)
    assert cfg.seed == 9


def test_parse_synth_spec(tmp_path):
    p = tmp_path / "suite.cfg"
    p.write_text("seed=4\nimage_w=120\nbooks=alpha:10:26, beta:12:30:1\n")
    specs = parse_synth_spec(p)
    assert [s.book_id for s in specs] == ["alpha", "beta"]
    assert specs[0].n_classes == 10 and specs[0].samples_per_class == 26
    assert specs[1].style_family == 1
    assert all(s.image_w == 120 and s.seed == 4 for s in specs)


def test_parse_synth_spec_errors(tmp_path):
    p = tmp_path / "suite.cfg"
    p.write_text("seed=4\n")
    with pytest.raises(ValueError, match="books"):
        parse_synth_spec(p)
    p.write_text("books=alpha:10\n")
    with pytest.raises(ValueError, match="bad book entry"):
        parse_synth_spec(p)


def test_cli_end_to_end(tmp_path, capsys):
    spec = tmp_path / "suite.cfg"
    spec.write_text("seed=2\nbooks=tiny:10:26\n")
    books_dir = tmp_path / "books"
    assert main(["gen-synth", str(spec), "--out", str(books_dir)]) == 0
    assert (books_dir / "tiny.tsv").exists()
    assert len(list((books_dir / "tiny").glob("*.pgm"))) == 260

    cfg = tmp_path / "run.cfg"
    cfg.write_text("methods=tapped\nmax_attempts=1\nepochs=1\n")
    out_dir = tmp_path / "results"
    code = main(["run", str(books_dir / "tiny.tsv"), "--config", str(cfg),
                 "--out", str(out_dir)])
    assert code == 0
    assert (out_dir / "results.csv").exists()

    reports = tmp_path / "reports"
    assert main(["report", str(out_dir / "results.csv"), "--out", str(reports)]) == 0
    for name in ("summary.tsv", "histogram.tsv", "accuracy_vs_n_classes.tsv"):
        assert (reports / name).exists()
    captured = capsys.readouterr()
    assert "tapped" in captured.out


def test_cli_train_codebook(tmp_path, capsys):
    spec = tmp_path / "suite.cfg"
    spec.write_text("seed=3\nbooks=cb:2:3\n")
    books_dir = tmp_path / "books"
    assert main(["gen-synth", str(spec), "--out", str(books_dir)]) == 0
    out = tmp_path / "cb.wfcb"
    code = main(["train-codebook", str(books_dir / "cb.tsv"), "--out", str(out),
                 "--grid", "3", "--epochs", "1", "--samples", "500"])
    assert code == 0
    from wordlab.bovw import load_codebook

    cb = load_codebook(out)
    assert (cb.grid_w, cb.grid_h) == (3, 3)


def test_cli_error_exit_code(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.tsv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_report_band_width(tmp_path):
    from wordlab.harness import write_results_csv
    from wordlab.harness import RunResult

    rows = [RunResult("b1", "cnn", 1, 10, 200, 1000, 30, 0.93, 1.0, False, "")]
    csv = tmp_path / "r.csv"
    write_results_csv(rows, csv)
    assert main(["report", str(csv), "--out", str(tmp_path / "rep"),
                 "--band-width", "10"]) == 0
    hist = (tmp_path / "rep" / "histogram.tsv").read_text().splitlines()
    assert len(hist) == 11  # header + 10 bands
