"""Shared fixtures: small synthetic books and fast experiment configs."""

from pathlib import Path

import pytest

from wordlab.harness import ExperimentConfig
from wordlab.nn import TrainConfig
from wordlab.synth import SynthBookSpec, generate_book


@pytest.fixture(scope="session")
def small_book(tmp_path_factory):
    """A 10-class, 26-sample/class synthetic book (splits to 20 train/class)."""
    root = tmp_path_factory.mktemp("small_book")
    book = generate_book(SynthBookSpec("sb", 10, 26, seed=11), root)
    return book


@pytest.fixture()
def fast_config(tmp_path):
    """Experiment config tuned for unit-test speed (1 CNN epoch)."""
    return ExperimentConfig(
        out_dir=tmp_path / "results",
        train=TrainConfig(epochs=1),
        max_attempts=1,
    )


@pytest.fixture()
def book_dir(tmp_path):
    d = Path(tmp_path) / "books"
    d.mkdir()
    return d
