"""Shared fixtures: one full training run feeds every model-dependent test."""

from dataclasses import dataclass
from pathlib import Path

import pytest

import gradattr as ga
from gradattr.data import SyntheticSample
from gradattr.model import Model

TRAIN_SEED = 42
VAL_SEED = 43
TEST_SEED = 44
EPOCHS = 20
LR = 0.05


@dataclass
class TrainedSetup:
    model: Model
    model_path: Path
    train_set: list
    val_set: list
    test_set: list
    correct: list  # correctly classified test samples, dataset order


@pytest.fixture(scope="session")
def setup(tmp_path_factory) -> TrainedSetup:
    train_set = ga.gen_dataset(TRAIN_SEED, 4000)
    val_set = ga.gen_dataset(VAL_SEED, 1000)
    test_set = ga.gen_dataset(TEST_SEED, 400)
    model = ga.train(TRAIN_SEED, EPOCHS, LR, train_set, val_set)
    path = tmp_path_factory.mktemp("weights") / "model.bin"
    model.save(path)
    correct = [s for s in test_set if model.predict(s.image) == s.label]
    return TrainedSetup(model, path, train_set, val_set, test_set, correct)
