import json

import pytest

from fpgacost.datagen import generate_dataset, split_dataset
from fpgacost.mlpreg import TrainConfig, build_model, save_model, train
from fpgacost.mlpreg.predict import model_path
from fpgacost.netir import default_board_registry

TOP_QUARKS_DOC = {
    "name": "top-quarks",
    "input_size": 10,
    "layers": [
        {"kind": "dense", "units": 32},
        {"kind": "activation", "activation": "relu"},
        {"kind": "dense", "units": 1},
        {"kind": "activation", "activation": "sigmoid"},
    ],
}


@pytest.fixture(scope="session")
def registry():
    return default_board_registry()


@pytest.fixture()
def top_quarks_file(tmp_path):
    path = tmp_path / "top_quarks.json"
    path.write_text(json.dumps(TOP_QUARKS_DOC))
    return path


@pytest.fixture(scope="session")
def tiny_dataset():
    return generate_dataset(31337, 120, with_pseudo_targets=True)


@pytest.fixture(scope="session")
def tiny_splits(tiny_dataset):
    return split_dataset(tiny_dataset, seed=0)


@pytest.fixture(scope="session")
def trained_models_dir(tmp_path_factory, tiny_splits):
    """Five quickly trained model files; enough for plumbing tests."""
    out = tmp_path_factory.mktemp("models")
    train_ds, val_ds, _ = tiny_splits
    for target in ("bram", "dsp", "ff", "lut", "cycles"):
        model = build_model(target, seed=0)
        trained, _ = train(model, train_ds, val_ds, TrainConfig(epochs=3, seed=0))
        save_model(trained, model_path(out, target))
    return out
