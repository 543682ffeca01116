import numpy as np
import pytest

from fpgacost.datagen import Dataset, generate_dataset
from fpgacost.errors import CostModelError, DataError, TrainingDivergedError
from fpgacost.mlpreg import TrainConfig, build_model, train
from fpgacost.mlpreg.model import model_id


@pytest.fixture(scope="module")
def small_ds():
    return generate_dataset(555, 80, with_pseudo_targets=True)


class TestTrainConfig:
    def test_table_defaults(self):
        assert TrainConfig().resolved("bram") == (64, 1e-4)
        assert TrainConfig().resolved("dsp") == (32, 1e-4)
        assert TrainConfig().resolved("lut") == (32, 1e-4)
        assert TrainConfig().resolved("cycles") == (64, 1e-3)

    def test_overrides(self):
        assert TrainConfig(batch_size=8, learning_rate=0.5).resolved("ff") == (8, 0.5)

    def test_default_epoch_count(self):
        assert TrainConfig().epochs == 50


class TestTrain:
    def test_zero_learning_rate_leaves_weights(self, small_ds):
        model = build_model("dsp", seed=1)
        before = model_id(model)
        trained, history = train(model, small_ds, small_ds,
                                 TrainConfig(epochs=3, learning_rate=0.0, seed=0))
        assert model_id(trained) == before
        assert len(history) == 3

    def test_input_model_untouched(self, small_ds):
        model = build_model("dsp", seed=1)
        before = model_id(model)
        train(model, small_ds, small_ds, TrainConfig(epochs=2, seed=0))
        assert model_id(model) == before

    def test_deterministic_history_and_weights(self, small_ds):
        runs = []
        for _ in range(2):
            model = build_model("ff", seed=3)
            trained, history = train(model, small_ds, small_ds, TrainConfig(epochs=4, seed=9))
            runs.append((model_id(trained), history.as_dict()))
        assert runs[0] == runs[1]

    def test_history_one_entry_per_epoch_and_finite(self, small_ds):
        model = build_model("lut", seed=0)
        _, history = train(model, small_ds, small_ds, TrainConfig(epochs=5, seed=0))
        assert len(history.train_loss) == 5
        assert len(history.val_loss) == 5
        assert len(history.val_smape) == 5
        assert len(history.val_r2) == 5
        for series in (history.train_loss, history.val_loss, history.val_smape, history.val_r2):
            assert all(np.isfinite(v) for v in series)

    def test_returns_lowest_validation_loss_epoch(self, small_ds):
        model = build_model("dsp", seed=2)
        trained, history = train(model, small_ds, small_ds,
                                 TrainConfig(epochs=6, seed=1, learning_rate=3e-3))
        best = history.best_epoch
        assert history.val_loss[best] == min(history.val_loss)
        # ties break to the earliest epoch
        assert all(history.val_loss[i] > history.val_loss[best] for i in range(best))

    def test_overfit_small_set(self):
        # a wide MLP must be able to memorize a handful of points
        ds = generate_dataset(77, 16, with_pseudo_targets=True)
        model = build_model("dsp", seed=0)
        _, history = train(
            model, ds, ds, TrainConfig(epochs=300, seed=0, learning_rate=3e-3, batch_size=8)
        )
        assert history.train_loss[-1] < history.train_loss[0]
        y = ds.target_vector("dsp")
        assert history.train_loss[-1] < 0.1 * (y.max() - y.min())

    def test_embeddings_receive_gradients(self, small_ds):
        model = build_model("dsp", seed=4)
        before = [e.copy() for e in model.embeddings]
        trained, _ = train(model, small_ds, small_ds, TrainConfig(epochs=2, seed=0))
        assert any(not np.array_equal(b, a) for b, a in zip(before, trained.embeddings))

    def test_divergence_aborts(self, small_ds):
        model = build_model("dsp", seed=0)
        with pytest.raises(TrainingDivergedError), np.errstate(all="ignore"):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                train(model, small_ds, small_ds,
                      TrainConfig(epochs=10, learning_rate=1e200, seed=0))

    def test_empty_dataset_rejected(self, small_ds):
        model = build_model("dsp", seed=0)
        empty = Dataset(records=())
        with pytest.raises(DataError):
            train(model, empty, small_ds, TrainConfig(epochs=1))

    def test_schema_version_mismatch_rejected(self, small_ds):
        model = build_model("dsp", seed=0)
        model.feature_schema_version = "999"
        with pytest.raises(CostModelError, match="schema"):
            train(model, small_ds, small_ds, TrainConfig(epochs=1))

    def test_scalers_fit_from_training_split_only(self, small_ds):
        model = build_model("dsp", seed=0)
        x_train, _ = small_ds.feature_matrix()
        trained, _ = train(model, small_ds, small_ds, TrainConfig(epochs=1, seed=0))
        assert trained.scaler_mean == pytest.approx(x_train.mean(axis=0))
        y = small_ds.target_vector("dsp")
        assert trained.target_mean == pytest.approx(y.mean())
