"""Mini-batch ADAM training on MAE loss with best-epoch selection.

Numeric features and the target are standardized with statistics from the
training split only; both scalers live inside the model so a saved file
predicts in original units with no external state. Internally the loss is
MAE on the standardized target (reported history values are converted back
to original units), which keeps the optimizer step size meaningful across
targets whose scales differ by orders of magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import metrics
from ..datagen import Dataset
from ..errors import CostModelError, DataError, TrainingDivergedError
from .model import MODEL_TABLE, MlpRegressor, backward, forward, forward_cached, mae_loss_and_grad


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings; batch size and learning rate default per target."""

    batch_size: int | None = None
    learning_rate: float | None = None
    epochs: int = 50
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def resolved(self, target: str) -> tuple[int, float]:
        row = MODEL_TABLE[target]
        return (
            self.batch_size if self.batch_size is not None else row.batch_size,
            self.learning_rate if self.learning_rate is not None else row.learning_rate,
        )


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_smape: list[float] = field(default_factory=list)
    val_r2: list[float] = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self) -> int:
        return len(self.train_loss)

    def as_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_smape": self.val_smape,
            "val_r2": self.val_r2,
            "best_epoch": self.best_epoch,
        }


class _Adam:
    def __init__(self, params: list[np.ndarray], cfg: TrainConfig, lr: float):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.lr = lr
        self.cfg = cfg

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        b1, b2, eps = self.cfg.beta1, self.cfg.beta2, self.cfg.epsilon
        self.t += 1
        correction1 = 1.0 - b1**self.t
        correction2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + eps)


def _fit_scalers(model: MlpRegressor, x_num: np.ndarray, y: np.ndarray) -> None:
    mean = x_num.mean(axis=0)
    std = x_num.std(axis=0)
    std[std < 1e-12] = 1.0
    model.scaler_mean = mean
    model.scaler_std = std
    t_std = float(y.std())
    model.target_mean = float(y.mean())
    model.target_std = t_std if t_std >= 1e-12 else 1.0


def train(
    model: MlpRegressor, train_ds: Dataset, val_ds: Dataset, cfg: TrainConfig | None = None
) -> tuple[MlpRegressor, TrainHistory]:
    """Train a copy of the model; returns the weights with the lowest
    validation loss (ties broken by earliest epoch) and the epoch history."""
    cfg = cfg or TrainConfig()
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise DataError("training and validation datasets must be non-empty")
    for ds in (train_ds, val_ds):
        if ds.feature_schema_version != model.feature_schema_version:
            raise CostModelError(
                f"dataset schema {ds.feature_schema_version!r} does not match "
                f"model schema {model.feature_schema_version!r}"
            )
    batch_size, lr = cfg.resolved(model.target)

    x_train, c_train = train_ds.feature_matrix()
    y_train = train_ds.target_vector(model.target)
    x_val, c_val = val_ds.feature_matrix()
    y_val = val_ds.target_vector(model.target)

    work = model.clone()
    _fit_scalers(work, x_train, y_train)
    y_train_s = (y_train - work.target_mean) / work.target_std

    params = work.parameters()
    opt = _Adam(params, cfg, lr)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()
    best_loss = np.inf
    best_params: list[np.ndarray] | None = None

    n = len(y_train)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, batch_size):
            idx = perm[lo : lo + batch_size]
            if idx.size == 0:
                raise DataError("empty training batch")
            cache = forward_cached(work, x_train[idx], c_train[idx])
            loss, dpred = mae_loss_and_grad(work, cache, y_train_s[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"{model.target}: non-finite loss at epoch {epoch}, batch {lo // batch_size}"
                )
            grads = backward(work, cache, c_train[idx], dpred)
            if lr != 0.0:
                opt.step(params, grads)
            epoch_loss += loss * idx.size

        val_pred = forward(work, x_val, c_val)
        if not np.all(np.isfinite(val_pred)):
            raise TrainingDivergedError(f"{model.target}: non-finite validation prediction")
        val_loss = metrics.mae(y_val, val_pred)
        history.train_loss.append(epoch_loss / n * work.target_std)
        history.val_loss.append(val_loss)
        history.val_smape.append(metrics.smape(y_val, val_pred))
        history.val_r2.append(metrics.r2(y_val, val_pred))

        if val_loss < best_loss:
            best_loss = val_loss
            best_params = [p.copy() for p in params]
            history.best_epoch = epoch

    assert best_params is not None
    work.set_parameters(best_params)
    return work, history
