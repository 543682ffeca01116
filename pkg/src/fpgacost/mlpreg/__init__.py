"""Per-target MLP regression models: embeddings + two dense blocks.

One model per predicted variable (bram, dsp, ff, lut, cycles), all sharing
the engineered-feature input schema but no weights.
"""

from .model import (
    MODEL_TABLE,
    MlpRegressor,
    build_model,
    draw_smooth_sample,
    forward,
    grad_check,
    model_id,
)
from .predict import PredictionReport, ResourceVerdict, load_models, predict_all
from .serialize import load_model, save_model
from .training import TrainConfig, TrainHistory, train

__all__ = [
    "MODEL_TABLE",
    "MlpRegressor",
    "PredictionReport",
    "ResourceVerdict",
    "TrainConfig",
    "TrainHistory",
    "build_model",
    "draw_smooth_sample",
    "forward",
    "grad_check",
    "load_model",
    "load_models",
    "model_id",
    "predict_all",
    "save_model",
    "train",
]
