"""Combined five-model prediction report for one (network, config) pair."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..datagen import RESOURCES, TARGETS, clamp_utilization
from ..errors import ModelFormatError
from ..features import EngineeredFeatures, extract_features
from ..netir import BoardRegistry, NetworkArchitecture, SynthesisConfig, default_board_registry
from .model import MlpRegressor, forward, model_id
from .serialize import load_model

MODEL_FILE_SUFFIX = ".fcmodel"


@dataclass(frozen=True)
class ResourceVerdict:
    predicted_pct: float
    fits_100: bool
    fits_200: bool


@dataclass(frozen=True)
class PredictionReport:
    resources: dict[str, ResourceVerdict]  # keyed bram/dsp/ff/lut
    cycles: int
    clock_period_ns: float
    latency_time_ns: float
    features_used: EngineeredFeatures
    model_versions: dict[str, str]
    feature_schema_version: str

    def as_dict(self) -> dict:
        return {
            "resources": {
                name: {
                    "predicted_pct": v.predicted_pct,
                    "fits_100": v.fits_100,
                    "fits_200": v.fits_200,
                }
                for name, v in self.resources.items()
            },
            "cycles": self.cycles,
            "clock_period_ns": self.clock_period_ns,
            "latency_time_ns": self.latency_time_ns,
            "features_used": self.features_used.as_dict(),
            "model_versions": self.model_versions,
            "feature_schema_version": self.feature_schema_version,
        }


def predict_all(
    models: Mapping[str, MlpRegressor],
    net: NetworkArchitecture,
    cfg: SynthesisConfig,
    registry: BoardRegistry | None = None,
) -> PredictionReport:
    """Run all five target models on one network+config.

    Resource outputs are clamped to [0, 200] and cycles to nonnegative
    integers, matching the training-target conventions.
    """
    registry = registry or default_board_registry()
    missing = [t for t in TARGETS if t not in models]
    if missing:
        raise ModelFormatError(f"missing models for targets: {missing}")
    versions = {models[t].feature_schema_version for t in TARGETS}
    if len(versions) != 1:
        raise ModelFormatError(f"models disagree on feature schema version: {sorted(versions)}")

    feats = extract_features(net, cfg, registry)
    x_num = feats.numeric_vector()[None, :]
    x_cat = feats.categorical_vector()[None, :]

    resources = {}
    for name in RESOURCES:
        raw = float(forward(models[name], x_num, x_cat)[0])
        pct = round(clamp_utilization(raw), 4)
        resources[name] = ResourceVerdict(
            predicted_pct=pct, fits_100=pct <= 100.0, fits_200=pct <= 200.0
        )
    cycles = int(round(max(0.0, float(forward(models["cycles"], x_num, x_cat)[0]))))

    return PredictionReport(
        resources=resources,
        cycles=cycles,
        clock_period_ns=cfg.clock_period_ns,
        latency_time_ns=cycles * cfg.clock_period_ns,
        features_used=feats,
        model_versions={t: model_id(models[t]) for t in TARGETS},
        feature_schema_version=versions.pop(),
    )


def model_path(models_dir: str | Path, target: str) -> Path:
    return Path(models_dir) / f"{target}{MODEL_FILE_SUFFIX}"


def load_models(models_dir: str | Path) -> dict[str, MlpRegressor]:
    """Load the five per-target model files from a directory."""
    models = {}
    for target in TARGETS:
        path = model_path(models_dir, target)
        if not path.exists():
            raise ModelFormatError(f"missing model file for target {target!r}: {path}")
        model = load_model(path)
        if model.target != target:
            raise ModelFormatError(
                f"model file {path} was trained for target {model.target!r}, expected {target!r}"
            )
        models[target] = model
    return models
