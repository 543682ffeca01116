"""Pydantic request/response models for the prediction service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class LayerDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["dense", "activation", "batchnorm", "skip_add", "dropout"]
    input_size: int | None = Field(default=None, ge=1)
    units: int | None = Field(default=None, ge=1)
    use_bias: bool | None = None
    reuse_factor: int | None = Field(default=None, ge=1)
    activation: Literal["relu", "tanh", "sigmoid", "softmax"] | None = None
    skip_source: int | None = Field(default=None, ge=0)


class NetworkDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    input_size: int = Field(ge=1)
    layers: list[LayerDoc] = Field(min_length=1)

    def to_document(self) -> dict:
        return self.model_dump(exclude_none=True)


class ConfigDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    board: str
    strategy: Literal["latency", "resource"]
    precision_bits: int = Field(ge=1)
    global_reuse: int = Field(ge=1)
    clock_period_ns: float = Field(default=10.0, gt=0)


class PredictRequest(BaseModel):
    network: NetworkDoc
    config: ConfigDoc


class FeaturesRequest(BaseModel):
    network: NetworkDoc
    config: ConfigDoc


class ResourcePrediction(BaseModel):
    predicted_pct: float
    fits_100: bool
    fits_200: bool


class PredictResponse(BaseModel):
    resources: dict[str, ResourcePrediction]
    cycles: int
    clock_period_ns: float
    latency_time_ns: float
    features_used: dict
    model_versions: dict[str, str]
    feature_schema_version: str


class FeaturesResponse(BaseModel):
    features: dict
    feature_schema_version: str


class BoardInfo(BaseModel):
    id: str
    bram_capacity: int
    dsp_capacity: int
    ff_capacity: int
    lut_capacity: int


class BenchmarkInfo(BaseModel):
    name: str
    expected_params: int
    input_size: int
    layer_count: int


class HealthResponse(BaseModel):
    status: str
    models_loaded: bool
    feature_schema_version: str
    version: str
