"""FastAPI application wrapping the core prediction pipeline.

Models are loaded once at startup from the given directory; /predict then
answers from memory. /features works without any models.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import builtin_benchmarks
from ..errors import CostModelError, ModelFormatError, SchemaError, UnknownBoardError
from ..features import FEATURE_SCHEMA_VERSION, extract_features
from ..mlpreg import load_models, predict_all
from ..netir import (
    Strategy,
    SynthesisConfig,
    default_board_registry,
    load_board_registry,
    network_from_dict,
)
from .schemas import (
    BenchmarkInfo,
    BoardInfo,
    ConfigDoc,
    FeaturesRequest,
    FeaturesResponse,
    HealthResponse,
    PredictRequest,
    PredictResponse,
)


def _http_error(exc: CostModelError) -> HTTPException:
    if isinstance(exc, ModelFormatError):
        return HTTPException(status_code=500, detail=str(exc))
    if isinstance(exc, (SchemaError, UnknownBoardError)):
        return HTTPException(status_code=400, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


def _synthesis_config(doc: ConfigDoc) -> SynthesisConfig:
    return SynthesisConfig(
        precision_bits=doc.precision_bits,
        global_reuse=doc.global_reuse,
        strategy=Strategy(doc.strategy),
        board_id=doc.board,
        clock_period_ns=doc.clock_period_ns,
    )


def create_app(models_dir: str | None = None, boards_file: str | None = None) -> FastAPI:
    app = FastAPI(
        title="fpgacost",
        version=__version__,
        description="Pre-synthesis FPGA resource and latency estimation for neural networks",
    )
    registry = load_board_registry(boards_file) if boards_file else default_board_registry()
    models = load_models(models_dir) if models_dir else None

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            models_loaded=models is not None,
            feature_schema_version=FEATURE_SCHEMA_VERSION,
            version=__version__,
        )

    @app.get("/boards", response_model=list[BoardInfo])
    def boards():
        return [
            BoardInfo(
                id=b.id,
                bram_capacity=b.bram_capacity,
                dsp_capacity=b.dsp_capacity,
                ff_capacity=b.ff_capacity,
                lut_capacity=b.lut_capacity,
            )
            for b in registry.boards
        ]

    @app.get("/benchmarks", response_model=list[BenchmarkInfo])
    def benchmarks():
        return [
            BenchmarkInfo(
                name=f.name,
                expected_params=f.expected_params,
                input_size=f.network.input_size,
                layer_count=len(f.network.layers),
            )
            for f in builtin_benchmarks()
        ]

    @app.post("/features", response_model=FeaturesResponse)
    def features_endpoint(request: FeaturesRequest):
        try:
            net = network_from_dict(request.network.to_document())
            cfg = _synthesis_config(request.config)
            feats = extract_features(net, cfg, registry)
        except CostModelError as exc:
            raise _http_error(exc) from exc
        return FeaturesResponse(
            features=feats.as_dict(), feature_schema_version=FEATURE_SCHEMA_VERSION
        )

    @app.post("/predict", response_model=PredictResponse)
    def predict_endpoint(request: PredictRequest):
        if models is None:
            raise HTTPException(
                status_code=503, detail="no models loaded; start the service with --models"
            )
        try:
            net = network_from_dict(request.network.to_document())
            cfg = _synthesis_config(request.config)
            report = predict_all(models, net, cfg, registry)
        except CostModelError as exc:
            raise _http_error(exc) from exc
        return PredictResponse(**report.as_dict())

    return app
