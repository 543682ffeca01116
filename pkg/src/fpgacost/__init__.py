"""Pre-synthesis FPGA cost modeling for fully connected neural networks.

Predicts board-relative BRAM/DSP/FF/LUT utilization and inference clock
cycles for a network + synthesis configuration, using per-target MLP
regressors over engineered network-level features.
"""

__version__ = "0.1.0"

from .netir import (
    ActKind,
    BoardRegistry,
    BoardSpec,
    LayerKind,
    LayerSpec,
    NetworkArchitecture,
    Strategy,
    SynthesisConfig,
    default_board_registry,
    effective_reuse,
    load_board_registry,
    load_network,
    param_count,
    parse_network,
    serialize_network,
)
from .features import (
    CATEGORICAL_FEATURES,
    FEATURE_SCHEMA_VERSION,
    NUMERIC_FEATURES,
    EngineeredFeatures,
    FixedPointOpCounts,
    count_fixed_point_ops,
    encode_categoricals,
    extract_features,
    spearman_matrix,
)
from .datagen import (
    Dataset,
    GeneratorSpec,
    RawTargets,
    Targets,
    TrainingRecord,
    generate_architecture,
    generate_dataset,
    ingest_dataset,
    normalize_targets,
    split_dataset,
    write_dataset_csv,
)
from .mlpreg import (
    MlpRegressor,
    PredictionReport,
    TrainConfig,
    TrainHistory,
    build_model,
    forward,
    grad_check,
    load_model,
    load_models,
    predict_all,
    save_model,
    train,
)
from .bench import (
    BenchmarkFixture,
    SweepGrid,
    builtin_benchmarks,
    compare_with_ground_truth,
    load_ground_truth,
    run_sweep,
)
