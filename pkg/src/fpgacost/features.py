"""Engineered network-level features for the cost regressors.

A (network, config) pair is reduced to one flat vector: layer-type counts,
dense-layer statistics, precision-scaled fixed-point operation totals, the
raw precision/reuse knobs as numerics, and ordinal codes for the categorical
knobs (board, strategy). The numeric column ordering in NUMERIC_FEATURES is
the published model input schema; changing it requires bumping
FEATURE_SCHEMA_VERSION and retraining.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import NetworkValidationError
from .netir import (
    ActKind,
    BoardRegistry,
    LayerKind,
    LayerSpec,
    NetworkArchitecture,
    Strategy,
    STRATEGY_ORDER,
    SynthesisConfig,
    default_board_registry,
    effective_reuse,
)

FEATURE_SCHEMA_VERSION = "1"

NUMERIC_FEATURES = (
    "dense_count",
    "batchnorm_count",
    "skip_count",
    "dropout_count",
    "act_relu_count",
    "act_tanh_count",
    "act_sigmoid_count",
    "act_softmax_count",
    "avg_dense_params",
    "avg_dense_inputs",
    "avg_dense_outputs",
    "avg_dense_reuse",
    "scaled_add",
    "scaled_mult",
    "scaled_logical",
    "scaled_lookup",
    "precision_bits",
    "global_reuse",
)

CATEGORICAL_FEATURES = ("board_index", "strategy_index")


@dataclass(frozen=True)
class FixedPointOpCounts:
    """Per-layer totals of the four fixed-point operation classes."""

    add: int = 0
    mult: int = 0
    logical: int = 0
    lookup: int = 0

    def __add__(self, other: "FixedPointOpCounts") -> "FixedPointOpCounts":
        return FixedPointOpCounts(
            add=self.add + other.add,
            mult=self.mult + other.mult,
            logical=self.logical + other.logical,
            lookup=self.lookup + other.lookup,
        )


def count_fixed_point_ops(layer: LayerSpec) -> FixedPointOpCounts:
    """Operation counts for one layer.

    Counting rules, kept in one place so they can be revised together:
      dense:      mult = n_in * n_out MACs, one accumulation add each
                  (bias folded into the accumulation tree)
      batchnorm:  one scale and one shift per channel
      skip_add:   one add per element
      dropout:    identity at inference, no ops
      relu:       one comparison per element
      tanh/sigmoid: one table lookup per element
      softmax:    exponent lookup + reciprocal lookup per element,
                  plus the (width - 1)-add accumulation of the denominator
    """
    n_in, n_out = layer.input_size, layer.output_size
    if layer.kind is LayerKind.DENSE:
        return FixedPointOpCounts(mult=n_in * n_out, add=n_in * n_out)
    if layer.kind is LayerKind.BATCHNORM:
        return FixedPointOpCounts(mult=n_out, add=n_out)
    if layer.kind is LayerKind.SKIP_ADD:
        return FixedPointOpCounts(add=n_out)
    if layer.kind is LayerKind.DROPOUT:
        return FixedPointOpCounts()
    act = layer.activation
    if act is ActKind.RELU:
        return FixedPointOpCounts(logical=n_out)
    if act in (ActKind.TANH, ActKind.SIGMOID):
        return FixedPointOpCounts(lookup=n_out)
    if act is ActKind.SOFTMAX:
        return FixedPointOpCounts(lookup=2 * n_out, add=n_out - 1)
    raise NetworkValidationError(f"cannot count ops for layer kind {layer.kind}")


@dataclass(frozen=True)
class EngineeredFeatures:
    dense_count: int
    batchnorm_count: int
    skip_count: int
    dropout_count: int
    act_relu_count: int
    act_tanh_count: int
    act_sigmoid_count: int
    act_softmax_count: int
    avg_dense_params: float
    avg_dense_inputs: float
    avg_dense_outputs: float
    avg_dense_reuse: float
    scaled_add: int
    scaled_mult: int
    scaled_logical: int
    scaled_lookup: int
    precision_bits: int
    global_reuse: int
    board_index: int
    strategy_index: int

    def numeric_vector(self) -> np.ndarray:
        """Numeric inputs in the published column order, float64."""
        return np.array([float(getattr(self, n)) for n in NUMERIC_FEATURES], dtype=np.float64)

    def categorical_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in CATEGORICAL_FEATURES], dtype=np.int64)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def encode_categoricals(
    cfg: SynthesisConfig, registry: BoardRegistry | None = None
) -> tuple[int, int]:
    """Ordinal codes: boards by registry declaration order, latency=0/resource=1."""
    registry = registry or default_board_registry()
    board_index = registry.index_of(cfg.board_id)
    strategy_index = STRATEGY_ORDER.index(Strategy(cfg.strategy))
    return board_index, strategy_index


def extract_features(
    net: NetworkArchitecture,
    cfg: SynthesisConfig,
    registry: BoardRegistry | None = None,
) -> EngineeredFeatures:
    """Single pass over the layers producing the full feature vector.

    Dense statistics average over dense layers only and are 0 for networks
    without any. Per-layer reuse is the effective (clamped) value, falling
    back to the config's global reuse where a layer does not pin its own.
    """
    registry = registry or default_board_registry()
    board_index, strategy_index = encode_categoricals(cfg, registry)

    kind_counts = {k: 0 for k in LayerKind}
    act_counts = {a: 0 for a in ActKind}
    dense_params = 0
    dense_inputs = 0
    dense_outputs = 0
    dense_reuse = 0
    ops = FixedPointOpCounts()

    for layer in net.layers:
        kind_counts[layer.kind] += 1
        ops = ops + count_fixed_point_ops(layer)
        if layer.kind is LayerKind.ACTIVATION:
            act_counts[layer.activation] += 1
        elif layer.kind is LayerKind.DENSE:
            dense_params += layer.input_size * layer.units + (layer.units if layer.use_bias else 0)
            dense_inputs += layer.input_size
            dense_outputs += layer.output_size
            dense_reuse += (
                layer.reuse_factor
                if layer.reuse_factor is not None
                else effective_reuse(layer, cfg.global_reuse)
            )

    n_dense = kind_counts[LayerKind.DENSE]
    p = cfg.precision_bits
    return EngineeredFeatures(
        dense_count=n_dense,
        batchnorm_count=kind_counts[LayerKind.BATCHNORM],
        skip_count=kind_counts[LayerKind.SKIP_ADD],
        dropout_count=kind_counts[LayerKind.DROPOUT],
        act_relu_count=act_counts[ActKind.RELU],
        act_tanh_count=act_counts[ActKind.TANH],
        act_sigmoid_count=act_counts[ActKind.SIGMOID],
        act_softmax_count=act_counts[ActKind.SOFTMAX],
        avg_dense_params=dense_params / n_dense if n_dense else 0.0,
        avg_dense_inputs=dense_inputs / n_dense if n_dense else 0.0,
        avg_dense_outputs=dense_outputs / n_dense if n_dense else 0.0,
        avg_dense_reuse=dense_reuse / n_dense if n_dense else 0.0,
        scaled_add=ops.add * p,
        scaled_mult=ops.mult * p,
        scaled_logical=ops.logical * p,
        scaled_lookup=ops.lookup * p,
        precision_bits=p,
        global_reuse=cfg.global_reuse,
        board_index=board_index,
        strategy_index=strategy_index,
    )


# ---------------------------------------------------------------------------
# Spearman rank correlation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpearmanResult:
    columns: tuple[str, ...]
    matrix: np.ndarray
    constant_columns: tuple[str, ...]  # correlations involving these were forced to 0


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    xs = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_matrix(data, columns: tuple[str, ...] | None = None) -> SpearmanResult:
    """Spearman rank correlation matrix over feature and target columns.

    ``data`` is either a 2D array (rows x columns, with ``columns`` naming
    them) or any object exposing ``column_matrix() -> (names, array)`` such
    as a Dataset. Constant columns have zero rank variance; their
    correlations are reported as 0 and the column is flagged.
    """
    if hasattr(data, "column_matrix"):
        names, mat = data.column_matrix()
    else:
        mat = np.asarray(data, dtype=np.float64)
        names = columns if columns is not None else tuple(f"col{i}" for i in range(mat.shape[1]))
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise ValueError("spearman_matrix needs a non-empty 2D column matrix")
    n_rows, n_cols = mat.shape
    if len(names) != n_cols:
        raise ValueError("column name count does not match matrix width")

    ranks = np.column_stack([average_ranks(mat[:, j]) for j in range(n_cols)])
    centered = ranks - ranks.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    constant = norms == 0.0

    safe = np.where(constant, 1.0, norms)
    unit = centered / safe
    corr = unit.T @ unit
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    # exact symmetry regardless of float summation order
    corr = (corr + corr.T) / 2.0

    constant_names = tuple(n for n, c in zip(names, constant) if c)
    return SpearmanResult(columns=tuple(names), matrix=corr, constant_columns=constant_names)


def spearman(x, y) -> float:
    """Rank correlation of two vectors (average ranks for ties)."""
    res = spearman_matrix(np.column_stack([np.asarray(x, float), np.asarray(y, float)]))
    value = float(res.matrix[0, 1])
    return value if not math.isnan(value) else 0.0
