"""Built-in benchmark networks, the prediction sweep, and ground-truth comparison.

The eleven benchmark architectures are literature and custom fully connected
networks spanning 385 to ~12.7k parameters. The default sweep covers two
boards, both strategies, three precisions, and seven reuse factors: 11 x 2 x
2 x 3 x 7 = 924 combinations. Combinations that synthesis tooling rejects
(a dense layer above the 4096-parameter unroll limit under the latency
strategy) are still predicted but flagged.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import metrics
from .datagen import RESOURCES, TARGETS, clamp_utilization
from .errors import DataError
from .mlpreg.model import MlpRegressor
from .mlpreg.predict import predict_all
from .netir import (
    ActKind,
    BoardRegistry,
    LayerKind,
    LayerSpec,
    NetworkArchitecture,
    Strategy,
    SynthesisConfig,
    default_board_registry,
    dense_layer_params,
    param_count,
    validate_network,
)

UNROLL_PARAM_LIMIT = 4096


@dataclass(frozen=True)
class BenchmarkFixture:
    name: str
    network: NetworkArchitecture
    expected_params: int


class _NetBuilder:
    def __init__(self, name: str, input_size: int):
        self.name = name
        self.input_size = input_size
        self.width = input_size
        self.layers: list[LayerSpec] = []

    def dense(self, units: int, use_bias: bool = True) -> "_NetBuilder":
        self.layers.append(
            LayerSpec(LayerKind.DENSE, self.width, units, units=units, use_bias=use_bias)
        )
        self.width = units
        return self

    def act(self, kind: ActKind) -> "_NetBuilder":
        self.layers.append(LayerSpec(LayerKind.ACTIVATION, self.width, self.width, activation=kind))
        return self

    def batchnorm(self) -> "_NetBuilder":
        self.layers.append(LayerSpec(LayerKind.BATCHNORM, self.width, self.width))
        return self

    def skip(self, source: int) -> "_NetBuilder":
        self.layers.append(LayerSpec(LayerKind.SKIP_ADD, self.width, self.width, skip_source=source))
        return self

    def dropout(self) -> "_NetBuilder":
        self.layers.append(LayerSpec(LayerKind.DROPOUT, self.width, self.width))
        return self

    def build(self) -> NetworkArchitecture:
        return validate_network(
            NetworkArchitecture(self.name, self.input_size, tuple(self.layers))
        )


def _plain_mlp(name: str, input_size: int, blocks: Sequence[tuple[int, ActKind]],
               use_bias: bool = True) -> NetworkArchitecture:
    b = _NetBuilder(name, input_size)
    for units, act in blocks:
        b.dense(units, use_bias=use_bias).act(act)
    return b.build()


def builtin_benchmarks() -> list[BenchmarkFixture]:
    relu, sigm, soft = ActKind.RELU, ActKind.SIGMOID, ActKind.SOFTMAX

    # jet: the published layer drawing shows four 32-wide hidden layers, but
    # the published size (2,821) matches the three-hidden-layer variant;
    # the fixture follows the size.
    jet = _plain_mlp("jet", 16, [(32, relu), (32, relu), (32, relu), (5, soft)])
    top_quarks = _plain_mlp("top-quarks", 10, [(32, relu), (1, sigm)])
    anomaly = _plain_mlp(
        "anomaly", 128, [(8, relu), (4, relu), (128, relu), (4, relu), (128, soft)]
    )
    # bipc: the published size (7,776) matches six bias-free 36x36 layers
    # rather than the five biased layers drawn; the fixture follows the size.
    bipc = _plain_mlp("bipc", 36, [(36, relu)] * 6, use_bias=False)
    cookiebox = _plain_mlp("cookiebox", 512, [(4, relu), (32, relu), (32, relu), (5, soft)])
    mnist = _plain_mlp("mnist", 784, [(16, relu), (10, soft)])
    automlp = _plain_mlp("automlp", 7, [(12, relu), (16, relu), (12, relu), (2, soft)])
    tracking = _plain_mlp(
        "particle-tracking", 14, [(32, relu), (32, relu), (32, relu), (3, soft)]
    )

    custom1 = (
        _NetBuilder("custom-1", 16)
        .dense(64).act(relu)
        .dense(32).act(relu)
        .dense(32).act(relu).skip(source=3).dropout()
        .dense(32).act(relu)
        .dense(10).act(soft)
        .build()
    )
    custom2 = (
        _NetBuilder("custom-2", 128)
        .dense(16).act(relu)
        .dense(64).act(relu)
        .dense(32).act(relu)
        .dense(64).act(relu).skip(source=3)
        .dense(32).act(relu).dropout()
        .dense(50).act(soft)
        .build()
    )
    custom3 = (
        _NetBuilder("custom-3", 64)
        .dense(32).batchnorm().act(relu)
        .dense(32).batchnorm().act(relu).skip(source=2)
        .dense(32).batchnorm().act(relu)
        .dense(64).batchnorm().act(relu)
        .dense(10).act(soft)
        .build()
    )

    sized = [
        (jet, 2821),
        (top_quarks, 385),
        (anomaly, 2864),
        (bipc, 7776),
        (cookiebox, 3433),
        (mnist, 12730),
        (automlp, 534),
        (tracking, 2691),
        (custom1, 5610),
        (custom2, 11074),
        (custom3, 7274),
    ]
    return [BenchmarkFixture(net.name, net, params) for net, params in sized]


def benchmark_by_name(name: str) -> BenchmarkFixture:
    for fixture in builtin_benchmarks():
        if fixture.name == name:
            return fixture
    raise DataError(f"unknown benchmark {name!r}")


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepGrid:
    boards: tuple[str, ...] = ("zcu102", "pynq-z2")
    strategies: tuple[Strategy, ...] = (Strategy.LATENCY, Strategy.RESOURCE)
    precisions: tuple[int, ...] = (2, 8, 16)
    reuse_factors: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)

    def combinations(self, n_fixtures: int) -> int:
        return (
            n_fixtures
            * len(self.boards)
            * len(self.strategies)
            * len(self.precisions)
            * len(self.reuse_factors)
        )


SweepKey = tuple[str, str, str, int, int]  # (benchmark, board, strategy, precision, reuse)


@dataclass(frozen=True)
class SweepRow:
    benchmark: str
    board: str
    strategy: str
    precision: int
    reuse: int
    predictions: dict[str, float]  # bram/dsp/ff/lut pct and cycles
    unsynthesizable: bool

    @property
    def key(self) -> SweepKey:
        return (self.benchmark, self.board, self.strategy, self.precision, self.reuse)


def is_unsynthesizable(net: NetworkArchitecture, strategy: Strategy) -> bool:
    """Latency strategy fully unrolls dense layers; big layers exceed the limit."""
    if strategy is not Strategy.LATENCY:
        return False
    return any(dense_layer_params(l) > UNROLL_PARAM_LIMIT for l in net.layers)


def run_sweep(
    models: Mapping[str, MlpRegressor],
    fixtures: Sequence[BenchmarkFixture] | None = None,
    grid: SweepGrid | None = None,
    registry: BoardRegistry | None = None,
) -> list[SweepRow]:
    """Predict every (fixture, board, strategy, precision, reuse) combination."""
    fixtures = list(fixtures) if fixtures is not None else builtin_benchmarks()
    grid = grid or SweepGrid()
    registry = registry or default_board_registry()
    rows = []
    for fixture, board, strategy, precision, reuse in itertools.product(
        fixtures, grid.boards, grid.strategies, grid.precisions, grid.reuse_factors
    ):
        cfg = SynthesisConfig(
            precision_bits=precision, global_reuse=reuse, strategy=strategy, board_id=board
        )
        report = predict_all(models, fixture.network, cfg, registry)
        predictions = {name: report.resources[name].predicted_pct for name in RESOURCES}
        predictions["cycles"] = float(report.cycles)
        rows.append(
            SweepRow(
                benchmark=fixture.name,
                board=board,
                strategy=strategy.value,
                precision=precision,
                reuse=reuse,
                predictions=predictions,
                unsynthesizable=is_unsynthesizable(fixture.network, strategy),
            )
        )
    rows.sort(key=lambda r: r.key)
    return rows


SWEEP_CSV_COLUMNS = (
    "benchmark", "board", "strategy", "precision", "reuse",
    "bram_pct", "dsp_pct", "ff_pct", "lut_pct", "cycles", "unsynthesizable",
)


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.benchmark, r.board, r.strategy, r.precision, r.reuse,
                    r.predictions["bram"], r.predictions["dsp"], r.predictions["ff"],
                    r.predictions["lut"], int(r.predictions["cycles"]),
                    int(r.unsynthesizable),
                ]
            )


# ---------------------------------------------------------------------------
# Ground-truth comparison
# ---------------------------------------------------------------------------

TRUTH_KEY_COLUMNS = ("benchmark", "board", "strategy", "precision", "reuse")
TRUTH_VALUE_COLUMNS = ("bram_pct", "dsp_pct", "ff_pct", "lut_pct", "cycles")
_TRUTH_TARGET_BY_COLUMN = dict(zip(TRUTH_VALUE_COLUMNS, TARGETS))


def _parse_truth_cell(cell: str, target: str) -> float | None:
    """'+' means above the 200% cap; NA/blank means no ground truth."""
    token = cell.strip()
    if token == "" or token.upper() == "NA":
        return None
    if token == "+":
        return 200.0
    value = float(token)
    if target == "cycles":
        if value < 0:
            raise DataError("ground-truth cycles is negative")
        return value
    return clamp_utilization(value)


def load_ground_truth(path: str | Path) -> dict[SweepKey, dict[str, float | None]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"ground-truth file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"ground-truth file {path} has no header")
        missing = [c for c in TRUTH_KEY_COLUMNS + TRUTH_VALUE_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DataError(f"ground-truth file missing columns: {missing}")
        truth: dict[SweepKey, dict[str, float | None]] = {}
        for row in reader:
            key = (
                row["benchmark"].strip(),
                row["board"].strip(),
                row["strategy"].strip().lower(),
                int(row["precision"]),
                int(row["reuse"]),
            )
            if key in truth:
                raise DataError(f"duplicate ground-truth key {key}")
            truth[key] = {
                _TRUTH_TARGET_BY_COLUMN[col]: _parse_truth_cell(row[col], _TRUTH_TARGET_BY_COLUMN[col])
                for col in TRUTH_VALUE_COLUMNS
            }
    return truth


@dataclass(frozen=True)
class MatchedRow:
    key: SweepKey
    values: dict[str, tuple[float, float]]  # target -> (ground truth, prediction)

    def error(self, target: str) -> float:
        g, p = self.values[target]
        return p - g


@dataclass
class ComparisonReport:
    matched: list[MatchedRow] = field(default_factory=list)
    unmatched_truth_keys: list[SweepKey] = field(default_factory=list)
    unmatched_prediction_keys: list[SweepKey] = field(default_factory=list)
    per_target: dict[str, dict] = field(default_factory=dict)
    trend_by_precision: dict[str, dict[int, dict[str, float]]] = field(default_factory=dict)
    trend_by_reuse: dict[str, dict[int, dict[str, float]]] = field(default_factory=dict)


def compare_with_ground_truth(
    rows: Sequence[SweepRow], truth: Mapping[SweepKey, Mapping[str, float | None]]
) -> ComparisonReport:
    """Join sweep predictions with ground truth on the combination key.

    Values the truth file marks '+' enter as exactly 200 (the training-time
    cap), NA cells drop that cell only, and unmatched keys on either side
    are reported rather than dropped.
    """
    report = ComparisonReport()
    by_key = {r.key: r for r in rows}
    for key in truth:
        if key not in by_key:
            report.unmatched_truth_keys.append(key)
    for key in by_key:
        if key not in truth:
            report.unmatched_prediction_keys.append(key)
    report.unmatched_truth_keys.sort()
    report.unmatched_prediction_keys.sort()

    for key in sorted(set(truth) & set(by_key)):
        row = by_key[key]
        values = {}
        for target in TARGETS:
            g = truth[key][target]
            if g is None:
                continue
            values[target] = (float(g), float(row.predictions[target]))
        if values:
            report.matched.append(MatchedRow(key=key, values=values))

    for target in TARGETS:
        pairs = [m.values[target] for m in report.matched if target in m.values]
        if not pairs:
            continue
        g = [p[0] for p in pairs]
        p = [p[1] for p in pairs]
        errors = [pi - gi for gi, pi in pairs]
        threshold = 100.0 if target == "cycles" else 10.0
        report.per_target[target] = {
            "n": len(pairs),
            "mae": metrics.mae(g, p),
            "error_distribution": metrics.error_distribution(errors).as_dict(),
            "within_threshold_fraction": metrics.within_threshold_fraction(errors, threshold),
            "threshold": threshold,
        }

    def trend(group_field: str) -> dict[str, dict[int, dict[str, float]]]:
        out: dict[str, dict[int, dict[str, float]]] = {t: {} for t in TARGETS}
        for m in report.matched:
            group = m.key[3] if group_field == "precision" else m.key[4]
            for target, (g, p) in m.values.items():
                bucket = out[target].setdefault(group, {"g_sum": 0.0, "p_sum": 0.0, "n": 0})
                bucket["g_sum"] += g
                bucket["p_sum"] += p
                bucket["n"] += 1
        final: dict[str, dict[int, dict[str, float]]] = {}
        for target, groups in out.items():
            final[target] = {
                grp: {"g_mean": b["g_sum"] / b["n"], "p_mean": b["p_sum"] / b["n"], "n": b["n"]}
                for grp, b in sorted(groups.items())
            }
        return final

    report.trend_by_precision = trend("precision")
    report.trend_by_reuse = trend("reuse")
    return report
