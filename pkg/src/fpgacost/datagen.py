"""Synthetic architecture generation, dataset ingestion, and splits.

Generation samples from the documented parameter ranges with per-record
seed streams derived from (master_seed, record_index), so output is
independent of worker scheduling; the merged dataset is canonically ordered
by record hash. Targets come from synthesis reports ingested from disk;
generated records carry no targets unless the analytic pseudo-target oracle
is requested (useful for end-to-end runs without synthesis data).
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .features import (
    CATEGORICAL_FEATURES,
    FEATURE_SCHEMA_VERSION,
    NUMERIC_FEATURES,
    EngineeredFeatures,
    extract_features,
)
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
    network_from_dict,
    parse_network,
    validate_network,
)

RESOURCES = ("bram", "dsp", "ff", "lut")
TARGETS = RESOURCES + ("cycles",)
TARGET_COLUMNS = ("bram_pct", "dsp_pct", "ff_pct", "lut_pct", "cycles")

UTILIZATION_CAP = 200.0


def _powers_of_two(lo: int, hi: int) -> tuple[int, ...]:
    out = []
    v = 1
    while v <= hi:
        if v >= lo:
            out.append(v)
        v *= 2
    return tuple(out)


@dataclass(frozen=True)
class DepthProbability:
    """Insertion probability as a function of dense-layer depth.

    p(depth) = clip(base + gain * depth / max_depth, 0, 1); monotone in
    depth so deeper networks pick up more structural layers.
    """

    base: float
    gain: float
    max_depth: int = 20

    def __call__(self, depth: int) -> float:
        return float(min(1.0, max(0.0, self.base + self.gain * depth / self.max_depth)))


@dataclass(frozen=True)
class GeneratorSpec:
    input_sizes: tuple[int, ...] = _powers_of_two(16, 1024)
    layer_counts: tuple[int, ...] = tuple(range(2, 21))
    neuron_counts: tuple[int, ...] = _powers_of_two(2, 4096)
    output_sizes: tuple[int, ...] = tuple(range(1, 201))
    activations: tuple[ActKind, ...] = tuple(ActKind)
    precisions: tuple[int, ...] = (2, 8, 16)
    reuse_factors: tuple[int, ...] = _powers_of_two(1, 64)
    boards: tuple[str, ...] = ("pynq-z2", "zcu102", "alveo-u200")
    strategies: tuple[Strategy, ...] = (Strategy.LATENCY, Strategy.RESOURCE)
    p_batchnorm: DepthProbability = DepthProbability(0.1, 0.4)
    p_skip: DepthProbability = DepthProbability(0.05, 0.25)
    p_dropout: DepthProbability = DepthProbability(0.05, 0.15)
    softmax_final_probability: float = 0.7

    def __post_init__(self):
        for name in ("input_sizes", "layer_counts", "neuron_counts", "output_sizes",
                     "precisions", "reuse_factors", "boards", "strategies", "activations"):
            if not getattr(self, name):
                raise SchemaError(f"generator spec: {name} must be non-empty")
        if any(v < 1 for v in self.layer_counts):
            raise SchemaError("generator spec: layer counts must be >= 1")
        if not 0.0 <= self.softmax_final_probability <= 1.0:
            raise SchemaError("generator spec: softmax_final_probability must be in [0, 1]")


def generator_spec_from_dict(doc: Mapping) -> GeneratorSpec:
    """Build a GeneratorSpec from a JSON overrides document.

    Unmentioned fields keep their defaults. Probability rules are objects
    like {"base": 0.1, "gain": 0.4}; activations and strategies are name
    lists.
    """
    defaults = GeneratorSpec()
    kwargs: dict = {}
    range_fields = ("input_sizes", "layer_counts", "neuron_counts", "output_sizes",
                    "precisions", "reuse_factors")
    for name in range_fields:
        if name in doc:
            kwargs[name] = tuple(int(v) for v in doc[name])
    if "boards" in doc:
        kwargs["boards"] = tuple(str(b) for b in doc["boards"])
    if "activations" in doc:
        kwargs["activations"] = tuple(ActKind(a) for a in doc["activations"])
    if "strategies" in doc:
        kwargs["strategies"] = tuple(Strategy(s) for s in doc["strategies"])
    for name in ("p_batchnorm", "p_skip", "p_dropout"):
        if name in doc:
            rule = doc[name]
            if not isinstance(rule, Mapping) or "base" not in rule or "gain" not in rule:
                raise SchemaError(f"generator overrides: {name} needs 'base' and 'gain'")
            kwargs[name] = DepthProbability(
                base=float(rule["base"]),
                gain=float(rule["gain"]),
                max_depth=int(rule.get("max_depth", 20)),
            )
    if "softmax_final_probability" in doc:
        kwargs["softmax_final_probability"] = float(doc["softmax_final_probability"])
    known = set(range_fields) | {
        "boards", "activations", "strategies", "p_batchnorm", "p_skip", "p_dropout",
        "softmax_final_probability",
    }
    extras = set(doc) - known
    if extras:
        raise SchemaError(f"generator overrides: unknown fields {sorted(extras)}")
    return replace(defaults, **kwargs)


def generate_architecture(
    rng_seed, spec: GeneratorSpec | None = None
) -> tuple[NetworkArchitecture, SynthesisConfig]:
    """Sample one (network, config) pair; deterministic for a given seed."""
    spec = spec or GeneratorSpec()
    rng = np.random.default_rng(rng_seed)

    precision = int(rng.choice(spec.precisions))
    global_reuse = int(rng.choice(spec.reuse_factors))
    board = str(rng.choice(spec.boards))
    strategy = Strategy(str(rng.choice([s.value for s in spec.strategies])))

    n_dense = int(rng.choice(spec.layer_counts))
    input_size = int(rng.choice(spec.input_sizes))
    p_bn = spec.p_batchnorm(n_dense)
    p_skip = spec.p_skip(n_dense)
    p_do = spec.p_dropout(n_dense)

    layers: list[LayerSpec] = []
    width = input_size
    for d in range(n_dense):
        last = d == n_dense - 1
        units = int(rng.choice(spec.output_sizes if last else spec.neuron_counts))
        dense_index = len(layers)
        layers.append(
            LayerSpec(
                kind=LayerKind.DENSE,
                input_size=width,
                output_size=units,
                units=units,
                use_bias=True,
                reuse_factor=min(global_reuse, width * units),
            )
        )
        width = units
        if rng.random() < p_bn:
            layers.append(LayerSpec(LayerKind.BATCHNORM, width, width))
        if last and width > 1 and rng.random() < spec.softmax_final_probability:
            act = ActKind.SOFTMAX
        else:
            act = ActKind(str(rng.choice([a.value for a in spec.activations])))
        layers.append(LayerSpec(LayerKind.ACTIVATION, width, width, activation=act))
        if rng.random() < p_skip:
            sources = [j for j in range(dense_index) if layers[j].output_size == width]
            if sources:
                src = int(rng.choice(sources))
                layers.append(LayerSpec(LayerKind.SKIP_ADD, width, width, skip_source=src))
        if not last and rng.random() < p_do:
            layers.append(LayerSpec(LayerKind.DROPOUT, width, width))

    name = f"synth-{_seed_tag(rng_seed)}"
    net = validate_network(
        NetworkArchitecture(name=name, input_size=input_size, layers=tuple(layers))
    )
    cfg = SynthesisConfig(
        precision_bits=precision,
        global_reuse=global_reuse,
        strategy=strategy,
        board_id=board,
    )
    return net, cfg


def _seed_tag(rng_seed) -> str:
    if isinstance(rng_seed, (tuple, list)):
        return "-".join(str(int(s)) for s in rng_seed)
    return str(int(rng_seed))


def skip_eligible(layers: Sequence[LayerSpec], dense_index: int) -> bool:
    """Whether the generator could have attached a skip after this dense layer."""
    width = layers[dense_index].output_size
    return any(layers[j].output_size == width for j in range(dense_index))


@dataclass
class InsertionStats:
    """Observed structural-layer insertion counts over generated networks."""

    batchnorm: int = 0
    skip: int = 0
    dropout: int = 0
    dense_total: int = 0
    skip_eligible: int = 0
    dropout_eligible: int = 0

    def frequencies(self) -> dict[str, float]:
        return {
            "batchnorm": self.batchnorm / self.dense_total if self.dense_total else 0.0,
            "skip": self.skip / self.skip_eligible if self.skip_eligible else 0.0,
            "dropout": self.dropout / self.dropout_eligible if self.dropout_eligible else 0.0,
        }


def insertion_stats(nets: Iterable[NetworkArchitecture]) -> InsertionStats:
    """Per-dense-block insertion counts; skip/dropout counted over eligible blocks only."""
    stats = InsertionStats()
    for net in nets:
        dense_indices = [i for i, l in enumerate(net.layers) if l.kind is LayerKind.DENSE]
        for pos, i in enumerate(dense_indices):
            block_end = dense_indices[pos + 1] if pos + 1 < len(dense_indices) else len(net.layers)
            block = net.layers[i + 1 : block_end]
            stats.dense_total += 1
            if any(l.kind is LayerKind.BATCHNORM for l in block):
                stats.batchnorm += 1
            if skip_eligible(net.layers, i):
                stats.skip_eligible += 1
                if any(l.kind is LayerKind.SKIP_ADD for l in block):
                    stats.skip += 1
            if pos + 1 < len(dense_indices):
                stats.dropout_eligible += 1
                if any(l.kind is LayerKind.DROPOUT for l in block):
                    stats.dropout += 1
    return stats


# ---------------------------------------------------------------------------
# Records and datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Targets:
    bram_pct: float
    dsp_pct: float
    ff_pct: float
    lut_pct: float
    cycles: float

    def value(self, target: str) -> float:
        return self.cycles if target == "cycles" else getattr(self, f"{target}_pct")


@dataclass(frozen=True)
class RawTargets:
    """Absolute synthesis-report counts, before board normalization."""

    bram: float
    dsp: float
    ff: float
    lut: float
    cycles: float


@dataclass(frozen=True)
class RecordMeta:
    source: str  # "synthetic" | "ingested"
    name: str


@dataclass(frozen=True)
class TrainingRecord:
    features: EngineeredFeatures
    targets: Targets | None
    meta: RecordMeta


@dataclass(frozen=True)
class Dataset:
    records: tuple[TrainingRecord, ...]
    feature_schema_version: str = FEATURE_SCHEMA_VERSION

    def __len__(self) -> int:
        return len(self.records)

    def require_targets(self) -> "Dataset":
        missing = sum(1 for r in self.records if r.targets is None)
        if missing:
            raise DataError(f"{missing} records have no targets")
        return self

    def feature_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(numeric (n, 18) float64, categorical (n, 2) int64) in schema order."""
        x_num = np.stack([r.features.numeric_vector() for r in self.records])
        x_cat = np.stack([r.features.categorical_vector() for r in self.records])
        return x_num, x_cat

    def target_vector(self, target: str) -> np.ndarray:
        self.require_targets()
        return np.array([r.targets.value(target) for r in self.records], dtype=np.float64)

    def column_matrix(self) -> tuple[tuple[str, ...], np.ndarray]:
        """Features and targets side by side, for correlation analysis."""
        self.require_targets()
        names = NUMERIC_FEATURES + CATEGORICAL_FEATURES + TARGET_COLUMNS
        x_num, x_cat = self.feature_matrix()
        t = np.column_stack([self.target_vector(t) for t in TARGETS])
        return names, np.column_stack([x_num, x_cat.astype(np.float64), t])


def clamp_utilization(value: float) -> float:
    return float(min(UTILIZATION_CAP, max(0.0, value)))


def normalize_targets(raw: RawTargets, board: BoardSpec) -> Targets:
    """Map absolute resource counts to capped utilization percentages.

    Scaling uses a single multiply by (100 / capacity) so a 100-unit
    reference capacity is the exact identity, making re-normalization of
    already-normalized values idempotent bit for bit.
    """
    for name in ("bram", "dsp", "ff", "lut", "cycles"):
        if getattr(raw, name) < 0:
            raise DataError(f"raw target {name} is negative")
    return Targets(
        bram_pct=clamp_utilization(raw.bram * (100.0 / board.bram_capacity)),
        dsp_pct=clamp_utilization(raw.dsp * (100.0 / board.dsp_capacity)),
        ff_pct=clamp_utilization(raw.ff * (100.0 / board.ff_capacity)),
        lut_pct=clamp_utilization(raw.lut * (100.0 / board.lut_capacity)),
        cycles=float(raw.cycles),
    )


# ---------------------------------------------------------------------------
# Analytic pseudo-targets
# ---------------------------------------------------------------------------

# Fixed linear coefficients over the encoded feature vector. These are a
# documented stand-in for synthesis reports: they let the full train/evaluate
# pipeline run end to end when no synthesized dataset is available, and being
# exactly linear they give regression tests an analytic ground truth.
# Coefficients are sized to the sampled feature scales so no single
# heavy-tailed column dominates the target variance.
PSEUDO_TARGET_COEFFS: dict[str, dict[str, float]] = {
    "bram": {
        "intercept": 20.0, "dense_count": 2.5, "batchnorm_count": 1.5,
        "avg_dense_reuse": 0.55, "precision_bits": 1.4, "global_reuse": 0.3,
        "board_index": -10.0, "strategy_index": 16.0,
        "scaled_mult": 2.0e-8, "avg_dense_outputs": 0.01,
    },
    "dsp": {
        "intercept": 8.0, "dense_count": 1.8, "act_softmax_count": 2.2,
        "precision_bits": 1.8, "avg_dense_reuse": -0.5, "global_reuse": -0.2,
        "board_index": -7.0, "strategy_index": -6.0,
        "scaled_mult": 2.5e-8, "avg_dense_inputs": 0.012,
    },
    "ff": {
        "intercept": 15.0, "dense_count": 2.0, "act_relu_count": 1.3,
        "precision_bits": 2.0, "avg_dense_params": 3.0e-6,
        "avg_dense_inputs": 0.012, "board_index": -8.0, "strategy_index": 10.0,
        "global_reuse": 0.15, "skip_count": 1.0,
    },
    "lut": {
        "intercept": 25.0, "dense_count": 3.0, "precision_bits": 2.6,
        "scaled_add": 3.0e-8, "scaled_logical": 6.0e-5, "scaled_lookup": 2.0e-5,
        "avg_dense_outputs": 0.015, "avg_dense_reuse": -0.5,
        "board_index": -13.0, "strategy_index": -8.0, "dropout_count": 1.0,
    },
    "cycles": {
        "intercept": 40.0, "dense_count": 14.0, "avg_dense_reuse": 3.2,
        "global_reuse": 1.8, "precision_bits": 4.5, "strategy_index": 55.0,
        "board_index": 9.0, "act_softmax_count": 4.0,
        "scaled_add": 4.0e-8, "avg_dense_inputs": 0.02,
    },
}


def pseudo_target_oracle(features: EngineeredFeatures) -> Targets:
    """Deterministic linear-in-features stand-in targets."""
    values = {}
    feat = features.as_dict()
    for target, coeffs in PSEUDO_TARGET_COEFFS.items():
        v = coeffs.get("intercept", 0.0)
        for name, c in coeffs.items():
            if name != "intercept":
                v += c * float(feat[name])
        values[target] = v
    return Targets(
        bram_pct=clamp_utilization(values["bram"]),
        dsp_pct=clamp_utilization(values["dsp"]),
        ff_pct=clamp_utilization(values["ff"]),
        lut_pct=clamp_utilization(values["lut"]),
        cycles=max(0.0, values["cycles"]),
    )


# ---------------------------------------------------------------------------
# Bulk generation
# ---------------------------------------------------------------------------


def _record_hash(net: NetworkArchitecture, cfg: SynthesisConfig) -> str:
    from .netir import network_to_dict

    doc = {
        "network": network_to_dict(net),
        "config": {
            "precision_bits": cfg.precision_bits,
            "global_reuse": cfg.global_reuse,
            "strategy": cfg.strategy.value,
            "board_id": cfg.board_id,
        },
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _generate_index_range(args) -> list[tuple[str, "TrainingRecord"]]:
    master_seed, indices, spec, with_pseudo, registry_boards = args
    registry = BoardRegistry(boards=registry_boards)
    out = []
    for i in indices:
        net, cfg = generate_architecture((master_seed, i), spec)
        feats = extract_features(net, cfg, registry)
        targets = pseudo_target_oracle(feats) if with_pseudo else None
        rec = TrainingRecord(
            features=feats, targets=targets, meta=RecordMeta(source="synthetic", name=net.name)
        )
        out.append((_record_hash(net, cfg), rec))
    return out


def generate_dataset(
    master_seed: int,
    count: int,
    spec: GeneratorSpec | None = None,
    registry: BoardRegistry | None = None,
    with_pseudo_targets: bool = False,
    workers: int = 1,
) -> Dataset:
    """Generate ``count`` records; output is identical for any worker count."""
    spec = spec or GeneratorSpec()
    registry = registry or default_board_registry()
    indices = list(range(count))
    if workers <= 1 or count < 2 * workers:
        pairs = _generate_index_range((master_seed, indices, spec, with_pseudo_targets, registry.boards))
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        pairs = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(
                _generate_index_range,
                [(master_seed, c, spec, with_pseudo_targets, registry.boards) for c in chunks],
            ):
                pairs.extend(part)
    pairs.sort(key=lambda p: p[0])
    return Dataset(records=tuple(rec for _, rec in pairs))


# ---------------------------------------------------------------------------
# CSV serialization and ingestion
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("name", "source") + NUMERIC_FEATURES + CATEGORICAL_FEATURES + TARGET_COLUMNS

_INT_FEATURES = {
    "dense_count", "batchnorm_count", "skip_count", "dropout_count",
    "act_relu_count", "act_tanh_count", "act_sigmoid_count", "act_softmax_count",
    "scaled_add", "scaled_mult", "scaled_logical", "scaled_lookup",
    "precision_bits", "global_reuse", "board_index", "strategy_index",
}


def write_dataset_csv(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in ds.records:
            feat = rec.features.as_dict()
            row = [rec.meta.name, rec.meta.source]
            for col in NUMERIC_FEATURES + CATEGORICAL_FEATURES:
                v = feat[col]
                row.append(str(int(v)) if col in _INT_FEATURES else repr(float(v)))
            if rec.targets is None:
                row.extend([""] * len(TARGET_COLUMNS))
            else:
                row.extend(repr(float(rec.targets.value(t))) for t in TARGETS)
            writer.writerow(row)


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_kept: int = 0
    rows_skipped: int = 0
    values_clamped: int = 0
    skip_reasons: dict = field(default_factory=dict)

    def note_skip(self, reason: str) -> None:
        self.rows_skipped += 1
        self.skip_reasons[reason] = self.skip_reasons.get(reason, 0) + 1


@dataclass(frozen=True)
class ColumnMapping:
    """Adapter from a foreign dataset schema to the canonical columns.

    ``columns`` renames canonical -> source column. ``board_name_column`` /
    ``strategy_name_column`` derive the ordinal codes from name columns.
    ``raw_targets`` names absolute-count columns to be normalized against the
    named board's capacities. ``network_column`` holds a network JSON
    document per row, from which features are extracted (taking priority
    over direct feature columns).
    """

    columns: Mapping[str, str] = field(default_factory=dict)
    board_name_column: str | None = None
    strategy_name_column: str | None = None
    raw_targets: Mapping[str, str] = field(default_factory=dict)
    network_column: str | None = None

    @staticmethod
    def from_dict(doc: Mapping) -> "ColumnMapping":
        known = {"columns", "board_name_column", "strategy_name_column", "raw_targets", "network_column"}
        extras = set(doc) - known
        if extras:
            raise SchemaError(f"mapping document: unknown fields {sorted(extras)}")
        return ColumnMapping(
            columns=dict(doc.get("columns", {})),
            board_name_column=doc.get("board_name_column"),
            strategy_name_column=doc.get("strategy_name_column"),
            raw_targets=dict(doc.get("raw_targets", {})),
            network_column=doc.get("network_column"),
        )

    @staticmethod
    def load(path: str | Path) -> "ColumnMapping":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"mapping document is not valid JSON: {exc}") from exc
        return ColumnMapping.from_dict(doc)

    def source_column(self, canonical: str) -> str:
        return self.columns.get(canonical, canonical)


def _parse_float(cell: str | None) -> float:
    if cell is None or cell.strip() == "":
        raise ValueError("empty cell")
    return float(cell)


def ingest_dataset(
    path: str | Path,
    mapping: ColumnMapping | Mapping | str | Path | None = None,
    registry: BoardRegistry | None = None,
) -> tuple[Dataset, IngestReport]:
    """Read a delimited dataset, validating and normalizing row by row.

    Rows failing validation are skipped and counted; utilization values
    outside [0, 200] are clamped and counted. Raises DataError for an
    unreadable file, a mapping that references absent columns, or zero
    valid rows.
    """
    registry = registry or default_board_registry()
    if mapping is None:
        mapping = ColumnMapping()
    elif isinstance(mapping, (str, Path)):
        mapping = ColumnMapping.load(mapping)
    elif isinstance(mapping, Mapping):
        mapping = ColumnMapping.from_dict(mapping)

    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"dataset file {path} has no header row")
        header = set(reader.fieldnames)
        _check_mapping_columns(mapping, header)
        report = IngestReport()
        records = []
        for row in reader:
            report.rows_read += 1
            try:
                records.append(_ingest_row(row, mapping, registry, report))
                report.rows_kept += 1
            except (ValueError, SchemaError, DataError) as exc:
                report.note_skip(type(exc).__name__ + ": " + _brief(str(exc)))
    if not records:
        raise DataError(f"dataset file {path} produced zero valid rows")
    return Dataset(records=tuple(records)), report


def _brief(msg: str, limit: int = 60) -> str:
    return msg if len(msg) <= limit else msg[: limit - 3] + "..."


def _check_mapping_columns(mapping: ColumnMapping, header: set[str]) -> None:
    wanted = list(mapping.columns.values()) + list(mapping.raw_targets.values())
    for col in (mapping.board_name_column, mapping.strategy_name_column, mapping.network_column):
        if col is not None:
            wanted.append(col)
    missing = [c for c in wanted if c not in header]
    if missing:
        raise DataError(f"mapping references absent columns: {missing}")
    if mapping.network_column is None:
        needed = [mapping.source_column(c) for c in NUMERIC_FEATURES]
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"dataset missing feature columns: {missing}")


def _ingest_row(
    row: Mapping[str, str],
    mapping: ColumnMapping,
    registry: BoardRegistry,
    report: IngestReport,
) -> TrainingRecord:
    board_id = None
    if mapping.board_name_column:
        board_id = row[mapping.board_name_column].strip()

    if mapping.network_column:
        feats = _features_from_document(row, mapping, registry, board_id)
    else:
        feats = _features_from_columns(row, mapping, registry, board_id)

    targets = _targets_from_row(row, mapping, registry, board_id, report)
    name = row.get(mapping.source_column("name"), "") or "row"
    source = row.get(mapping.source_column("source"), "") or "ingested"
    return TrainingRecord(
        features=feats, targets=targets, meta=RecordMeta(source=source, name=name)
    )


def _features_from_document(
    row, mapping: ColumnMapping, registry: BoardRegistry, board_id: str | None
) -> EngineeredFeatures:
    net = parse_network(row[mapping.network_column])
    precision = int(_parse_float(row[mapping.source_column("precision_bits")]))
    reuse = int(_parse_float(row[mapping.source_column("global_reuse")]))
    if board_id is None:
        board_id = registry.ids[int(_parse_float(row[mapping.source_column("board_index")]))]
    if mapping.strategy_name_column:
        strategy = Strategy(row[mapping.strategy_name_column].strip().lower())
    else:
        strategy = (Strategy.LATENCY, Strategy.RESOURCE)[
            int(_parse_float(row[mapping.source_column("strategy_index")]))
        ]
    cfg = SynthesisConfig(
        precision_bits=precision, global_reuse=reuse, strategy=strategy, board_id=board_id
    )
    return extract_features(net, cfg, registry)


def _features_from_columns(
    row, mapping: ColumnMapping, registry: BoardRegistry, board_id: str | None
) -> EngineeredFeatures:
    values: dict = {}
    for colname in NUMERIC_FEATURES:
        raw = _parse_float(row[mapping.source_column(colname)])
        values[colname] = int(raw) if colname in _INT_FEATURES else float(raw)
    if board_id is not None:
        values["board_index"] = registry.index_of(board_id)
    else:
        values["board_index"] = int(_parse_float(row[mapping.source_column("board_index")]))
    if mapping.strategy_name_column:
        values["strategy_index"] = (Strategy.LATENCY, Strategy.RESOURCE).index(
            Strategy(row[mapping.strategy_name_column].strip().lower())
        )
    else:
        values["strategy_index"] = int(_parse_float(row[mapping.source_column("strategy_index")]))
    if values["board_index"] not in range(len(registry)):
        raise DataError(f"board_index {values['board_index']} outside registry")
    if values["strategy_index"] not in (0, 1):
        raise DataError(f"strategy_index {values['strategy_index']} must be 0 or 1")
    return EngineeredFeatures(**values)


def _targets_from_row(
    row, mapping: ColumnMapping, registry: BoardRegistry, board_id: str | None, report: IngestReport
) -> Targets:
    if mapping.raw_targets:
        if set(mapping.raw_targets) != set(RESOURCES):
            raise SchemaError(f"raw_targets mapping must name exactly {list(RESOURCES)}")
        if board_id is None:
            raise SchemaError("raw_targets normalization needs board_name_column")
        board = registry.get(board_id)
        raw = RawTargets(
            bram=_parse_float(row[mapping.raw_targets["bram"]]),
            dsp=_parse_float(row[mapping.raw_targets["dsp"]]),
            ff=_parse_float(row[mapping.raw_targets["ff"]]),
            lut=_parse_float(row[mapping.raw_targets["lut"]]),
            cycles=_parse_float(row[mapping.source_column("cycles")]),
        )
        before = (
            100.0 * raw.bram / board.bram_capacity,
            100.0 * raw.dsp / board.dsp_capacity,
            100.0 * raw.ff / board.ff_capacity,
            100.0 * raw.lut / board.lut_capacity,
        )
        report.values_clamped += sum(1 for v in before if v > UTILIZATION_CAP or v < 0.0)
        return normalize_targets(raw, board)

    values = {}
    for col in TARGET_COLUMNS:
        v = _parse_float(row[mapping.source_column(col)])
        if col == "cycles":
            if v < 0:
                raise DataError("cycles is negative")
            values[col] = float(v)
        else:
            clamped = clamp_utilization(v)
            if clamped != v:
                report.values_clamped += 1
            values[col] = clamped
    return Targets(**values)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def split_dataset(
    ds: Dataset, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1), seed: int = 0
) -> tuple[Dataset, Dataset, Dataset]:
    """Shuffled disjoint partition; sizes by largest-remainder rounding."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise DataError("fractions must be three positive values")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError("fractions must sum to 1")
    n = len(ds)
    if n < 3:
        raise DataError("dataset must have at least 3 rows to split")

    exact = [f * n for f in fractions]
    sizes = [int(np.floor(e)) for e in exact]
    remainders = [e - s for e, s in zip(exact, sizes)]
    while sum(sizes) < n:
        i = int(np.argmax(remainders))
        sizes[i] += 1
        remainders[i] = -1.0

    perm = np.random.default_rng(seed).permutation(n)
    bounds = np.cumsum(sizes)
    parts = np.split(perm, bounds[:-1])
    out = []
    for idx in parts:
        out.append(Dataset(records=tuple(ds.records[i] for i in idx)))
    return out[0], out[1], out[2]
