"""Network intermediate representation, synthesis configuration, and board registry.

Networks are flat sequences of layer specs with fully resolved input/output
sizes. Parsing accepts the JSON document format described in
``data/network.schema.json`` and infers shapes layer by layer, so documents
only declare sizes where a layer introduces one (dense units).

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import NetworkValidationError, SchemaError, UnknownBoardError


class LayerKind(str, Enum):
    DENSE = "dense"
    ACTIVATION = "activation"
    BATCHNORM = "batchnorm"
    SKIP_ADD = "skip_add"
    DROPOUT = "dropout"


class ActKind(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"


class Strategy(str, Enum):
    LATENCY = "latency"
    RESOURCE = "resource"


STRATEGY_ORDER = (Strategy.LATENCY, Strategy.RESOURCE)


@dataclass(frozen=True)
class LayerSpec:
    """One layer with resolved shapes.

    ``units``/``use_bias``/``reuse_factor`` apply to dense layers only;
    ``activation`` to activation layers; ``skip_source`` to skip_add layers.
    A dense ``reuse_factor`` of None means the layer follows the global reuse
    factor of whatever synthesis config it is evaluated under.
    """

    kind: LayerKind
    input_size: int
    output_size: int
    units: int | None = None
    use_bias: bool = True
    reuse_factor: int | None = None
    activation: ActKind | None = None
    skip_source: int | None = None


@dataclass(frozen=True)
class NetworkArchitecture:
    name: str
    input_size: int
    layers: tuple[LayerSpec, ...]


@dataclass(frozen=True)
class SynthesisConfig:
    """Global synthesis knobs a network is costed under.

    ``clock_period_ns`` is carried as metadata for latency-time conversion
    only; predictors ignore it.
    """

    precision_bits: int
    global_reuse: int
    strategy: Strategy
    board_id: str
    clock_period_ns: float = 10.0

    def __post_init__(self):
        if self.precision_bits < 1:
            raise NetworkValidationError("precision_bits must be a positive integer")
        if self.global_reuse < 1:
            raise NetworkValidationError("global_reuse must be a positive integer")
        if self.clock_period_ns <= 0:
            raise NetworkValidationError("clock_period_ns must be positive")


@dataclass(frozen=True)
class BoardSpec:
    id: str
    bram_capacity: int
    dsp_capacity: int
    ff_capacity: int
    lut_capacity: int

    def __post_init__(self):
        for name in ("bram_capacity", "dsp_capacity", "ff_capacity", "lut_capacity"):
            if getattr(self, name) <= 0:
                raise SchemaError(f"board {self.id!r}: {name} must be strictly positive")

    def capacity(self, resource: str) -> int:
        return getattr(self, f"{resource}_capacity")


@dataclass(frozen=True)
class BoardRegistry:
    """Ordered board specs; declaration order defines the categorical encoding."""

    boards: tuple[BoardSpec, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.boards)

    def get(self, board_id: str) -> BoardSpec:
        for b in self.boards:
            if b.id == board_id:
                return b
        raise UnknownBoardError(f"unknown board {board_id!r}; known: {', '.join(self.ids)}")

    def index_of(self, board_id: str) -> int:
        try:
            return self.ids.index(board_id)
        except ValueError:
            raise UnknownBoardError(
                f"unknown board {board_id!r}; known: {', '.join(self.ids)}"
            ) from None

    def __len__(self) -> int:
        return len(self.boards)


def validate_network(net: NetworkArchitecture) -> NetworkArchitecture:
    """Check every structural invariant; returns the network unchanged."""
    if not net.layers:
        raise NetworkValidationError(f"network {net.name!r} has no layers")
    if net.input_size < 1:
        raise NetworkValidationError(f"network {net.name!r}: input_size must be positive")
    if net.layers[0].input_size != net.input_size:
        raise NetworkValidationError(
            f"network {net.name!r}: first layer input {net.layers[0].input_size} "
            f"!= network input_size {net.input_size}"
        )
    for i, layer in enumerate(net.layers):
        _validate_layer(net, i, layer)
        if i + 1 < len(net.layers) and net.layers[i + 1].input_size != layer.output_size:
            raise NetworkValidationError(
                f"network {net.name!r}: layer {i + 1} input {net.layers[i + 1].input_size} "
                f"!= layer {i} output {layer.output_size}"
            )
    return net


def _validate_layer(net: NetworkArchitecture, index: int, layer: LayerSpec) -> None:
    where = f"network {net.name!r}, layer {index} ({layer.kind.value})"
    if layer.input_size < 1 or layer.output_size < 1:
        raise NetworkValidationError(f"{where}: sizes must be positive")
    if layer.kind is LayerKind.DENSE:
        if layer.units is None or layer.units < 1:
            raise NetworkValidationError(f"{where}: dense layer needs units >= 1")
        if layer.output_size != layer.units:
            raise NetworkValidationError(f"{where}: output_size must equal units")
        if layer.reuse_factor is not None:
            bound = layer.input_size * layer.output_size
            if not 1 <= layer.reuse_factor <= bound:
                raise NetworkValidationError(
                    f"{where}: reuse_factor {layer.reuse_factor} outside [1, {bound}]"
                )
    else:
        if layer.output_size != layer.input_size:
            raise NetworkValidationError(f"{where}: output_size must equal input_size")
        if layer.kind is LayerKind.ACTIVATION and layer.activation is None:
            raise NetworkValidationError(f"{where}: activation layer needs an activation kind")
        if layer.kind is not LayerKind.ACTIVATION and layer.activation is not None:
            raise NetworkValidationError(f"{where}: only activation layers carry an activation")
        if layer.kind is LayerKind.SKIP_ADD:
            src = layer.skip_source
            if src is None or not 0 <= src < index:
                raise NetworkValidationError(
                    f"{where}: skip_source must reference an earlier layer"
                )
            src_width = net.layers[src].output_size
            if src_width != layer.input_size:
                raise NetworkValidationError(
                    f"{where}: skip_source width {src_width} != layer width {layer.input_size}"
                )


def effective_reuse(layer: LayerSpec, requested: int) -> int:
    """Clamp a requested reuse factor to the layer's input x output product."""
    if layer.kind is not LayerKind.DENSE:
        raise NetworkValidationError("effective_reuse applies to dense layers only")
    if requested < 1:
        raise NetworkValidationError("requested reuse factor must be >= 1")
    return min(requested, layer.input_size * layer.output_size)


def param_count(net: NetworkArchitecture) -> int:
    """Trainable parameter total: dense weights/biases plus 2 per batchnorm channel."""
    total = 0
    for layer in net.layers:
        if layer.kind is LayerKind.DENSE:
            total += layer.input_size * layer.units
            if layer.use_bias:
                total += layer.units
        elif layer.kind is LayerKind.BATCHNORM:
            total += 2 * layer.output_size
    return total


def dense_layer_params(layer: LayerSpec) -> int:
    """Parameter count of a single dense layer (used for the unroll limit check)."""
    if layer.kind is not LayerKind.DENSE:
        return 0
    return layer.input_size * layer.units + (layer.units if layer.use_bias else 0)


# ---------------------------------------------------------------------------
# Document parsing / serialization
# ---------------------------------------------------------------------------

_KIND_FIELDS = {
    LayerKind.DENSE: {"units", "use_bias", "reuse_factor"},
    LayerKind.ACTIVATION: {"activation"},
    LayerKind.BATCHNORM: set(),
    LayerKind.SKIP_ADD: {"skip_source"},
    LayerKind.DROPOUT: set(),
}


def network_from_dict(doc: Mapping) -> NetworkArchitecture:
    """Build a validated, shape-inferred network from a parsed JSON document."""
    if not isinstance(doc, Mapping):
        raise SchemaError("network document must be a JSON object")
    for key in ("name", "input_size", "layers"):
        if key not in doc:
            raise SchemaError(f"network document missing required field {key!r}")
    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("network name must be a non-empty string")
    input_size = doc["input_size"]
    if not isinstance(input_size, int) or isinstance(input_size, bool) or input_size < 1:
        raise SchemaError("input_size must be a positive integer")
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise SchemaError("layers must be a non-empty array")

    layers: list[LayerSpec] = []
    width = input_size
    for i, entry in enumerate(raw_layers):
        if not isinstance(entry, Mapping):
            raise SchemaError(f"layer {i}: must be an object")
        kind_name = entry.get("kind")
        try:
            kind = LayerKind(kind_name)
        except ValueError:
            raise SchemaError(f"layer {i}: unknown layer kind {kind_name!r}") from None
        extras = set(entry) - _KIND_FIELDS[kind] - {"kind", "input_size"}
        if extras:
            raise SchemaError(
                f"layer {i} ({kind.value}): unexpected fields {sorted(extras)}"
            )
        declared = entry.get("input_size")
        if declared is not None and declared != width:
            raise SchemaError(
                f"layer {i} ({kind.value}): declared input_size {declared} "
                f"does not match inferred width {width}"
            )
        layers.append(_layer_from_entry(i, kind, entry, width))
        width = layers[-1].output_size

    return validate_network(NetworkArchitecture(name=name, input_size=input_size, layers=tuple(layers)))


def _layer_from_entry(index: int, kind: LayerKind, entry: Mapping, width: int) -> LayerSpec:
    if kind is LayerKind.DENSE:
        units = entry.get("units")
        if not isinstance(units, int) or isinstance(units, bool) or units < 1:
            raise SchemaError(f"layer {index}: dense layer needs integer units >= 1")
        use_bias = entry.get("use_bias", True)
        if not isinstance(use_bias, bool):
            raise SchemaError(f"layer {index}: use_bias must be a boolean")
        reuse = entry.get("reuse_factor")
        if reuse is not None and (not isinstance(reuse, int) or isinstance(reuse, bool) or reuse < 1):
            raise SchemaError(f"layer {index}: reuse_factor must be a positive integer")
        return LayerSpec(
            kind=kind, input_size=width, output_size=units, units=units,
            use_bias=use_bias, reuse_factor=reuse,
        )
    if kind is LayerKind.ACTIVATION:
        act_name = entry.get("activation")
        try:
            act = ActKind(act_name)
        except ValueError:
            raise SchemaError(f"layer {index}: unknown activation {act_name!r}") from None
        return LayerSpec(kind=kind, input_size=width, output_size=width, activation=act)
    if kind is LayerKind.SKIP_ADD:
        src = entry.get("skip_source")
        if not isinstance(src, int) or isinstance(src, bool) or src < 0:
            raise SchemaError(f"layer {index}: skip_add needs a nonnegative skip_source index")
        return LayerSpec(kind=kind, input_size=width, output_size=width, skip_source=src)
    return LayerSpec(kind=kind, input_size=width, output_size=width)


def parse_network(text: str) -> NetworkArchitecture:
    """Parse and validate a network JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"network document is not valid JSON: {exc}") from exc
    return network_from_dict(doc)


def load_network(path: str | Path) -> NetworkArchitecture:
    return parse_network(Path(path).read_text())


def network_to_dict(net: NetworkArchitecture) -> dict:
    """Inverse of network_from_dict; omits inferable fields."""
    layers = []
    for layer in net.layers:
        entry: dict = {"kind": layer.kind.value}
        if layer.kind is LayerKind.DENSE:
            entry["units"] = layer.units
            if not layer.use_bias:
                entry["use_bias"] = False
            if layer.reuse_factor is not None:
                entry["reuse_factor"] = layer.reuse_factor
        elif layer.kind is LayerKind.ACTIVATION:
            entry["activation"] = layer.activation.value
        elif layer.kind is LayerKind.SKIP_ADD:
            entry["skip_source"] = layer.skip_source
        layers.append(entry)
    return {"name": net.name, "input_size": net.input_size, "layers": layers}


def serialize_network(net: NetworkArchitecture) -> str:
    return json.dumps(network_to_dict(net), indent=2, sort_keys=False)


def with_global_reuse(net: NetworkArchitecture, requested: int) -> NetworkArchitecture:
    """Copy of the network with every dense layer's reuse clamped from ``requested``."""
    layers = tuple(
        replace(l, reuse_factor=effective_reuse(l, requested)) if l.kind is LayerKind.DENSE else l
        for l in net.layers
    )
    return replace(net, layers=layers)


# ---------------------------------------------------------------------------
# Board registry
# ---------------------------------------------------------------------------

_BOARD_FIELDS = ("bram_capacity", "dsp_capacity", "ff_capacity", "lut_capacity")


def _reject_duplicate_keys(pairs: Iterable[tuple[str, object]]) -> dict:
    out: dict = {}
    for key, value in pairs:
        if key in out:
            raise SchemaError(f"duplicate key {key!r} in document")
        out[key] = value
    return out


def parse_board_registry(text: str) -> BoardRegistry:
    """Parse a board registry JSON document (id -> capacities, order preserved)."""
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"board registry is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not doc:
        raise SchemaError("board registry must be a non-empty JSON object")
    boards = []
    for board_id, caps in doc.items():
        if not isinstance(caps, dict):
            raise SchemaError(f"board {board_id!r}: entry must be an object")
        missing = [f for f in _BOARD_FIELDS if f not in caps]
        if missing:
            raise SchemaError(f"board {board_id!r}: missing fields {missing}")
        values = {}
        for f in _BOARD_FIELDS:
            v = caps[f]
            if not isinstance(v, int) or isinstance(v, bool):
                raise SchemaError(f"board {board_id!r}: {f} must be an integer")
            values[f] = v
        boards.append(BoardSpec(id=board_id, **values))
    return BoardRegistry(boards=tuple(boards))


def load_board_registry(path: str | Path) -> BoardRegistry:
    return parse_board_registry(Path(path).read_text())


def default_board_registry() -> BoardRegistry:
    """Registry shipped with the package (pynq-z2, zcu102, alveo-u200)."""
    text = resources.files("fpgacost.data").joinpath("boards.json").read_text()
    return parse_board_registry(text)
