"""Versioned model-file container.

Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON header,
weight payload (every parameter array in canonical order as little-endian
float64), and a trailing SHA-256 digest over everything before it. The
header carries the format version, feature schema version, target id,
architecture widths, and both scalers, so a file is self-describing.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .model import MlpRegressor

MAGIC = b"FCMLPREG"
FORMAT_VERSION = 1


def _header_dict(model: MlpRegressor) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "feature_schema_version": model.feature_schema_version,
        "target": model.target,
        "numeric_features": list(model.numeric_features),
        "embedding_cardinalities": list(model.embedding_cardinalities),
        "embedding_dim": model.embedding_dim,
        "block1_widths": list(model.block1_widths),
        "block2_widths": list(model.block2_widths),
        "scaler_mean": [float(v) for v in model.scaler_mean],
        "scaler_std": [float(v) for v in model.scaler_std],
        "target_mean": model.target_mean,
        "target_std": model.target_std,
    }


def save_model(model: MlpRegressor, path: str | Path) -> None:
    header = json.dumps(_header_dict(model), sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.parameters()
    )
    body = MAGIC + struct.pack("<I", len(header)) + header + payload
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)


def _expected_shapes(header: dict) -> list[tuple[int, ...]]:
    dim = header["embedding_dim"]
    shapes: list[tuple[int, ...]] = [(card, dim) for card in header["embedding_cardinalities"]]
    n_in = len(header["numeric_features"])
    for w in header["block1_widths"]:
        shapes.extend(((n_in, w), (w,)))
        n_in = w
    n_in += dim * len(header["embedding_cardinalities"])
    for w in header["block2_widths"]:
        shapes.extend(((n_in, w), (w,)))
        n_in = w
    shapes.extend(((n_in, 1), (1,)))
    return shapes


def load_model(path: str | Path) -> MlpRegressor:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc

    if len(blob) < len(MAGIC) + 4 + 32:
        raise ModelFormatError(f"model file {path} is truncated")
    if blob[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"model file {path} has the wrong magic bytes")

    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelFormatError(f"model file {path} failed its checksum")

    (header_len,) = struct.unpack("<I", body[len(MAGIC) : len(MAGIC) + 4])
    header_start = len(MAGIC) + 4
    if header_start + header_len > len(body):
        raise ModelFormatError(f"model file {path} is truncated")
    try:
        header = json.loads(body[header_start : header_start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"model file {path} has a corrupt header: {exc}") from exc

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"model file {path} has format version {version}, "
            f"this reader supports version {FORMAT_VERSION}"
        )

    shapes = _expected_shapes(header)
    payload = body[header_start + header_len :]
    expected_bytes = sum(int(np.prod(s)) for s in shapes) * 8
    if len(payload) != expected_bytes:
        raise ModelFormatError(
            f"model file {path} payload is {len(payload)} bytes, expected {expected_bytes}"
        )

    arrays = []
    offset = 0
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(
            np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            .astype(np.float64)
            .reshape(shape)
            .copy()
        )
        offset += count * 8

    n_emb = len(header["embedding_cardinalities"])
    n_b1 = len(header["block1_widths"])
    n_b2 = len(header["block2_widths"])
    embeddings = arrays[:n_emb]
    pos = n_emb
    block1 = [(arrays[pos + 2 * i], arrays[pos + 2 * i + 1]) for i in range(n_b1)]
    pos += 2 * n_b1
    block2 = [(arrays[pos + 2 * i], arrays[pos + 2 * i + 1]) for i in range(n_b2)]
    pos += 2 * n_b2
    head_w, head_b = arrays[pos], arrays[pos + 1]

    return MlpRegressor(
        target=header["target"],
        numeric_features=tuple(header["numeric_features"]),
        embedding_cardinalities=tuple(header["embedding_cardinalities"]),
        embedding_dim=header["embedding_dim"],
        block1_widths=tuple(header["block1_widths"]),
        block2_widths=tuple(header["block2_widths"]),
        embeddings=embeddings,
        block1=block1,
        block2=block2,
        head_w=head_w,
        head_b=head_b,
        scaler_mean=np.array(header["scaler_mean"], dtype=np.float64),
        scaler_std=np.array(header["scaler_std"], dtype=np.float64),
        target_mean=float(header["target_mean"]),
        target_std=float(header["target_std"]),
        feature_schema_version=header["feature_schema_version"],
    )
