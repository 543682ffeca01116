"""Model structure, forward/backward passes, and gradient verification.

Each regressor feeds standardized numeric features through a first dense
block, concatenates the result with trainable embedding vectors for the
ordinal categorical inputs (board, strategy), and passes the combination
through a second dense block into a single affine output unit. ReLU follows
every dense layer except the output head. Everything is float64 numpy; the
backward pass is written out explicitly so it can be verified coordinate by
coordinate against central finite differences.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import CostModelError, ModelFormatError
from ..features import CATEGORICAL_FEATURES, FEATURE_SCHEMA_VERSION, NUMERIC_FEATURES

TARGETS = ("bram", "dsp", "ff", "lut", "cycles")

DEFAULT_EMBEDDING_DIM = 4
DEFAULT_BOARD_CARDINALITY = 3
STRATEGY_CARDINALITY = 2


@dataclass(frozen=True)
class ModelTableRow:
    block1: tuple[int, ...]
    block2: tuple[int, ...]
    batch_size: int
    learning_rate: float


# Fine-tuned per-target configurations (fixed; no architecture search here).
MODEL_TABLE: dict[str, ModelTableRow] = {
    "bram": ModelTableRow((32, 16, 32), (256, 256, 256, 64, 32, 64, 64), 64, 1e-4),
    "dsp": ModelTableRow((64, 32, 32), (256, 16, 32, 32, 64), 32, 1e-4),
    "ff": ModelTableRow((64, 16, 32), (64, 128, 64, 256, 32), 64, 1e-4),
    "lut": ModelTableRow((64, 16, 32, 32), (64, 128, 128, 64), 32, 1e-4),
    "cycles": ModelTableRow((32, 16, 64), (256, 32, 32, 32, 256, 128, 128, 32, 16, 16, 64), 64, 1e-3),
}


@dataclass
class MlpRegressor:
    """Weights and input-scaling state of one per-target regressor."""

    target: str
    numeric_features: tuple[str, ...]
    embedding_cardinalities: tuple[int, ...]  # (boards, strategies)
    embedding_dim: int
    block1_widths: tuple[int, ...]
    block2_widths: tuple[int, ...]
    embeddings: list[np.ndarray]
    block1: list[tuple[np.ndarray, np.ndarray]]
    block2: list[tuple[np.ndarray, np.ndarray]]
    head_w: np.ndarray  # (last_width, 1)
    head_b: np.ndarray  # (1,)
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0
    feature_schema_version: str = FEATURE_SCHEMA_VERSION

    def parameters(self) -> list[np.ndarray]:
        """All trainable arrays in the canonical (serialization) order."""
        params = list(self.embeddings)
        for w, b in self.block1:
            params.extend((w, b))
        for w, b in self.block2:
            params.extend((w, b))
        params.extend((self.head_w, self.head_b))
        return params

    def set_parameters(self, values: list[np.ndarray]) -> None:
        own = self.parameters()
        if len(own) != len(values):
            raise CostModelError("parameter list length mismatch")
        for dst, src in zip(own, values):
            if dst.shape != src.shape:
                raise CostModelError(f"parameter shape mismatch: {dst.shape} vs {src.shape}")
            dst[...] = src

    def clone(self) -> "MlpRegressor":
        c = MlpRegressor(
            target=self.target,
            numeric_features=self.numeric_features,
            embedding_cardinalities=self.embedding_cardinalities,
            embedding_dim=self.embedding_dim,
            block1_widths=self.block1_widths,
            block2_widths=self.block2_widths,
            embeddings=[e.copy() for e in self.embeddings],
            block1=[(w.copy(), b.copy()) for w, b in self.block1],
            block2=[(w.copy(), b.copy()) for w, b in self.block2],
            head_w=self.head_w.copy(),
            head_b=self.head_b.copy(),
            scaler_mean=self.scaler_mean.copy(),
            scaler_std=self.scaler_std.copy(),
            target_mean=self.target_mean,
            target_std=self.target_std,
            feature_schema_version=self.feature_schema_version,
        )
        return c


def build_model(
    target: str,
    seed: int = 0,
    board_cardinality: int = DEFAULT_BOARD_CARDINALITY,
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
) -> MlpRegressor:
    """Fresh model with the per-target architecture and seeded initialization.

    Dense weights use uniform He-style fan-in scaling (suits the all-ReLU
    stacks), biases start at zero, and embeddings start small uniform.
    """
    if target not in MODEL_TABLE:
        raise CostModelError(f"unknown target {target!r}; expected one of {TARGETS}")
    row = MODEL_TABLE[target]
    rng = np.random.default_rng(seed)
    n_numeric = len(NUMERIC_FEATURES)
    cardinalities = (board_cardinality, STRATEGY_CARDINALITY)

    embeddings = [rng.uniform(-0.05, 0.05, size=(card, embedding_dim)) for card in cardinalities]

    def dense_stack(n_in: int, widths: tuple[int, ...]):
        layers = []
        for w in widths:
            limit = np.sqrt(6.0 / n_in)
            layers.append((rng.uniform(-limit, limit, size=(n_in, w)), np.zeros(w)))
            n_in = w
        return layers, n_in

    block1, out1 = dense_stack(n_numeric, row.block1)
    block2_in = out1 + embedding_dim * len(cardinalities)
    block2, out2 = dense_stack(block2_in, row.block2)
    limit = np.sqrt(6.0 / out2)
    head_w = rng.uniform(-limit, limit, size=(out2, 1))
    head_b = np.zeros(1)

    return MlpRegressor(
        target=target,
        numeric_features=NUMERIC_FEATURES,
        embedding_cardinalities=cardinalities,
        embedding_dim=embedding_dim,
        block1_widths=row.block1,
        block2_widths=row.block2,
        embeddings=embeddings,
        block1=block1,
        block2=block2,
        head_w=head_w,
        head_b=head_b,
        scaler_mean=np.zeros(n_numeric),
        scaler_std=np.ones(n_numeric),
    )


def model_id(model: MlpRegressor) -> str:
    """Short content hash of the weights; identifies a trained model."""
    digest = hashlib.sha256()
    for p in model.parameters():
        digest.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return digest.hexdigest()[:12]


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


@dataclass
class ForwardCache:
    xs: np.ndarray                 # standardized numeric inputs (B, n_numeric)
    z1: list[np.ndarray]           # block1 pre-activations
    a1: list[np.ndarray]           # block1 layer inputs; a1[0] == xs
    emb: np.ndarray                # concatenated embedding outputs (B, total)
    z2: list[np.ndarray]           # block2 pre-activations
    a2: list[np.ndarray]           # block2 layer inputs; a2[0] == concat
    pred_s: np.ndarray             # standardized predictions (B,)


def _check_inputs(model: MlpRegressor, x_num: np.ndarray, x_cat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x_num = np.atleast_2d(np.asarray(x_num, dtype=np.float64))
    x_cat = np.atleast_2d(np.asarray(x_cat))
    if x_num.shape[1] != len(model.numeric_features):
        raise CostModelError(
            f"feature vector has {x_num.shape[1]} numeric columns, "
            f"model expects {len(model.numeric_features)}"
        )
    if x_cat.shape[1] != len(model.embedding_cardinalities):
        raise CostModelError(
            f"expected {len(model.embedding_cardinalities)} categorical indices"
        )
    if not np.issubdtype(x_cat.dtype, np.integer):
        raise CostModelError("categorical indices must be integers")
    for t, card in enumerate(model.embedding_cardinalities):
        col = x_cat[:, t]
        if col.min() < 0 or col.max() >= card:
            raise CostModelError(
                f"categorical index out of range for table {t}: valid range is [0, {card})"
            )
    return x_num, x_cat


def forward_cached(model: MlpRegressor, x_num, x_cat) -> ForwardCache:
    x_num, x_cat = _check_inputs(model, x_num, x_cat)
    xs = (x_num - model.scaler_mean) / model.scaler_std

    a = xs
    z1, a1 = [], [a]
    for w, b in model.block1:
        z = a @ w + b
        z1.append(z)
        a = np.maximum(z, 0.0)
        a1.append(a)

    emb = np.concatenate([table[x_cat[:, t]] for t, table in enumerate(model.embeddings)], axis=1)

    c = np.concatenate([a1[-1], emb], axis=1)
    z2, a2 = [], [c]
    for w, b in model.block2:
        z = c @ w + b
        z2.append(z)
        c = np.maximum(z, 0.0)
        a2.append(c)

    pred_s = (c @ model.head_w)[:, 0] + model.head_b[0]
    return ForwardCache(xs=xs, z1=z1, a1=a1, emb=emb, z2=z2, a2=a2, pred_s=pred_s)


def forward(model: MlpRegressor, x_num, x_cat) -> np.ndarray:
    """Predictions in original target units; pure function of (model, inputs)."""
    cache = forward_cached(model, x_num, x_cat)
    return cache.pred_s * model.target_std + model.target_mean


def mae_loss_and_grad(model: MlpRegressor, cache: ForwardCache, y_s: np.ndarray) -> tuple[float, np.ndarray]:
    """MAE over standardized targets and its gradient w.r.t. pred_s."""
    res = cache.pred_s - np.asarray(y_s, dtype=np.float64)
    loss = float(np.mean(np.abs(res)))
    dpred = np.sign(res) / res.size
    return loss, dpred


def backward(model: MlpRegressor, cache: ForwardCache, x_cat, dpred: np.ndarray) -> list[np.ndarray]:
    """Gradients for every parameter, aligned with model.parameters()."""
    x_cat = np.atleast_2d(np.asarray(x_cat))
    d_head_w = cache.a2[-1].T @ dpred[:, None]
    d_head_b = np.array([dpred.sum()])
    dc = dpred[:, None] @ model.head_w.T

    grads2 = []
    for i in range(len(model.block2) - 1, -1, -1):
        w, _ = model.block2[i]
        dz = dc * (cache.z2[i] > 0.0)
        grads2.append((cache.a2[i].T @ dz, dz.sum(axis=0)))
        dc = dz @ w.T
    grads2.reverse()

    out1 = cache.a1[-1].shape[1]
    dh1 = dc[:, :out1]
    demb = dc[:, out1:]

    d_embeddings = []
    offset = 0
    for t, table in enumerate(model.embeddings):
        dim = table.shape[1]
        g = np.zeros_like(table)
        np.add.at(g, x_cat[:, t], demb[:, offset : offset + dim])
        d_embeddings.append(g)
        offset += dim

    grads1 = []
    da = dh1
    for i in range(len(model.block1) - 1, -1, -1):
        w, _ = model.block1[i]
        dz = da * (cache.z1[i] > 0.0)
        grads1.append((cache.a1[i].T @ dz, dz.sum(axis=0)))
        da = dz @ w.T
    grads1.reverse()

    grads: list[np.ndarray] = list(d_embeddings)
    for gw, gb in grads1:
        grads.extend((gw, gb))
    for gw, gb in grads2:
        grads.extend((gw, gb))
    grads.extend((d_head_w, d_head_b))
    return grads


# ---------------------------------------------------------------------------
# Gradient verification against central finite differences
# ---------------------------------------------------------------------------


@dataclass
class GradCheckResult:
    max_relative_error: float
    checked: int
    worst_parameter: str = ""


def draw_smooth_sample(
    model: MlpRegressor, rng: np.random.Generator, margin: float = 1e-3, max_tries: int = 1000
):
    """Random (x_num, x_cat, y) keeping the loss locally smooth.

    Rejects draws where any ReLU pre-activation or the MAE residual sits
    within ``margin`` of its kink, so finite differences stay on one smooth
    branch for perturbations up to the step size.
    """
    for _ in range(max_tries):
        x_num = rng.standard_normal(len(model.numeric_features))
        x_cat = np.array([rng.integers(0, c) for c in model.embedding_cardinalities])
        y = rng.standard_normal()
        cache = forward_cached(model, x_num, x_cat)
        pre_acts = cache.z1 + cache.z2
        if any(np.min(np.abs(z)) < margin for z in pre_acts):
            continue
        y_s = (y - model.target_mean) / model.target_std
        if abs(cache.pred_s[0] - y_s) < margin:
            continue
        return x_num, x_cat, y
    raise CostModelError("could not draw a smooth sample; lower the margin")


def _param_labels(model: MlpRegressor) -> list[str]:
    labels = [f"embedding[{t}]" for t in range(len(model.embeddings))]
    for i in range(len(model.block1)):
        labels.extend((f"block1[{i}].w", f"block1[{i}].b"))
    for i in range(len(model.block2)):
        labels.extend((f"block2[{i}].w", f"block2[{i}].b"))
    labels.extend(("head.w", "head.b"))
    return labels


def grad_check(model: MlpRegressor, sample, h: float = 1e-5, chunk: int = 16384) -> GradCheckResult:
    """Max relative disagreement between backprop and central differences.

    Covers every weight, bias, and embedding entry of the model for one
    sample. Relative error uses max(|analytic|, |numeric|) as denominator.
    The loss is evaluated in float64 at O(1) scale, so each central
    difference carries an absolute noise floor around 1e-10 / (2h); at
    h=1e-5 components below ~1e-5 cannot be certified to 1e-4 relative
    precision no matter how correct the gradient is. Entries where both
    magnitudes sit under that resolution limit are therefore counted as
    agreeing (they already match to ~1e-5 absolute).
    """
    x_num, x_cat, y = sample
    numeric = _numeric_gradients(model, x_num, x_cat, y, h, chunk)
    cache = forward_cached(model, x_num, x_cat)
    y_s = (np.asarray(y, dtype=np.float64) - model.target_mean) / model.target_std
    _, dpred = mae_loss_and_grad(model, cache, np.atleast_1d(y_s))
    analytic = backward(model, cache, x_cat, dpred)

    floor = 1e-5
    worst = 0.0
    worst_label = ""
    checked = 0
    for label, a, n in zip(_param_labels(model), analytic, numeric):
        scale = np.maximum(np.abs(a), np.abs(n))
        err = np.where(scale < floor, 0.0, np.abs(a - n) / np.where(scale < floor, 1.0, scale))
        checked += a.size
        idx = np.argmax(err)
        if err.flat[idx] > worst:
            worst = float(err.flat[idx])
            worst_label = f"{label}[{np.unravel_index(idx, a.shape)}]"
    return GradCheckResult(max_relative_error=worst, checked=checked, worst_parameter=worst_label)


def _numeric_gradients(model, x_num, x_cat, y, h, chunk) -> list[np.ndarray]:
    """Central-difference loss gradients for every parameter, one sample.

    Perturbing a single weight shifts exactly one downstream pre-activation
    coordinate, so instead of re-running the whole network per coordinate,
    perturbations are grouped per layer: the single-coordinate shift is
    applied analytically one hop forward and only the remaining layers are
    recomputed, batched over perturbation rows.
    """
    cache = forward_cached(model, x_num, x_cat)
    x_cat_row = np.atleast_2d(np.asarray(x_cat))[0]
    y_s = float((np.asarray(y, dtype=np.float64) - model.target_mean) / model.target_std)

    z1 = [z[0] for z in cache.z1]
    a1 = [a[0] for a in cache.a1]
    z2 = [z[0] for z in cache.z2]
    a2 = [a[0] for a in cache.a2]
    emb = cache.emb[0]
    out1 = a1[-1].size

    def loss_from_block2(level: int, z_rows: np.ndarray) -> np.ndarray:
        a = np.maximum(z_rows, 0.0)
        for w, b in model.block2[level + 1 :]:
            a = np.maximum(a @ w + b, 0.0)
        pred = a @ model.head_w[:, 0] + model.head_b[0]
        return np.abs(pred - y_s)

    def loss_from_block1(level: int, z_rows: np.ndarray) -> np.ndarray:
        a = np.maximum(z_rows, 0.0)
        for w, b in model.block1[level + 1 :]:
            a = np.maximum(a @ w + b, 0.0)
        c = np.concatenate([a, np.broadcast_to(emb, (a.shape[0], emb.size))], axis=1)
        w0, b0 = model.block2[0]
        return loss_from_block2(0, c @ w0 + b0)

    def block1_coord_losses(level: int, k_idx: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """Loss per row for pre-activation z1[level][k] += delta."""
        diff = np.maximum(z1[level][k_idx] + deltas, 0.0) - a1[level + 1][k_idx]
        if level + 1 < len(model.block1):
            w_next = model.block1[level + 1][0]
            z_rows = z1[level + 1][None, :] + diff[:, None] * w_next[k_idx, :]
            return loss_from_block1(level + 1, z_rows)
        w0 = model.block2[0][0]
        z_rows = z2[0][None, :] + diff[:, None] * w0[k_idx, :]
        return loss_from_block2(0, z_rows)

    def block2_coord_losses(level: int, k_idx: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        diff = np.maximum(z2[level][k_idx] + deltas, 0.0) - a2[level + 1][k_idx]
        if level + 1 < len(model.block2):
            w_next = model.block2[level + 1][0]
            z_rows = z2[level + 1][None, :] + diff[:, None] * w_next[k_idx, :]
            return loss_from_block2(level + 1, z_rows)
        pred = cache.pred_s[0] + diff * model.head_w[k_idx, 0]
        return np.abs(pred - y_s)

    def central_diff(coord_losses, k_idx: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        out = np.empty(k_idx.size)
        for lo in range(0, k_idx.size, chunk):
            sl = slice(lo, lo + chunk)
            plus = coord_losses(k_idx[sl], deltas[sl])
            minus = coord_losses(k_idx[sl], -deltas[sl])
            out[sl] = (plus - minus) / (2.0 * h)
        return out

    grads: list[np.ndarray] = []

    # embeddings: active rows shift one concat coordinate; inactive rows are
    # never read by the forward pass, so their numeric gradient is exactly 0
    for t, table in enumerate(model.embeddings):
        g = np.zeros_like(table)
        offset = out1 + sum(e.shape[1] for e in model.embeddings[:t])
        active = int(x_cat_row[t])
        w0 = model.block2[0][0]
        for d in range(table.shape[1]):
            coord = offset + d
            z_plus = z2[0][None, :] + h * w0[coord, :]
            z_minus = z2[0][None, :] - h * w0[coord, :]
            lp = loss_from_block2(0, z_plus)[0]
            lm = loss_from_block2(0, z_minus)[0]
            g[active, d] = (lp - lm) / (2.0 * h)
        grads.append(g)

    def dense_grads(level: int, a_prev: np.ndarray, width: int, coord_losses) -> tuple[np.ndarray, np.ndarray]:
        m = a_prev.size
        k_idx = np.tile(np.arange(width), m)
        # perturbing w[j, k] by h shifts pre-activation k by h * a_prev[j];
        # zero activations give a zero shift and hence an exact zero derivative
        deltas = np.repeat(h * a_prev, width)
        gw = central_diff(coord_losses, k_idx, deltas).reshape(m, width)
        k_b = np.arange(width)
        gb = central_diff(coord_losses, k_b, np.full(width, h))
        return gw, gb

    block1_grads = []
    for i, (w, _) in enumerate(model.block1):
        losses = lambda k, d, lvl=i: block1_coord_losses(lvl, k, d)
        block1_grads.append(dense_grads(i, a1[i], w.shape[1], losses))
    block2_grads = []
    for i, (w, _) in enumerate(model.block2):
        losses = lambda k, d, lvl=i: block2_coord_losses(lvl, k, d)
        block2_grads.append(dense_grads(i, a2[i], w.shape[1], losses))

    for gw, gb in block1_grads:
        grads.extend((gw, gb))
    for gw, gb in block2_grads:
        grads.extend((gw, gb))

    a_last = a2[-1]
    pred0 = cache.pred_s[0]
    gw_head = ((np.abs(pred0 + h * a_last - y_s) - np.abs(pred0 - h * a_last - y_s)) / (2.0 * h))[:, None]
    gb_head = np.array([(abs(pred0 + h - y_s) - abs(pred0 - h - y_s)) / (2.0 * h)])
    grads.extend((gw_head, gb_head))
    return grads
