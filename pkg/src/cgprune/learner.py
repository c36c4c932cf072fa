"""Weighted binary edge classifier: loss, gradients, AdamW, schedule, training.

Label 1 = retain (positive class, weight w1), label 0 = prune (weight w2).
Training is single-threaded and fully deterministic given (data, config, seed).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import FormatError, NumericError, UsageError

logger = logging.getLogger(__name__)

PROB_EPS = 1e-12

MODEL_FORMAT = "cgprune-model-1"


@dataclass(frozen=True)
class TrainConfig:
    w_retain: float = 0.5
    learning_rate: float = 1e-5
    epochs: int = 2
    warmup_steps: int = 100
    dropout_rate: float = 0.25
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.w_retain < 1.0:
            raise UsageError(f"w_retain must be in (0, 1), got {self.w_retain}")
        if self.learning_rate <= 0:
            raise UsageError("learning_rate must be positive")
        if self.epochs < 1:
            raise UsageError("epochs must be at least 1")
        if self.warmup_steps < 0:
            raise UsageError("warmup_steps must be non-negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise UsageError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.batch_size < 1:
            raise UsageError("batch_size must be at least 1")

    @property
    def w_prune(self) -> float:
        return 1.0 - self.w_retain


def softmax2(z0: float, z1: float) -> tuple[float, float]:
    """Two-class softmax with max subtraction; stable for large scores."""
    m = max(z0, z1)
    e0 = math.exp(z0 - m)
    e1 = math.exp(z1 - m)
    total = e0 + e1
    return e0 / total, e1 / total


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def weighted_ce_loss(
    y: Sequence[int] | np.ndarray,
    p1: Sequence[float] | np.ndarray,
    w1: float,
    w2: float,
) -> float:
    """Mean weighted cross-entropy; probabilities clamped to [eps, 1-eps]."""
    y_arr = np.asarray(y, dtype=np.float64)
    p_arr = np.clip(np.asarray(p1, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
    if y_arr.size == 0:
        raise UsageError("loss is undefined on an empty batch")
    terms = w1 * y_arr * np.log(p_arr) + w2 * (1.0 - y_arr) * np.log(1.0 - p_arr)
    return float(-terms.mean())


@dataclass
class PrunerModel:
    """Linear head (hidden_dim 0) or one-hidden-layer tanh MLP over features.

    Parameters: w_out (2, h or d), b_out (2,), and for hidden models
    w_hidden (h, d), b_hidden (h,). Output row 0 scores prune, row 1 retain.
    """

    input_dim: int
    hidden_dim: int
    params: dict[str, np.ndarray]
    seed: int = 0

    kind = "linear"

    def _forward(
        self, x: np.ndarray, dropout_mask: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (net input a, hidden activation h, raw scores z)."""
        a = x if dropout_mask is None else x * dropout_mask
        if self.hidden_dim > 0:
            u = a @ self.params["w_hidden"].T + self.params["b_hidden"]
            h = np.tanh(u)
            if not np.isfinite(h).all():
                raise NumericError("non-finite activation in parameter block 'w_hidden'")
        else:
            h = a
        z = h @ self.params["w_out"].T + self.params["b_out"]
        if not np.isfinite(z).all():
            raise NumericError("non-finite activation in parameter block 'w_out'")
        return a, h, z

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        """p_retain per row; dropout is disabled at inference."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise UsageError(
                f"feature dimension {x.shape[1]} does not match input_dim {self.input_dim}"
            )
        _, _, z = self._forward(x)
        return _softmax_rows(z)[:, 1]

    def predict(self, x: np.ndarray) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=np.float64))[0])

    def copy(self) -> "PrunerModel":
        return PrunerModel(
            input_dim=self.input_dim,
            hidden_dim=self.hidden_dim,
            params={k: v.copy() for k, v in self.params.items()},
            seed=self.seed,
        )


def init_model(input_dim: int, hidden_dim: int = 0, seed: int = 0) -> PrunerModel:
    if input_dim < 1:
        raise UsageError("input_dim must be at least 1")
    if hidden_dim < 0:
        raise UsageError("hidden_dim must be non-negative")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    if hidden_dim > 0:
        params["w_hidden"] = rng.normal(0.0, 1.0 / math.sqrt(input_dim), (hidden_dim, input_dim))
        params["b_hidden"] = np.zeros(hidden_dim)
        fan_in = hidden_dim
    else:
        fan_in = input_dim
    params["w_out"] = rng.normal(0.0, 1.0 / math.sqrt(fan_in), (2, fan_in))
    params["b_out"] = np.zeros(2)
    return PrunerModel(input_dim=input_dim, hidden_dim=hidden_dim, params=params, seed=seed)


def make_dropout_mask(
    rng: np.random.Generator, shape: tuple[int, ...], rate: float
) -> np.ndarray | None:
    """Inverted-dropout mask (already scaled by 1/(1-rate)); None when rate is 0."""
    if rate == 0.0:
        return None
    return (rng.random(shape) >= rate).astype(np.float64) / (1.0 - rate)


def batch_loss(
    model: PrunerModel,
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    dropout_mask: np.ndarray | None = None,
    weights: tuple[float, float] | None = None,
) -> float:
    w1, w2 = weights if weights is not None else (config.w_retain, config.w_prune)
    _, _, z = model._forward(np.asarray(x, dtype=np.float64), dropout_mask)
    p1 = _softmax_rows(z)[:, 1]
    return weighted_ce_loss(y, p1, w1, w2)


def loss_gradients(
    model: PrunerModel,
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    dropout_mask: np.ndarray | None = None,
    weights: tuple[float, float] | None = None,
) -> tuple[dict[str, np.ndarray], float]:
    """Analytic gradients of the weighted cross-entropy w.r.t. every parameter.

    The dropout mask, when given, is fixed for the whole call so the gradient
    matches finite differences of `batch_loss` under the same mask. `weights`
    overrides the config's (w1, w2), allowing boundary values like w1 = 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    n = x.shape[0]
    if n == 0:
        raise UsageError("gradient is undefined on an empty batch")
    w1, w2 = weights if weights is not None else (config.w_retain, config.w_prune)

    a, h, z = model._forward(x, dropout_mask)
    p = _softmax_rows(z)
    p0, p1 = p[:, 0], p[:, 1]
    loss = weighted_ce_loss(y_arr, p1, w1, w2)

    # dL/dz1 = -w1*y*(1-p1) + w2*(1-y)*p1; dL/dz0 is its negation.
    dz1 = (-w1 * y_arr * p0 + w2 * (1.0 - y_arr) * p1) / n
    dz = np.stack([-dz1, dz1], axis=1)

    grads: dict[str, np.ndarray] = {
        "w_out": dz.T @ h,
        "b_out": dz.sum(axis=0),
    }
    if model.hidden_dim > 0:
        dh = dz @ model.params["w_out"]
        du = dh * (1.0 - h * h)
        grads["w_hidden"] = du.T @ a
        grads["b_hidden"] = du.sum(axis=0)
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient in parameter block {name!r}")
    return grads, loss


@dataclass
class AdamWState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def init_adamw(params: Mapping[str, np.ndarray]) -> AdamWState:
    return AdamWState(
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
    )


def adamw_step(
    state: AdamWState,
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr_t: float,
    config: TrainConfig,
) -> tuple[AdamWState, dict[str, np.ndarray]]:
    """One AdamW update with decoupled weight decay and bias-corrected moments."""
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    for name, theta in params.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / (1.0 - b1**t)
        v_hat = state.v[name] / (1.0 - b2**t)
        theta -= lr_t * (m_hat / (np.sqrt(v_hat) + config.eps) + config.weight_decay * theta)
    return state, params


def lr_at(step: int, config: TrainConfig, total_steps: int) -> float:
    """Linear warmup from zero to the base rate, then linear decay to zero."""
    if total_steps < config.warmup_steps:
        raise UsageError("total_steps must be at least warmup_steps")
    base = config.learning_rate
    if config.warmup_steps > 0 and step < config.warmup_steps:
        return base * step / config.warmup_steps
    if step >= total_steps or total_steps == config.warmup_steps:
        return 0.0
    return base * (total_steps - step) / (total_steps - config.warmup_steps)


@dataclass
class TrainResult:
    model: PrunerModel
    epoch_losses: list[float] = field(default_factory=list)
    epoch_lr_last: list[float] = field(default_factory=list)


def train(
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    hidden_dim: int = 0,
) -> TrainResult:
    """Mini-batch AdamW training of the weighted classifier.

    Shuffle order and dropout masks come from one seeded stream, so results
    are bit-identical across runs with the same inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise UsageError("training requires a non-empty 2-D feature matrix")
    if y.shape[0] != x.shape[0]:
        raise UsageError("features and labels disagree on sample count")

    n_retain = int((y == 1).sum())
    n_prune = int((y == 0).sum())
    if n_retain == 0 and config.w_retain > 0:
        logger.warning("no retain-labeled samples; positive-class weight has no data")
    if n_prune == 0 and config.w_prune > 0:
        logger.warning("no prune-labeled samples; negative-class weight has no data")

    model = init_model(x.shape[1], hidden_dim, seed=config.seed)
    state = init_adamw(model.params)
    rng = np.random.default_rng(config.seed)

    n = x.shape[0]
    batches_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * batches_per_epoch
    schedule_config = config
    if total_steps < config.warmup_steps:
        logger.warning(
            "warmup_steps %d exceeds the %d total steps; clamping the warmup",
            config.warmup_steps,
            total_steps,
        )
        schedule_config = replace(config, warmup_steps=total_steps)
    global_step = 0
    result = TrainResult(model=model)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        lr_last = 0.0
        for b in range(batches_per_epoch):
            rows = order[b * config.batch_size : (b + 1) * config.batch_size]
            xb, yb = x[rows], y[rows]
            mask = make_dropout_mask(rng, xb.shape, config.dropout_rate)
            grads, loss = loss_gradients(model, xb, yb, config, mask)
            lr_last = lr_at(global_step, schedule_config, total_steps)
            adamw_step(state, model.params, grads, lr_last, config)
            global_step += 1
            epoch_loss += loss * len(rows)
        result.epoch_losses.append(epoch_loss / n)
        result.epoch_lr_last.append(lr_last)
    return result


@dataclass
class RandomClassifier:
    """Baseline that retains/prunes with equal probability.

    Draws one uniform p_retain per sample from a per-instance seeded stream;
    use a fresh instance per pruning pass for reproducible output.
    """

    seed: int = 0

    kind = "random"
    input_dim = None

    def __post_init__(self) -> None:
        self._rng = np.random.default_rng(self.seed)

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        n = len(x)
        return self._rng.random(n)

    def predict(self, x: np.ndarray) -> float:
        return float(self._rng.random())


def model_to_json_dict(
    model: PrunerModel | RandomClassifier, config: TrainConfig | None = None
) -> dict:
    doc: dict = {"format": MODEL_FORMAT, "kind": model.kind, "seed": model.seed}
    if isinstance(model, PrunerModel):
        doc["input_dim"] = model.input_dim
        doc["hidden_dim"] = model.hidden_dim
        doc["params"] = {k: v.ravel().tolist() for k, v in model.params.items()}
        doc["shapes"] = {k: list(v.shape) for k, v in model.params.items()}
    if config is not None:
        doc["config"] = asdict(config)
    return doc


def model_from_json_dict(doc: Mapping) -> PrunerModel | RandomClassifier:
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"unsupported model format {doc.get('format')!r}")
    kind = doc.get("kind", "linear")
    if kind == "random":
        return RandomClassifier(seed=doc.get("seed", 0))
    if kind != "linear":
        raise FormatError(f"unknown model kind {kind!r}")
    params = {
        name: np.asarray(flat, dtype=np.float64).reshape(doc["shapes"][name])
        for name, flat in doc["params"].items()
    }
    return PrunerModel(
        input_dim=doc["input_dim"],
        hidden_dim=doc["hidden_dim"],
        params=params,
        seed=doc.get("seed", 0),
    )


def dump_model(model: PrunerModel | RandomClassifier, config: TrainConfig | None = None) -> str:
    return json.dumps(model_to_json_dict(model, config), sort_keys=False)


def load_model(data: bytes | str) -> PrunerModel | RandomClassifier:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model document is not valid JSON: {exc}") from exc
    return model_from_json_dict(doc)


def training_log_csv(result: TrainResult) -> str:
    lines = ["epoch,mean_loss,lr_last"]
    for i, (loss, lr) in enumerate(zip(result.epoch_losses, result.epoch_lr_last), start=1):
        lines.append(f"{i},{loss!r},{lr!r}")
    return "\n".join(lines) + "\n"
