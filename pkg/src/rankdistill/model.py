"""Feed-forward scorer producing one raw score per answer.

A small rectifier MLP with exact reverse-mode gradients, a Monte-Carlo
dropout mode that re-executes only the last layer, and a norm-clipped SGD
update. Checkpoints round-trip through a versioned JSON format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError, TrainingError
from .numerics import RngState, as_vector

__all__ = [
    "ScoreModel",
    "ModelGradient",
    "init_model",
    "forward",
    "forward_batch",
    "mc_dropout_scores",
    "backward",
    "backward_batch",
    "sgd_step",
    "save_model",
    "load_model",
    "model_checksum",
]

CHECKPOINT_FORMAT = "rankdistill-score-model"
CHECKPOINT_VERSION = 1


@dataclass
class ScoreModel:
    """Stack of linear layers with rectifier hidden activations.

    ``layer_weights[l]`` has shape (out, in); consecutive layers must
    compose and the final output dimension is the number of answers.
    Dropout is applied only in :func:`mc_dropout_scores`, never in the
    deterministic forward pass.
    """

    layer_weights: list[np.ndarray]
    layer_biases: list[np.ndarray]
    dropout_rate: float = 0.1
    hidden_activation: str = "relu"

    def __post_init__(self):
        if not self.layer_weights or len(self.layer_weights) != len(self.layer_biases):
            raise DimensionError("model needs matching weight/bias lists")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ArgumentError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.hidden_activation != "relu":
            raise ArgumentError(f"unsupported activation {self.hidden_activation!r}")
        for l, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise DimensionError(f"layer {l}: weight {w.shape} / bias {b.shape} mismatch")
            if l > 0 and w.shape[1] != self.layer_weights[l - 1].shape[0]:
                raise DimensionError(
                    f"layer {l} input dim {w.shape[1]} does not match "
                    f"layer {l - 1} output dim {self.layer_weights[l - 1].shape[0]}"
                )

    @property
    def feature_dim(self) -> int:
        return self.layer_weights[0].shape[1]

    @property
    def num_answers(self) -> int:
        return self.layer_weights[-1].shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.feature_dim] + [w.shape[0] for w in self.layer_weights]


@dataclass
class ModelGradient:
    """Parameter gradients, shape-congruent with the model they came from."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def global_norm(self) -> float:
        total = 0.0
        for g in self.weights + self.biases:
            total += float((g * g).sum())
        return float(np.sqrt(total))


def init_model(
    layer_sizes: list[int], dropout_rate: float, rng: RngState
) -> ScoreModel:
    """He-initialized model; ``layer_sizes`` runs feature_dim .. num_answers."""
    if len(layer_sizes) < 2:
        raise ArgumentError("layer_sizes needs at least input and output dims")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.gen.normal(0.0, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ScoreModel(weights, biases, dropout_rate=dropout_rate)


def _check_features(model: ScoreModel, features: np.ndarray, batch: bool):
    dim = features.shape[-1]
    if dim != model.feature_dim:
        raise DimensionError(
            f"feature dim {dim} does not match model input dim {model.feature_dim}"
        )
    if batch and features.ndim != 2:
        raise DimensionError(f"expected (batch, dim) features, got {features.shape}")


def _forward_cached(model: ScoreModel, x: np.ndarray):
    """Batch forward returning pre-activations and activations for backprop."""
    pre, acts = [], [x]
    h = x
    last = len(model.layer_weights) - 1
    for l, (w, b) in enumerate(zip(model.layer_weights, model.layer_biases)):
        z = h @ w.T + b
        pre.append(z)
        h = z if l == last else np.maximum(z, 0.0)
        acts.append(h)
    return h, pre, acts


def forward(model: ScoreModel, features) -> np.ndarray:
    """Deterministic scores for one instance (dropout disabled)."""
    x = as_vector(features, "features")
    _check_features(model, x, batch=False)
    scores, _, _ = _forward_cached(model, x[None, :])
    return scores[0]


def forward_batch(model: ScoreModel, features: np.ndarray) -> np.ndarray:
    """Deterministic scores for a (batch, dim) feature matrix."""
    x = np.asarray(features, dtype=np.float64)
    _check_features(model, x, batch=True)
    scores, _, _ = _forward_cached(model, x)
    return scores


def mc_dropout_scores(
    model: ScoreModel, features, passes: int, rng: RngState
) -> np.ndarray:
    """Stochastic score vectors from dropout on the last layer's input.

    The forward pass up to the last layer runs once; only the last layer is
    re-executed per pass with a fresh inverted-scaling mask (kept units are
    divided by 1 - rate, so the expectation matches :func:`forward`).
    Returns a (passes, num_answers) array.
    """
    if passes < 1:
        raise ArgumentError(f"passes must be >= 1, got {passes}")
    x = as_vector(features, "features")
    _check_features(model, x, batch=False)
    h = x[None, :]
    for l in range(len(model.layer_weights) - 1):
        h = np.maximum(h @ model.layer_weights[l].T + model.layer_biases[l], 0.0)
    h = h[0]
    w_last = model.layer_weights[-1]
    b_last = model.layer_biases[-1]
    keep = 1.0 - model.dropout_rate
    out = np.empty((passes, model.num_answers))
    for t in range(passes):
        mask = rng.gen.random(h.shape[0]) >= model.dropout_rate
        out[t] = w_last @ (h * mask / keep) + b_last
    return out


def backward(model: ScoreModel, features, upstream) -> ModelGradient:
    """Exact gradient of ``scores @ upstream`` w.r.t. all parameters."""
    x = as_vector(features, "features")
    up = as_vector(upstream, "upstream")
    if up.shape[0] != model.num_answers:
        raise DimensionError(
            f"upstream length {up.shape[0]} does not match {model.num_answers} answers"
        )
    return backward_batch(model, x[None, :], up[None, :])


def backward_batch(
    model: ScoreModel, features: np.ndarray, upstream: np.ndarray
) -> ModelGradient:
    """Gradient of ``sum_b scores_b @ upstream_b`` over a batch."""
    x = np.asarray(features, dtype=np.float64)
    _check_features(model, x, batch=True)
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != (x.shape[0], model.num_answers):
        raise DimensionError(f"upstream shape {up.shape} mismatches batch/answers")
    _, pre, acts = _forward_cached(model, x)
    n_layers = len(model.layer_weights)
    d_weights: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    g = up
    for l in range(n_layers - 1, -1, -1):
        d_weights[l] = g.T @ acts[l]
        d_biases[l] = g.sum(axis=0)
        if l > 0:
            g = (g @ model.layer_weights[l]) * (pre[l - 1] > 0.0)
    return ModelGradient(d_weights, d_biases)


def sgd_step(
    model: ScoreModel, grad: ModelGradient, lr: float, clip_norm: float
) -> ScoreModel:
    """One SGD update with the global gradient norm clipped to ``clip_norm``."""
    if lr <= 0:
        raise ArgumentError(f"lr must be positive, got {lr}")
    if clip_norm <= 0:
        raise ArgumentError(f"clip_norm must be positive, got {clip_norm}")
    norm = grad.global_norm()
    if not np.isfinite(norm):
        raise TrainingError("non-finite gradient in sgd_step")
    scale = lr * (clip_norm / norm if norm > clip_norm else 1.0)
    new_w = [w - scale * g for w, g in zip(model.layer_weights, grad.weights)]
    new_b = [b - scale * g for b, g in zip(model.layer_biases, grad.biases)]
    return ScoreModel(new_w, new_b, model.dropout_rate, model.hidden_activation)


def save_model(model: ScoreModel, path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hidden_activation": model.hidden_activation,
        "dropout_rate": model.dropout_rate,
        "layer_sizes": model.layer_sizes,
        "weights": [w.ravel().tolist() for w in model.layer_weights],
        "biases": [b.tolist() for b in model.layer_biases],
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> ScoreModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ArgumentError(f"not a score-model checkpoint: {path}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ArgumentError(f"unsupported checkpoint version {doc.get('version')}")
    sizes = doc["layer_sizes"]
    weights = [
        np.asarray(w, dtype=np.float64).reshape(out, inp)
        for w, inp, out in zip(doc["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    return ScoreModel(weights, biases, doc["dropout_rate"], doc["hidden_activation"])


def model_checksum(model: ScoreModel) -> str:
    """Stable content hash of shapes and parameter bytes."""
    h = hashlib.sha256()
    h.update(json.dumps(model.layer_sizes).encode())
    h.update(repr(model.dropout_rate).encode())
    for w, b in zip(model.layer_weights, model.layer_biases):
        h.update(np.ascontiguousarray(w).tobytes())
        h.update(np.ascontiguousarray(b).tobytes())
    return h.hexdigest()
