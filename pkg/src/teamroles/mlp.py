"""Dense network for Leadership-vs-Support prediction.

Two ReLU hidden layers and a sigmoid output, trained with plain minibatch
gradient descent on binary cross-entropy. Everything is seeded and
single-threaded, so a (seed, data, config) triple gives a bit-identical
model. The analytic input gradient feeds the attribution estimator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dataset import LabeledExample
from .errors import PipelineError
from .features import NormalizationRanges, fit_normalization, normalize_array
from .types import FEATURE_NAMES, BinaryRole, FeatureVector

_EPS = 1e-12


class NonFiniteInput(PipelineError):
    pass


class DegenerateTrainingSet(PipelineError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    hidden_sizes: Tuple[int, int] = (64, 32)
    seed: int = 0
    feature_indices: Tuple[int, ...] = tuple(range(len(FEATURE_NAMES)))
    class_weights: Optional[Tuple[float, float]] = None  # (support, leadership)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be >= 1")
        if len(set(self.feature_indices)) != len(self.feature_indices):
            raise ValueError("feature_indices must be distinct")


@dataclass
class NetworkParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray  # shape (h2,)
    b3: float

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]


@dataclass
class TrainedModel:
    params: NetworkParams
    ranges: NormalizationRanges
    config: TrainConfig
    loss_history: List[float]


def init(config: TrainConfig) -> NetworkParams:
    """Seeded scaled-normal weights (scale sqrt(2/fan_in)), zero biases."""
    rng = np.random.default_rng(config.seed)
    d = len(config.feature_indices)
    h1, h2 = config.hidden_sizes
    return NetworkParams(
        W1=rng.normal(0.0, np.sqrt(2.0 / d), size=(h1, d)),
        b1=np.zeros(h1),
        W2=rng.normal(0.0, np.sqrt(2.0 / h1), size=(h2, h1)),
        b2=np.zeros(h2),
        W3=rng.normal(0.0, np.sqrt(2.0 / h2), size=h2),
        b3=0.0,
    )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def forward(params: NetworkParams, x: np.ndarray) -> float:
    """Predicted probability for one (already normalized) input vector."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input vector contains NaN or infinity")
    a1 = np.maximum(0.0, params.W1 @ x + params.b1)
    a2 = np.maximum(0.0, params.W2 @ a1 + params.b2)
    y = _sigmoid(params.W3 @ a2 + params.b3)
    return float(np.clip(y, _EPS, 1.0 - _EPS))


def forward_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    Z1 = X @ params.W1.T + params.b1
    A1 = np.maximum(0.0, Z1)
    Z2 = A1 @ params.W2.T + params.b2
    A2 = np.maximum(0.0, Z2)
    Y = _sigmoid(A2 @ params.W3 + params.b3)
    return np.clip(Y, _EPS, 1.0 - _EPS)


def input_gradient_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Analytic input gradients for a whole matrix of points, one row each."""
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("input matrix contains NaN or infinity")
    Z1 = X @ params.W1.T + params.b1
    A1 = np.maximum(0.0, Z1)
    Z2 = A1 @ params.W2.T + params.b2
    A2 = np.maximum(0.0, Z2)
    Y = _sigmoid(A2 @ params.W3 + params.b3)

    D3 = (Y * (1.0 - Y))[:, None]
    D2 = D3 * params.W3[None, :] * (Z2 > 0)
    D1 = (D2 @ params.W2) * (Z1 > 0)
    return D1 @ params.W1


def input_gradient(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Exact analytic gradient of the output probability w.r.t. the input."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input vector contains NaN or infinity")
    z1 = params.W1 @ x + params.b1
    a1 = np.maximum(0.0, z1)
    z2 = params.W2 @ a1 + params.b2
    a2 = np.maximum(0.0, z2)
    z3 = params.W3 @ a2 + params.b3
    y = _sigmoid(z3)

    d3 = y * (1.0 - y)  # sigmoid'
    d2 = (d3 * params.W3) * (z2 > 0)
    d1 = (params.W2.T @ d2) * (z1 > 0)
    return params.W1.T @ d1


def _bce(y: np.ndarray, t: np.ndarray, weights: np.ndarray) -> float:
    losses = -(t * np.log(y) + (1.0 - t) * np.log(1.0 - y))
    return float(np.sum(weights * losses) / np.sum(weights))


def train(examples: Sequence[LabeledExample], config: TrainConfig = TrainConfig()) -> TrainedModel:
    """Minibatch gradient descent over `epochs` seeded-shuffled passes."""
    labels = {ex.label for ex in examples}
    if len(labels) < 2:
        raise DegenerateTrainingSet("training set must contain both classes")

    ranges = fit_normalization([ex.features for ex in examples])
    raw = np.array([ex.features.to_list() for ex in examples])
    X = normalize_array(raw, ranges)[:, list(config.feature_indices)]
    t = np.array([1.0 if ex.label is BinaryRole.LEADERSHIP else 0.0 for ex in examples])
    if config.class_weights is not None:
        w_support, w_lead = config.class_weights
        sample_w = np.where(t == 1.0, w_lead, w_support)
    else:
        sample_w = np.ones_like(t)

    params = init(config)
    rng = np.random.default_rng(config.seed + 1)
    n = len(examples)
    loss_history: List[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, tb, wb = X[idx], t[idx], sample_w[idx]

            Z1 = Xb @ params.W1.T + params.b1
            A1 = np.maximum(0.0, Z1)
            Z2 = A1 @ params.W2.T + params.b2
            A2 = np.maximum(0.0, Z2)
            Y = np.clip(_sigmoid(A2 @ params.W3 + params.b3), _EPS, 1.0 - _EPS)
            epoch_loss += _bce(Y, tb, wb) * len(idx)

            # dL/dz3 for weighted mean BCE through the sigmoid
            d3 = (wb * (Y - tb)) / np.sum(wb)
            d2 = np.outer(d3, params.W3) * (Z2 > 0)
            d1 = (d2 @ params.W2) * (Z1 > 0)

            lr = config.learning_rate
            params.W3 = params.W3 - lr * (d3 @ A2)
            params.b3 = params.b3 - lr * float(np.sum(d3))
            params.W2 = params.W2 - lr * (d2.T @ A1)
            params.b2 = params.b2 - lr * d2.sum(axis=0)
            params.W1 = params.W1 - lr * (d1.T @ Xb)
            params.b1 = params.b1 - lr * d1.sum(axis=0)
        loss_history.append(epoch_loss / n)
    return TrainedModel(params, ranges, config, loss_history)


def model_input(model: TrainedModel, features: FeatureVector) -> np.ndarray:
    """Normalize a raw feature vector and select the model's input columns."""
    row = normalize_array(np.array([features.to_list()]), model.ranges)[0]
    return row[list(model.config.feature_indices)]


def predict_proba(model: TrainedModel, features: FeatureVector) -> float:
    return forward(model.params, model_input(model, features))


def predict(model: TrainedModel, features: FeatureVector, threshold: float = 0.5) -> BinaryRole:
    y = predict_proba(model, features)
    return BinaryRole.LEADERSHIP if y >= threshold else BinaryRole.SUPPORT


def save_model(model: TrainedModel, path) -> None:
    data = {
        "schema_version": 1,
        "params": {
            "W1": model.params.W1.tolist(),
            "b1": model.params.b1.tolist(),
            "W2": model.params.W2.tolist(),
            "b2": model.params.b2.tolist(),
            "W3": model.params.W3.tolist(),
            "b3": model.params.b3,
        },
        "ranges": model.ranges.to_dict(),
        "config": {
            "epochs": model.config.epochs,
            "batch_size": model.config.batch_size,
            "learning_rate": model.config.learning_rate,
            "hidden_sizes": list(model.config.hidden_sizes),
            "seed": model.config.seed,
            "feature_indices": list(model.config.feature_indices),
            "class_weights": list(model.config.class_weights)
            if model.config.class_weights
            else None,
        },
        "loss_history": model.loss_history,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    p = data["params"]
    cfg = data["config"]
    return TrainedModel(
        params=NetworkParams(
            W1=np.array(p["W1"]),
            b1=np.array(p["b1"]),
            W2=np.array(p["W2"]),
            b2=np.array(p["b2"]),
            W3=np.array(p["W3"]),
            b3=float(p["b3"]),
        ),
        ranges=NormalizationRanges.from_dict(data["ranges"]),
        config=TrainConfig(
            epochs=cfg["epochs"],
            batch_size=cfg["batch_size"],
            learning_rate=cfg["learning_rate"],
            hidden_sizes=tuple(cfg["hidden_sizes"]),
            seed=cfg["seed"],
            feature_indices=tuple(cfg["feature_indices"]),
            class_weights=tuple(cfg["class_weights"]) if cfg.get("class_weights") else None,
        ),
        loss_history=list(data["loss_history"]),
    )
