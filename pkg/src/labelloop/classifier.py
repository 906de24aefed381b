"""Probabilistic classifiers over fixed embeddings with per-instance loss weights.

Two kinds are provided. The default is a multinomial logistic regression
trained by full-batch gradient descent on the weighted cross-entropy

    L(A, b) = sum_i w_i * CE(softmax(A x_i + b), y_i)

with the per-instance weights multiplied element-wise into the loss. The
objective is convex, initialization is all-zeros, and the epoch count and
learning rate are fixed, so training is fully deterministic: the rng_seed
argument exists for interface stability only. A nearest-centroid model
(weight-weighted class means, softmax over scaled cosine similarity) serves
as a fast secondary.

Models are trained from scratch on every call and are immutable afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainParams:
    kind: str = "logistic-regression"
    learning_rate: float = 0.5
    epochs: int = 300
    temperature: float = 10.0


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; output rows sum to 1 exactly up to rounding."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def weighted_cross_entropy(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
) -> float:
    """Weighted CE loss sum_i w_i * (-log p_{i, y_i}) at the given parameters."""
    probs = softmax(X @ weights.T + bias)
    picked = probs[np.arange(len(y)), y]
    return float(np.sum(sample_weight * -np.log(np.maximum(picked, 1e-300))))


def weighted_cross_entropy_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the weighted CE w.r.t. weights and bias."""
    probs = softmax(X @ weights.T + bias)
    delta = probs
    delta[np.arange(len(y)), y] -= 1.0
    delta *= sample_weight[:, None]
    return delta.T @ X, delta.sum(axis=0)


class LogisticRegressionModel:
    """C-class softmax classifier: a C x d weight matrix plus a C-vector bias."""

    kind = "logistic-regression"

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise ValueError("model parameters must be finite")
        self.weights = weights
        self.bias = bias
        self.num_classes, self.dim = weights.shape

    def _check_dim(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(f"embedding dimension {X.shape[-1]} does not match model dimension {self.dim}")
        return X

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class distribution for a single embedding or a batch (rows)."""
        X = self._check_dim(X)
        return softmax(X @ self.weights.T + self.bias)

    def predict(self, embedding: np.ndarray) -> tuple[int, float]:
        """Most likely label and its confidence; argmax ties go to the lowest index."""
        probs = self.predict_proba(embedding)
        label = int(np.argmax(probs))
        return label, float(probs[label])

    def predict_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        probs = self.predict_proba(np.atleast_2d(X))
        labels = np.argmax(probs, axis=1)
        return labels, probs[np.arange(len(labels)), labels]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_classes": self.num_classes,
            "dim": self.dim,
            "weights": [float(v) for v in self.weights.ravel()],
            "bias": [float(v) for v in self.bias],
        }


class NearestCentroidModel:
    """Classifies by cosine similarity to weight-weighted class centroids."""

    kind = "nearest-centroid"

    def __init__(self, centroids: np.ndarray, temperature: float):
        centroids = np.asarray(centroids, dtype=np.float64)
        if not np.all(np.isfinite(centroids)):
            raise ValueError("model parameters must be finite")
        norms = np.linalg.norm(centroids, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("centroids must be non-zero")
        self.centroids = centroids
        self.unit_centroids = centroids / norms[:, None]
        self.temperature = float(temperature)
        self.num_classes, self.dim = centroids.shape

    def _check_dim(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(f"embedding dimension {X.shape[-1]} does not match model dimension {self.dim}")
        return X

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_dim(X)
        norms = np.linalg.norm(X, axis=-1, keepdims=True)
        sims = (X / np.maximum(norms, 1e-300)) @ self.unit_centroids.T
        return softmax(self.temperature * sims)

    def predict(self, embedding: np.ndarray) -> tuple[int, float]:
        probs = self.predict_proba(embedding)
        label = int(np.argmax(probs))
        return label, float(probs[label])

    def predict_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        probs = self.predict_proba(np.atleast_2d(X))
        labels = np.argmax(probs, axis=1)
        return labels, probs[np.arange(len(labels)), labels]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_classes": self.num_classes,
            "dim": self.dim,
            "centroids": [float(v) for v in self.centroids.ravel()],
            "temperature": self.temperature,
        }


ProbModel = LogisticRegressionModel | NearestCentroidModel


def model_from_dict(obj: dict) -> ProbModel:
    kind = obj.get("kind")
    c, d = obj["num_classes"], obj["dim"]
    if kind == "logistic-regression":
        return LogisticRegressionModel(
            np.array(obj["weights"], dtype=np.float64).reshape(c, d),
            np.array(obj["bias"], dtype=np.float64),
        )
    if kind == "nearest-centroid":
        return NearestCentroidModel(
            np.array(obj["centroids"], dtype=np.float64).reshape(c, d),
            obj["temperature"],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def train_weighted(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    num_classes: int,
    params: TrainParams,
    rng_seed: int = 0,
) -> ProbModel:
    """Train a fresh model on (X, y) with L1-normalized per-instance weights.

    The caller is responsible for normalizing the weights; this is checked.
    Training always starts from scratch, never warm-starts.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    sample_weight = np.asarray(sample_weight, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need at least one training example")
    if not (len(X) == len(y) == len(sample_weight)):
        raise ValueError("examples, labels, and weights must have equal length")
    if np.any(sample_weight <= 0):
        raise ValueError("sample weights must be positive")
    if abs(float(sample_weight.sum()) - 1.0) > 1e-8:
        raise ValueError("sample weights must be L1-normalized by the caller")
    if np.any(y < 0) or np.any(y >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")

    if len(np.unique(y)) == 1:
        logger.warning("training on a single-class labeled pool (class %d)", int(y[0]))

    if params.kind == "logistic-regression":
        weights = np.zeros((num_classes, X.shape[1]))
        bias = np.zeros(num_classes)
        for _ in range(params.epochs):
            grad_w, grad_b = weighted_cross_entropy_grad(weights, bias, X, y, sample_weight)
            weights -= params.learning_rate * grad_w
            bias -= params.learning_rate * grad_b
        return LogisticRegressionModel(weights, bias)

    if params.kind == "nearest-centroid":
        centroids = np.zeros((num_classes, X.shape[1]))
        for cls in range(num_classes):
            mask = y == cls
            total = float(sample_weight[mask].sum())
            if total == 0.0:
                raise ValueError(f"class {cls} has zero total weight; cannot place its centroid")
            centroids[cls] = (sample_weight[mask] @ X[mask]) / total
        return NearestCentroidModel(centroids, params.temperature)

    raise ValueError(f"unknown classifier kind {params.kind!r}")
