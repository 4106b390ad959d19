"""From-scratch feed-forward classifier over replica-count classes.

Dense layers with ReLU activations, softmax output, and mini-batch gradient
descent under one of three losses: categorical cross-entropy ("cce"),
Kullback-Leibler divergence ("klde"), or a Poisson loss ("psse"). Trained
models carry their feature-scaling bounds and class labels so predictions are
self-contained.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .simulator import LabeledDataset

LOSS_KINDS = ("cce", "klde", "psse")

# keeps ln(p) finite; softmax outputs only hit the floor at extreme logits
_PROB_FLOOR = 1e-12

MODEL_FORMAT_VERSION = 1


@dataclass
class Network:
    """Weights and biases of the stack; dims run input -> hidden... -> classes."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Network":
        return Network(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class TrainingConfig:
    loss_kind: str = "cce"
    learning_rate: float = 0.01
    epochs: int = 300
    batch_size: int = 32
    validation_fraction: float = 0.2
    seed: int = 0
    feature_scaling: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self) -> None:
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class TrainingReport:
    """Per-epoch history plus the final held-out metrics."""

    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    final_accuracy: float = 0.0
    final_loss: float = 0.0


@dataclass
class ReplicaModel:
    """A trained network plus everything needed to score raw features."""

    network: Network
    class_labels: tuple[int, ...]
    feature_min: np.ndarray
    feature_max: np.ndarray
    loss_kind: str

    def scale(self, features: np.ndarray, warn_out_of_bounds: bool = True) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        lo, hi = self.feature_min, self.feature_max
        if warn_out_of_bounds and (np.any(features < lo) or np.any(features > hi)):
            warnings.warn(
                "features outside the training bounds were clamped", stacklevel=2
            )
        clipped = np.clip(features, lo, hi)
        span = np.where(hi > lo, hi - lo, 1.0)
        return (clipped - lo) / span


def init_network(layer_dims: Sequence[int], seed: int) -> Network:
    """He-style uniform weights (paired with ReLU), zero biases, seeded."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ValueError("a network needs at least input and output dims")
    if any(d < 1 for d in dims):
        raise ValueError("layer dims must be positive")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Network(layer_dims=dims, weights=weights, biases=biases)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def _forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    a = X
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.maximum(0.0, a @ w + b)
    return _softmax(a @ net.weights[-1] + net.biases[-1])


def forward(net: Network, features: Sequence[float]) -> np.ndarray:
    """Class-probability vector for one (already scaled) feature vector."""
    x = np.asarray(features, dtype=float)
    if x.shape != (net.layer_dims[0],):
        raise ValueError(f"expected {net.layer_dims[0]} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    return _forward_batch(net, x[None, :])[0]


def _check_distribution(pred: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=float)
    if pred.ndim != 1 or np.any(pred < 0) or abs(pred.sum() - 1.0) > 1e-6:
        raise ValueError("pred must be a probability distribution")
    return np.clip(pred, _PROB_FLOOR, 1.0)


def loss(pred: Sequence[float], target: Sequence[float], kind: str) -> float:
    """Scalar loss of a predicted distribution against a (one-hot) target."""
    p = _check_distribution(np.asarray(pred, dtype=float))
    t = np.asarray(target, dtype=float)
    if t.shape != p.shape:
        raise ValueError("target shape must match pred")
    if kind == "cce":
        return float(-(t * np.log(p)).sum())
    if kind == "klde":
        mask = t > 0
        return float((t[mask] * (np.log(t[mask]) - np.log(p[mask]))).sum())
    if kind == "psse":
        return float(np.mean(p - t * np.log(p)))
    raise ValueError(f"loss kind must be one of {LOSS_KINDS}")


def _batch_loss(probs: np.ndarray, targets: np.ndarray, kind: str) -> float:
    p = np.clip(probs, _PROB_FLOOR, 1.0)
    if kind == "cce":
        per_row = -(targets * np.log(p)).sum(axis=1)
    elif kind == "klde":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(targets > 0, targets * (np.log(np.where(targets > 0, targets, 1.0)) - np.log(p)), 0.0)
        per_row = terms.sum(axis=1)
    elif kind == "psse":
        per_row = (p - targets * np.log(p)).mean(axis=1)
    else:
        raise ValueError(f"loss kind must be one of {LOSS_KINDS}")
    return float(per_row.mean())


def _output_delta(probs: np.ndarray, targets: np.ndarray, kind: str) -> np.ndarray:
    """Gradient of the loss with respect to the output logits, per row."""
    if kind in ("cce", "klde"):
        # both reduce to softmax cross-entropy for targets summing to 1
        return probs - targets
    if kind == "psse":
        k = probs.shape[1]
        g = (1.0 - targets / np.clip(probs, _PROB_FLOOR, 1.0)) / k
        dot = (g * probs).sum(axis=1, keepdims=True)
        return probs * (g - dot)
    raise ValueError(f"loss kind must be one of {LOSS_KINDS}")


def _backward_batch(
    net: Network, X: np.ndarray, targets: np.ndarray, kind: str
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Mean gradients over the batch for every weight matrix and bias vector."""
    pre: list[np.ndarray] = []
    activations = [X]
    a = X
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(0.0, z)
        activations.append(a)
    probs = _softmax(a @ net.weights[-1] + net.biases[-1])

    n = X.shape[0]
    delta = _output_delta(probs, targets, kind)
    grads_w: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(net.biases)  # type: ignore[list-item]
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta / n
        grads_b[layer] = delta.mean(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre[layer - 1] > 0)
    return grads_w, grads_b


def backward(
    net: Network, features: Sequence[float], target: Sequence[float], kind: str
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Loss gradients for a single sample, shaped like (weights, biases)."""
    x = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    t = np.asarray(target, dtype=float)
    return _backward_batch(net, x[None, :], t[None, :], kind)


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def train(
    net: Network, data: LabeledDataset, cfg: TrainingConfig
) -> tuple[ReplicaModel, TrainingReport]:
    """Mini-batch gradient descent; returns the fitted model and its history.

    Features are min-max scaled with bounds taken from the training split (or
    ``cfg.feature_scaling`` when given); the bounds persist in the model. The
    shuffle order is fixed by the seed, so training is reproducible.
    """
    n_classes = len(data.class_labels)
    if net.layer_dims[-1] != n_classes:
        raise ValueError(
            f"network output dim {net.layer_dims[-1]} does not match {n_classes} classes"
        )
    n = len(data)
    if cfg.batch_size > n:
        raise ValueError("batch_size cannot exceed the dataset size")

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_val = max(1, round(cfg.validation_fraction * n))
    if n_val >= n:
        raise ValueError("validation split leaves no training rows")
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    if cfg.feature_scaling is not None:
        lo = np.asarray(cfg.feature_scaling[0], dtype=float)
        hi = np.asarray(cfg.feature_scaling[1], dtype=float)
    else:
        lo = data.features[train_idx].min(axis=0)
        hi = data.features[train_idx].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    X = (np.clip(data.features, lo, hi) - lo) / span
    T = _one_hot(data.labels, n_classes)

    X_train, T_train = X[train_idx], T[train_idx]
    X_val, T_val = X[val_idx], T[val_idx]
    y_train, y_val = data.labels[train_idx], data.labels[val_idx]

    net = net.copy()
    report = TrainingReport()
    batch = min(cfg.batch_size, len(train_idx))
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train_idx))
        for start in range(0, len(order), batch):
            sel = order[start : start + batch]
            gw, gb = _backward_batch(net, X_train[sel], T_train[sel], cfg.loss_kind)
            for w, g in zip(net.weights, gw):
                w -= cfg.learning_rate * g
            for b, g in zip(net.biases, gb):
                b -= cfg.learning_rate * g
        p_train = _forward_batch(net, X_train)
        p_val = _forward_batch(net, X_val)
        report.train_loss.append(_batch_loss(p_train, T_train, cfg.loss_kind))
        report.train_accuracy.append(float((p_train.argmax(axis=1) == y_train).mean()))
        report.val_loss.append(_batch_loss(p_val, T_val, cfg.loss_kind))
        report.val_accuracy.append(float((p_val.argmax(axis=1) == y_val).mean()))
    report.final_accuracy = report.val_accuracy[-1]
    report.final_loss = report.val_loss[-1]

    model = ReplicaModel(
        network=net,
        class_labels=data.class_labels,
        feature_min=lo,
        feature_max=hi,
        loss_kind=cfg.loss_kind,
    )
    return model, report


def predict_replicas(model: ReplicaModel, cpus: float, memory_mb: float, rate: float) -> int:
    """Replica count for a container/rate query; argmax ties go to the smaller class."""
    scaled = model.scale(np.array([cpus, memory_mb, rate]))
    probs = forward(model.network, scaled)
    return int(model.class_labels[int(np.argmax(probs))])


def evaluate(model: ReplicaModel, data: LabeledDataset, kind: str | None = None) -> tuple[float, float]:
    """(accuracy, mean loss) of a model over a dataset."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    kind = kind or model.loss_kind
    X = model.scale(data.features, warn_out_of_bounds=False)
    probs = _forward_batch(model.network, X)
    accuracy = float((probs.argmax(axis=1) == data.labels).mean())
    targets = _one_hot(data.labels, len(data.class_labels))
    return accuracy, _batch_loss(probs, targets, kind)


def model_to_dict(model: ReplicaModel) -> dict:
    """JSON-ready artifact; floats keep full round-trip precision."""
    return {
        "version": MODEL_FORMAT_VERSION,
        "layer_dims": list(model.network.layer_dims),
        "weights": [w.tolist() for w in model.network.weights],
        "biases": [b.tolist() for b in model.network.biases],
        "class_labels": list(model.class_labels),
        "feature_min": model.feature_min.tolist(),
        "feature_max": model.feature_max.tolist(),
        "loss_kind": model.loss_kind,
    }


def model_from_dict(doc: dict) -> ReplicaModel:
    """Inverse of :func:`model_to_dict`; raises ``ValueError`` naming bad fields."""
    if not isinstance(doc, dict):
        raise ValueError("model document must be a JSON object")
    required = (
        "version",
        "layer_dims",
        "weights",
        "biases",
        "class_labels",
        "feature_min",
        "feature_max",
        "loss_kind",
    )
    for key in required:
        if key not in doc:
            raise ValueError(f"model document missing field {key!r}")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc['version']!r}")
    dims = tuple(int(d) for d in doc["layer_dims"])
    try:
        weights = [np.asarray(w, dtype=float) for w in doc["weights"]]
        biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
    except (TypeError, ValueError) as exc:
        raise ValueError(f"field 'weights'/'biases' malformed: {exc}") from exc
    if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
        raise ValueError("field 'weights' inconsistent with 'layer_dims'")
    for i, (w, b) in enumerate(zip(weights, biases)):
        if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
            raise ValueError(f"field 'weights' layer {i} has shape {w.shape}, expected {(dims[i], dims[i + 1])}")
    if doc["loss_kind"] not in LOSS_KINDS:
        raise ValueError(f"field 'loss_kind' must be one of {LOSS_KINDS}")
    feature_min = np.asarray(doc["feature_min"], dtype=float)
    feature_max = np.asarray(doc["feature_max"], dtype=float)
    if feature_min.shape != (dims[0],) or feature_max.shape != (dims[0],):
        raise ValueError("field 'feature_min'/'feature_max' must match the input dim")
    class_labels = tuple(int(c) for c in doc["class_labels"])
    if len(class_labels) != dims[-1]:
        raise ValueError("field 'class_labels' must match the output dim")
    return ReplicaModel(
        network=Network(layer_dims=dims, weights=weights, biases=biases),
        class_labels=class_labels,
        feature_min=feature_min,
        feature_max=feature_max,
        loss_kind=doc["loss_kind"],
    )
