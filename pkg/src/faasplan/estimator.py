"""Scikit-learn style facade over the replica classifier.

``ReplicaPredictor`` exposes the usual fit/predict/predict_proba/get_params
surface so the classifier drops into pipelines, grid search, and
cross-validation alongside the rest of the ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .nn import TrainingConfig, _forward_batch, init_network, train
from .simulator import LabeledDataset


class ReplicaPredictor(BaseEstimator, ClassifierMixin):
    """Replica-count classifier over (cpus, memory_mb, request_rate) features.

    Parameters mirror :class:`faasplan.nn.TrainingConfig`; the heavy lifting is
    the hand-written network in :mod:`faasplan.nn`.
    """

    def __init__(
        self,
        hidden_layer_sizes=(64, 64),
        loss="cce",
        learning_rate=0.01,
        epochs=300,
        batch_size=32,
        validation_fraction=0.2,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.loss = loss
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if np.any(X <= 0):
            raise ValueError("features must be positive")
        self.classes_ = np.unique(y).astype(int)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to fit")
        index = {c: i for i, c in enumerate(self.classes_)}
        labels = np.array([index[int(v)] for v in y])
        dataset = LabeledDataset(
            features=X,
            labels=labels,
            class_labels=tuple(int(c) for c in self.classes_),
            flags=np.zeros(len(labels), dtype=bool),
        )
        dims = (X.shape[1], *self.hidden_layer_sizes, len(self.classes_))
        net = init_network(dims, seed=self.random_state)
        cfg = TrainingConfig(
            loss_kind=self.loss,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=min(self.batch_size, len(dataset)),
            validation_fraction=self.validation_fraction,
            seed=self.random_state,
        )
        self.model_, self.report_ = train(net, dataset, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        scaled = self.model_.scale(X, warn_out_of_bounds=False)
        return _forward_batch(self.model_.network, scaled)

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[probs.argmax(axis=1)]
