"""Classifiers applied to estimated clean features.

Both are trained on (or built from) the class dictionary columns. A linear
SVM would plug in the same way: anything with ``predict(V) -> labels``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabeledFeatureSet, _frozen, as_feature, as_matrix
from .errors import DegenerateLabels, DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class NnClassifier:
    prototypes: LabeledFeatureSet

    def __post_init__(self):
        if self.prototypes.n < 1:
            raise ValueError("need at least one prototype")

    @property
    def m(self) -> int:
        return self.prototypes.m

    def predict(self, v) -> np.ndarray:
        """Labels for every column of ``v``; ties go to the lowest prototype index."""
        v = as_matrix(v, "queries")
        if v.shape[0] != self.m:
            raise DimensionMismatch(f"query dimension {v.shape[0]} != {self.m}")
        p = self.prototypes.matrix
        # squared distances up to the per-query constant ||v||^2
        d2 = np.sum(p * p, axis=0)[:, None] - 2.0 * (p.T @ v)
        return self.prototypes.labels[np.argmin(d2, axis=0)]


def nn_classify(c: NnClassifier, v) -> int:
    v = as_feature(v)
    if v.size != c.m:
        raise DimensionMismatch(f"query dimension {v.size} != {c.m}")
    d = np.linalg.norm(c.prototypes.matrix - v[:, None], axis=0)
    return int(c.prototypes.labels[int(np.argmin(d))])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 500
    l2_penalty: float = 1e-4
    seed: int = 0
    init_scale: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be nonnegative")


@dataclass(frozen=True)
class SoftmaxClassifier:
    weights: np.ndarray     # K x m
    bias: np.ndarray        # K
    class_ids: np.ndarray   # K
    loss_history: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        ids = np.asarray(self.class_ids, dtype=np.int64)
        if w.ndim != 2 or b.shape != (w.shape[0],) or ids.shape != (w.shape[0],):
            raise DimensionMismatch("weights, bias and class_ids disagree in K")
        if w.shape[0] < 2:
            raise DegenerateLabels("softmax needs at least two classes")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NonFiniteInput("non-finite softmax parameters")
        object.__setattr__(self, "weights", _frozen(w.copy()))
        object.__setattr__(self, "bias", _frozen(b.copy()))
        object.__setattr__(self, "class_ids", _frozen(ids.copy()))

    @property
    def m(self) -> int:
        return self.weights.shape[1]

    def logits(self, v: np.ndarray) -> np.ndarray:
        return self.weights @ v + self.bias[:, None]

    def predict_proba(self, v) -> np.ndarray:
        v = as_matrix(v, "queries")
        if v.shape[0] != self.m:
            raise DimensionMismatch(f"query dimension {v.shape[0]} != {self.m}")
        return softmax(self.logits(v))

    def predict(self, v) -> np.ndarray:
        return self.class_ids[np.argmax(self.predict_proba(v), axis=0)]


def softmax(z: np.ndarray) -> np.ndarray:
    """Column-wise softmax in max-subtracted form."""
    e = np.exp(z - z.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def _loss(w, b, x, onehot, l2):
    z = w @ x + b[:, None]
    zmax = z.max(axis=0, keepdims=True)
    lse = zmax[0] + np.log(np.exp(z - zmax).sum(axis=0))
    nll = np.mean(lse - np.sum(z * onehot, axis=0))
    return nll + 0.5 * l2 * np.sum(w * w), z


def softmax_train(data: LabeledFeatureSet, cfg: TrainConfig = TrainConfig()) -> SoftmaxClassifier:
    """Multinomial logistic regression by full-batch gradient descent.

    The rate is halved (and the step retried) whenever a step would raise
    the penalized cross-entropy, so the recorded loss never increases.
    """
    ids, y = np.unique(data.labels, return_inverse=True)
    if ids.size < 2:
        raise DegenerateLabels("softmax needs at least two classes")
    x = data.matrix
    k, (m, n) = ids.size, x.shape
    onehot = np.zeros((k, n))
    onehot[y, np.arange(n)] = 1.0

    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    w = cfg.init_scale * rng.standard_normal((k, m))
    b = np.zeros(k)
    lr = cfg.learning_rate
    loss, z = _loss(w, b, x, onehot, cfg.l2_penalty)
    history = [loss]
    for _ in range(cfg.epochs):
        g = (softmax(z) - onehot) / n
        gw = g @ x.T + cfg.l2_penalty * w
        gb = g.sum(axis=1)
        while True:
            w_new, b_new = w - lr * gw, b - lr * gb
            new_loss, z_new = _loss(w_new, b_new, x, onehot, cfg.l2_penalty)
            if new_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        if new_loss > loss:
            break
        w, b, loss, z = w_new, b_new, new_loss, z_new
        history.append(loss)
    return SoftmaxClassifier(w, b, ids, tuple(history))


def softmax_classify(c: SoftmaxClassifier, v):
    """(class id, probability vector); ties go to the lowest class index."""
    v = as_feature(v)
    p = c.predict_proba(v[:, None])[:, 0]
    return int(c.class_ids[int(np.argmax(p))]), p
