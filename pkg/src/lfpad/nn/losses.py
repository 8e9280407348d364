"""Loss functions, each returning (scalar value, gradient w.r.t. the input)."""

from __future__ import annotations

import numpy as np

from ..errors import LabelOutOfRange, ShapeMismatch

_PROB_FLOOR = 1e-12


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error (1/n) * sum((y - yhat)^2) over all elements."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    n = pred.size
    loss = float(np.dot(diff.ravel(), diff.ravel()) / n)
    return loss, (2.0 / n) * diff


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(logits: np.ndarray, label) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy, -log softmax(logits)[label], batch-averaged.

    Accepts (k,) logits with an int label or (b, k) with (b,) labels.
    Gradient is (softmax - onehot) / b.
    """
    logits = np.asarray(logits)
    squeeze = logits.ndim == 1
    z = logits[None] if squeeze else logits
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    b, k = z.shape
    if labels.shape != (b,):
        raise ShapeMismatch(f"need {b} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    shifted = z - z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1))
    loss = float(np.mean(lse - shifted[np.arange(b), labels]))
    grad = softmax(z)
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, (grad[0] if squeeze else grad)


def nll_loss(probs: np.ndarray, label) -> tuple[float, np.ndarray]:
    """Negative log-likelihood on probabilities (softmax already applied).

    Composing its gradient through a Softmax layer reproduces the
    (softmax - onehot) logit gradient of cross_entropy_loss.
    """
    probs = np.asarray(probs)
    squeeze = probs.ndim == 1
    p = probs[None] if squeeze else probs
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    b, k = p.shape
    if labels.shape != (b,):
        raise ShapeMismatch(f"need {b} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    picked = np.maximum(p[np.arange(b), labels], _PROB_FLOOR)
    loss = float(np.mean(-np.log(picked)))
    grad = np.zeros_like(p)
    grad[np.arange(b), labels] = -1.0 / (b * picked)
    return loss, (grad[0] if squeeze else grad)
