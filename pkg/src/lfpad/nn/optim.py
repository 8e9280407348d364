"""Plain SGD and minibatch iteration."""

from __future__ import annotations

import numpy as np

from .network import Network


def sgd_step(net: Network, learning_rate: float) -> None:
    """p <- p - lr * g for every non-frozen parameter; frozen ones untouched."""
    for _, _, param, grad, frozen in net.parameters():
        if not frozen:
            param -= (learning_rate * grad).astype(param.dtype, copy=False)


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    """Yield shuffled index arrays covering range(n) once."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]
