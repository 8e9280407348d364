"""A small acyclic layer graph with forward/backward evaluation.

Nodes are appended in topological order; each node names its input nodes by
index, with -1 standing for the network input. Backward accumulates
gradients per node (fan-out sums) and stops below the earliest node holding
unfrozen parameters, since nothing deeper can consume those gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import NoForwardState
from .layers import Layer, LayerInfo

INPUT = -1


class Network:
    def __init__(self):
        self._layers: list[Layer] = []
        self._srcs: list[tuple[int, ...]] = []
        self.tags: dict[str, int] = {}
        self._acts: list[np.ndarray] | None = None
        self._input: np.ndarray | None = None

    def add(self, layer: Layer, srcs: tuple[int, ...] | None = None, tag: str | None = None) -> int:
        """Append a node; default source is the previous node (or the input)."""
        idx = len(self._layers)
        if srcs is None:
            srcs = (idx - 1,) if idx > 0 else (INPUT,)
        if any(s >= idx for s in srcs):
            raise ValueError(f"node {idx} cannot consume a later node {srcs}")
        if len(srcs) != layer.n_inputs():
            raise ValueError(f"{layer.kind} wants {layer.n_inputs()} inputs, got {len(srcs)}")
        self._layers.append(layer)
        self._srcs.append(tuple(srcs))
        if tag is not None:
            self.tags[tag] = idx
        return idx

    def __len__(self) -> int:
        return len(self._layers)

    @property
    def layers(self) -> list[Layer]:
        return self._layers

    def sources(self, idx: int) -> tuple[int, ...]:
        return self._srcs[idx]

    def infos(self) -> list[LayerInfo]:
        return [l.info() for l in self._layers]

    def forward(self, x: np.ndarray, upto: int | None = None) -> np.ndarray:
        """Evaluate nodes up to and including ``upto`` (default: the output)."""
        last = len(self._layers) - 1 if upto is None else upto
        acts: list[np.ndarray] = []
        for i in range(last + 1):
            ins = [x if s == INPUT else acts[s] for s in self._srcs[i]]
            acts.append(self._layers[i].forward(*ins))
        self._acts = acts
        self._input = x
        return acts[last]

    def activation(self, idx: int) -> np.ndarray:
        if self._acts is None or idx >= len(self._acts):
            raise NoForwardState("no forward pass has populated this activation")
        return self._acts[idx]

    def _earliest_trainable(self) -> int:
        for i, layer in enumerate(self._layers):
            if layer.params and not layer.frozen:
                return i
        return len(self._layers)

    def backward(self, gout: np.ndarray) -> np.ndarray | None:
        """Backpropagate from the output node; returns the input gradient
        when it is actually reached (all-frozen prefixes are skipped)."""
        if self._acts is None:
            raise NoForwardState("backward called before forward")
        n = len(self._acts)
        stop = self._earliest_trainable()
        grads: dict[int, np.ndarray] = {n - 1: gout}
        input_grad = None
        for i in range(n - 1, stop - 1, -1):
            g = grads.pop(i, None)
            if g is None:
                continue
            gins = self._layers[i].backward(g)
            if not isinstance(gins, tuple):
                gins = (gins,)
            for s, gi in zip(self._srcs[i], gins):
                if s == INPUT:
                    input_grad = gi if input_grad is None else input_grad + gi
                elif s in grads:
                    grads[s] = grads[s] + gi
                else:
                    grads[s] = gi
        return input_grad

    def zero_grads(self):
        for layer in self._layers:
            layer.zero_grads()

    def parameters(self):
        """Yield (node_id, name, param, grad, frozen) in deterministic order."""
        for i, layer in enumerate(self._layers):
            for name in sorted(layer.params):
                yield i, name, layer.params[name], layer.grads[name], layer.frozen

    def cast_params(self, dtype):
        for layer in self._layers:
            layer.cast_params(dtype)

    def set_all_frozen(self, flag: bool):
        for layer in self._layers:
            if layer.params:
                layer.frozen = flag

    def frozen_flags(self) -> list[bool]:
        return [l.frozen for l in self._layers if l.params]
