"""Layer primitives. All activations are batched: (b, c, h, w) or (b, d).

Convolution is cross-correlation (no kernel flip) with zero same-padding:
at stride s the output spatial size is ceil(size / s), and the total pad
max((out-1)*s + k - size, 0) splits floor half before, the rest after.
Weights use He-normal initialization, biases start at zero, parameters are
stored float32; computation follows the dtype of the input so float64 can
be pushed through for numeric checks.

Frozen layers keep zero parameter gradients but still propagate input
gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoForwardState, ShapeMismatch


@dataclass(frozen=True)
class LayerInfo:
    """Machine-checkable description of a layer, used by structure audits."""

    kind: str
    out_channels: int | None = None
    kernel: tuple[int, int] | None = None
    stride: int | None = None
    frozen: bool = False
    n_params: int = 0


class Layer:
    frozen: bool = False

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.frozen = False
        self._cache = None

    @property
    def kind(self) -> str:
        return type(self).__name__

    def n_inputs(self) -> int:
        return 1

    def zero_grads(self):
        for k, p in self.params.items():
            self.grads[k] = np.zeros_like(p)

    def cast_params(self, dtype):
        for k in self.params:
            self.params[k] = self.params[k].astype(dtype)
        self.zero_grads()

    def _need_cache(self):
        if self._cache is None:
            raise NoForwardState(f"{self.kind}.backward called before forward")
        return self._cache

    def info(self) -> LayerInfo:
        return LayerInfo(
            kind=self.kind,
            frozen=self.frozen,
            n_params=sum(p.size for p in self.params.values()),
        )

    def forward(self, *xs):  # pragma: no cover - abstract
        raise NotImplementedError

    def backward(self, gout):  # pragma: no cover - abstract
        raise NotImplementedError


def _same_pad(size: int, k: int, stride: int) -> tuple[int, int, int]:
    out = -(-size // stride)  # ceil division
    total = max((out - 1) * stride + k - size, 0)
    return out, total // 2, total - total // 2


class Conv2D(Layer):
    def __init__(self, in_ch: int, out_ch: int, kh: int, kw: int | None = None,
                 stride: int = 1, rng: np.random.Generator | None = None):
        super().__init__()
        kw = kh if kw is None else kw
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kh, self.kw = kh, kw
        self.stride = stride
        rng = rng or np.random.default_rng(0)
        fan_in = in_ch * kh * kw
        std = np.sqrt(2.0 / fan_in)
        self.params["w"] = (rng.standard_normal((out_ch, in_ch, kh, kw)) * std).astype(np.float32)
        self.params["b"] = np.zeros(out_ch, dtype=np.float32)
        self.zero_grads()

    def info(self) -> LayerInfo:
        return LayerInfo("Conv2D", self.out_ch, (self.kh, self.kw), self.stride,
                         self.frozen, self.params["w"].size + self.params["b"].size)

    def _im2col(self, xp: np.ndarray, oh: int, ow: int) -> np.ndarray:
        """Columns as (b, c*kh*kw, oh*ow); built from plain slice copies so
        no large multi-axis gather is needed."""
        b, c = xp.shape[:2]
        s = self.stride
        col = np.empty((b, c, self.kh, self.kw, oh, ow), dtype=xp.dtype)
        for i in range(self.kh):
            for j in range(self.kw):
                col[:, :, i, j] = xp[:, :, i : i + s * oh : s, j : j + s * ow : s]
        return col.reshape(b, c * self.kh * self.kw, oh * ow)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ShapeMismatch(
                f"Conv2D expects (b, {self.in_ch}, h, w), got {x.shape}"
            )
        b, _, h, w = x.shape
        oh, pt, pb = _same_pad(h, self.kh, self.stride)
        ow, pl, pr = _same_pad(w, self.kw, self.stride)
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
        col = self._im2col(xp, oh, ow)
        wmat = self.params["w"].reshape(self.out_ch, -1)
        out = np.matmul(wmat, col) + self.params["b"][:, None]
        self._cache = (xp, (b, h, w, oh, ow, pt, pl))
        return out.reshape(b, self.out_ch, oh, ow)

    def backward(self, gout: np.ndarray) -> np.ndarray:
        xp, (b, h, w, oh, ow, pt, pl) = self._need_cache()
        gmat = gout.reshape(b, self.out_ch, oh * ow)
        wmat = self.params["w"].reshape(self.out_ch, -1)
        if not self.frozen:
            col = self._im2col(xp, oh, ow)
            gw = np.matmul(gmat, col.transpose(0, 2, 1)).sum(axis=0)
            self.grads["w"] += gw.reshape(self.params["w"].shape)
            self.grads["b"] += gmat.sum(axis=(0, 2))
        gcol = np.matmul(wmat.T, gmat).reshape(b, self.in_ch, self.kh, self.kw, oh, ow)
        gxp = np.zeros(xp.shape, dtype=gcol.dtype)
        s = self.stride
        for i in range(self.kh):
            for j in range(self.kw):
                gxp[:, :, i : i + s * oh : s, j : j + s * ow : s] += gcol[:, :, i, j]
        return gxp[:, :, pt : pt + h, pl : pl + w]


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                   stride: int = 1) -> np.ndarray:
    """Functional same-padded cross-correlation on a single (c, h, w) input."""
    out_ch, in_ch, kh, kw = weights.shape
    layer = Conv2D(in_ch, out_ch, kh, kw, stride=stride)
    layer.params["w"] = np.asarray(weights)
    layer.params["b"] = np.asarray(bias)
    squeeze = x.ndim == 3
    out = layer.forward(x[None] if squeeze else x)
    return out[0] if squeeze else out


class ReLU(Layer):
    def forward(self, x):
        self._cache = x > 0
        return np.maximum(x, 0)

    def backward(self, gout):
        return gout * self._need_cache()


class MaxPool2x2(Layer):
    def forward(self, x):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeMismatch(f"MaxPool2x2 needs even spatial dims, got {h}x{w}")
        oh, ow = h // 2, w // 2
        blocks = x.reshape(b, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, oh, ow, 4)
        idx = blocks.argmax(axis=-1)
        self._cache = (idx, (b, c, h, w))
        return np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]

    def backward(self, gout):
        idx, (b, c, h, w) = self._need_cache()
        oh, ow = h // 2, w // 2
        gb = np.zeros((b, c, oh, ow, 4), dtype=gout.dtype)
        np.put_along_axis(gb, idx[..., None], gout[..., None], axis=-1)
        return gb.reshape(b, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)


class Upsample2x(Layer):
    """Nearest-neighbour 2x spatial upsampling."""

    def forward(self, x):
        self._cache = x.shape
        return x.repeat(2, axis=2).repeat(2, axis=3)

    def backward(self, gout):
        b, c, h, w = self._need_cache()
        return gout.reshape(b, c, h, 2, w, 2).sum(axis=(3, 5))


class Concat(Layer):
    """Channel-axis concatenation of two activations with equal spatial dims."""

    def n_inputs(self) -> int:
        return 2

    def forward(self, x, skip):
        if x.shape[0] != skip.shape[0] or x.shape[2:] != skip.shape[2:]:
            raise ShapeMismatch(f"cannot concat {x.shape} with {skip.shape}")
        self._cache = x.shape[1]
        return np.concatenate([x, skip], axis=1)

    def backward(self, gout):
        c = self._need_cache()
        return gout[:, :c], gout[:, c:]


class Flatten(Layer):
    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gout):
        return gout.reshape(self._need_cache())


class Dense(Layer):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator | None = None):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        rng = rng or np.random.default_rng(0)
        std = np.sqrt(2.0 / in_dim)
        self.params["w"] = (rng.standard_normal((out_dim, in_dim)) * std).astype(np.float32)
        self.params["b"] = np.zeros(out_dim, dtype=np.float32)
        self.zero_grads()

    def info(self) -> LayerInfo:
        return LayerInfo("Dense", self.out_dim, None, None, self.frozen,
                         self.params["w"].size + self.params["b"].size)

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"Dense expects (b, {self.in_dim}), got {x.shape}")
        self._cache = x
        return x @ self.params["w"].T + self.params["b"]

    def backward(self, gout):
        x = self._need_cache()
        if not self.frozen:
            self.grads["w"] += gout.T @ x
            self.grads["b"] += gout.sum(axis=0)
        return gout @ self.params["w"]


class Softmax(Layer):
    def forward(self, x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=-1, keepdims=True)
        self._cache = s
        return s

    def backward(self, gout):
        s = self._need_cache()
        return s * (gout - (gout * s).sum(axis=-1, keepdims=True))


class Clamp01(Layer):
    """Identity inside [0, 1], clamped outside; gradient zero where clamped."""

    def forward(self, x):
        self._cache = (x > 0.0) & (x < 1.0)
        return np.clip(x, 0.0, 1.0)

    def backward(self, gout):
        return gout * self._need_cache()
