"""VGG-style classifier over predicted depth maps with staged fine-tuning.

The backbone is the classic 16-convolution arrangement (blocks of 2, 2, 4,
4, 4 filters wide 64/128/256/512/512, scaled by ``width_scale``) with a
2x2 max-pool after each block, followed by two dense layers and a softmax.
Training is staged: the whole backbone first learns a generic shape task,
then fine-tuning freezes every convolution except the last and trains only
that plus the dense head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, DivergedNaN, EmptyDataset, ShapeMismatch
from .nn import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2x2,
    Network,
    ReLU,
    Softmax,
    minibatches,
    nll_loss,
    sgd_step,
)
from .depthnet import scaled

VGG_BLOCKS = ((2, 64), (2, 128), (4, 256), (4, 512), (4, 512))
N_CONV_LAYERS = sum(n for n, _ in VGG_BLOCKS)
HEAD_HIDDEN = 64

# Fine-tuning defaults mirroring the reference recipe.
DEFAULT_LEARNING_RATE = 1e-4
DEFAULT_EPOCHS = {"two": 50, "multi": 200}

MODES = {"two": 2, "multi": 5}


@dataclass(frozen=True)
class ClassifierConfig:
    mode: str = "two"  # "two": real vs spoof; "multi": real + four attacks
    input_dims: tuple[int, int] = (64, 64)
    width_scale: float = 0.125

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")
        h, w = self.input_dims
        if h % 32 or w % 32:
            raise ConfigInvalid(f"input dims must survive five 2x pools, got {h}x{w}")
        if self.width_scale <= 0:
            raise ConfigInvalid("width_scale must be positive")

    @property
    def n_classes(self) -> int:
        return MODES[self.mode]


@dataclass(frozen=True)
class Prediction:
    """Class probabilities plus the induced ranking (ties -> lower index)."""

    scores: np.ndarray
    ranked_classes: tuple[int, ...]

    def __post_init__(self):
        if abs(float(self.scores.sum()) - 1.0) > 1e-6:
            raise ValueError("scores must sum to 1")
        if sorted(self.ranked_classes) != list(range(len(self.scores))):
            raise ValueError("ranking must be a permutation of all classes")


def rank_classes(scores: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argsort(-np.asarray(scores), kind="stable"))


def build_classifier(config: ClassifierConfig, seed: int = 0) -> Network:
    """Assemble the backbone + head with the freeze policy already applied."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 10]))
    net = Network()
    in_ch = 1
    h, w = config.input_dims
    for n_convs, filters in VGG_BLOCKS:
        out_ch = scaled(filters, config.width_scale)
        for _ in range(n_convs):
            net.add(Conv2D(in_ch, out_ch, 3, stride=1, rng=rng))
            net.add(ReLU())
            in_ch = out_ch
        net.add(MaxPool2x2())
        h //= 2
        w //= 2
    net.add(Flatten(), tag="features")
    feat = in_ch * h * w
    net.add(Dense(feat, HEAD_HIDDEN, rng=rng))
    net.add(ReLU())
    net.add(Dense(HEAD_HIDDEN, config.n_classes, rng=rng))
    net.add(Softmax(), tag="output")
    apply_freeze_policy(net)
    return net


def conv_node_ids(net: Network) -> list[int]:
    return [i for i, layer in enumerate(net.layers) if isinstance(layer, Conv2D)]


def apply_freeze_policy(net: Network) -> None:
    """Freeze every convolution except the last; dense layers stay trainable."""
    convs = conv_node_ids(net)
    for i in convs:
        net.layers[i].frozen = True
    net.layers[convs[-1]].frozen = False
    for layer in net.layers:
        if isinstance(layer, Dense):
            layer.frozen = False


def _check_inputs(X: np.ndarray, y: np.ndarray | None, n_classes: int | None = None):
    X = np.asarray(X, dtype=np.float32)
    if X.ndim != 3:
        raise ShapeMismatch(f"expected (n, h, w) maps, got {X.shape}")
    if len(X) == 0:
        raise EmptyDataset("no samples")
    if y is not None:
        y = np.asarray(y, dtype=np.int64)
        if y.shape != (len(X),):
            raise ShapeMismatch(f"need {len(X)} labels, got {y.shape}")
        if n_classes is not None and (y.min() < 0 or y.max() >= n_classes):
            raise ValueError(f"labels must lie in [0, {n_classes})")
    return X, y


def _train(net: Network, X: np.ndarray, y: np.ndarray, epochs: int, lr: float,
           rng: np.random.Generator, batch_size: int, augment: bool) -> list[float]:
    n = len(X)
    history: list[float] = []
    for _ in range(epochs):
        total = 0.0
        with np.errstate(over="ignore", invalid="ignore"):  # NaN check below
            for idx in minibatches(n, batch_size, rng):
                xb = X[idx].copy()
                if augment:
                    flips = rng.random(len(idx)) < 0.5
                    xb[flips] = xb[flips, :, ::-1]
                    gains = rng.uniform(0.95, 1.05, size=len(idx)).astype(np.float32)
                    xb = np.clip(xb * gains[:, None, None], 0.0, 1.0)
                probs = net.forward(xb[:, None])
                loss, grad = nll_loss(probs, y[idx])
                net.zero_grads()
                net.backward(grad.astype(np.float32))
                sgd_step(net, lr)
                total += loss * len(idx)
        mean = total / n
        if not np.isfinite(mean):
            raise DivergedNaN(f"classifier loss diverged at epoch {len(history)}")
        history.append(mean)
    return history


def pretrain_backbone(
    net: Network,
    images: np.ndarray,
    labels: np.ndarray,
    epochs: int = 8,
    learning_rate: float = 0.01,
    seed: int = 0,
    batch_size: int = 8,
) -> tuple[list[float], Network]:
    """Train the full backbone on a generic multi-class task (>= 4 classes).

    A scratch head sized for the generic label set is attached to the shared
    convolution trunk; every layer is trainable during this stage. The
    caller's freeze flags are restored afterwards. Returns the loss history
    plus the generic-task network (same trunk objects, scratch head) so the
    stage can be evaluated on held-out generic data.
    """
    images, labels = _check_inputs(images, labels)
    n_generic = int(labels.max()) + 1
    if n_generic < 4:
        raise ValueError("generic pretraining task needs >= 4 classes")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))

    flatten_idx = net.tags["features"]
    scratch = Network()
    for i in range(flatten_idx + 1):
        scratch.add(net.layers[i], srcs=net.sources(i))
    feat = net.layers[flatten_idx + 1].in_dim
    scratch.add(Dense(feat, HEAD_HIDDEN, rng=rng))
    scratch.add(ReLU())
    scratch.add(Dense(HEAD_HIDDEN, n_generic, rng=rng))
    scratch.add(Softmax())

    saved_flags = [layer.frozen for layer in net.layers]
    scratch.set_all_frozen(False)
    try:
        history = _train(scratch, images, labels, epochs, learning_rate, rng,
                         batch_size, augment=False)
    finally:
        for layer, flag in zip(net.layers, saved_flags):
            layer.frozen = flag
    return history, scratch


def finetune(
    net: Network,
    depth_maps: np.ndarray,
    labels: np.ndarray,
    epochs: int,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    seed: int = 0,
    batch_size: int = 8,
    augment: bool = False,
) -> list[float]:
    """Train only the unfrozen parameters (last conv + dense head)."""
    n_classes = net.layers[net.tags["output"] - 1].out_dim
    depth_maps, labels = _check_inputs(depth_maps, labels, n_classes)
    apply_freeze_policy(net)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 12]))
    return _train(net, depth_maps, labels, epochs, learning_rate, rng, batch_size, augment)


def predict(net: Network, depth_map: np.ndarray) -> Prediction:
    depth_map = np.asarray(depth_map, dtype=np.float32)
    if depth_map.ndim != 2:
        raise ShapeMismatch(f"expected one (h, w) map, got {depth_map.shape}")
    scores = net.forward(depth_map[None, None])[0]
    return Prediction(scores=scores, ranked_classes=rank_classes(scores))


def predict_batch(net: Network, depth_maps: np.ndarray, batch_size: int = 16) -> np.ndarray:
    depth_maps, _ = _check_inputs(depth_maps, None)
    outs = []
    for start in range(0, len(depth_maps), batch_size):
        outs.append(net.forward(depth_maps[start : start + batch_size][:, None]))
    return np.concatenate(outs, axis=0)
