"""Asymmetric encoder-decoder that regresses a depth map from a luma image.

The encoder stacks seven convolutions (5x5 first, then 3x3) with ReLU,
downsampling by stride 2 at layers 2, 4 and 6. The decoder runs nine 3x3
convolutions interleaved with three nearest-neighbour upsamplings and four
channel concatenations that reinject encoder activations at matching
resolution (and finally the raw input), ending in a single linear filter
clamped to [0, 1]. Filter counts scale by ``width_scale``;
``width_scale=1`` reproduces the full-size layout.

Training is two-staged: a pretrain pass on generic synthetic surfaces, then
fine-tuning on the finger-dorsal corpus, both minimizing mean squared error
with plain SGD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, DivergedNaN, EmptyDataset, ShapeMismatch
from .nn import Clamp01, Concat, Conv2D, Network, ReLU, Upsample2x, mse_loss, minibatches, sgd_step
from .nn.network import INPUT

# (kernel, filters, stride) per encoder layer.
ENCODER_LAYOUT = (
    (5, 32, 1),
    (3, 64, 2),
    (3, 64, 1),
    (3, 128, 2),
    (3, 128, 1),
    (3, 256, 2),
    (3, 256, 1),
)
# Filters per decoder convolution; all kernels are 3x3, stride 1.
DECODER_FILTERS = (256, 256, 128, 128, 64, 64, 32, 32, 1)
# Decoder concatenation sources: encoder layer index (0-based) or the input.
SKIP_SOURCES = (4, 2, 0, "input")  # after D2, D4, D6, D8


def scaled(filters: int, width_scale: float) -> int:
    return max(1, round(filters * width_scale))


@dataclass(frozen=True)
class DepthNetConfig:
    input_dims: tuple[int, int] = (64, 64)
    width_scale: float = 0.25

    def __post_init__(self):
        h, w = self.input_dims
        if h % 8 or w % 8:
            raise ConfigInvalid(f"input dims must be divisible by 8, got {h}x{w}")
        if self.width_scale <= 0:
            raise ConfigInvalid("width_scale must be positive")


@dataclass(frozen=True)
class TrainRecipe:
    stage: str  # "pretrain" | "finetune"
    epochs: int
    learning_rate: float
    dataset: str = ""

    def __post_init__(self):
        if self.stage not in ("pretrain", "finetune"):
            raise ConfigInvalid(f"unknown stage {self.stage!r}")
        if self.learning_rate <= 0:
            raise ConfigInvalid("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigInvalid("epochs must be nonnegative")


def _add_mean_carrier(conv: Conv2D) -> None:
    """Overlay a box filter on output channel 0.

    Smooth-surface regression needs multi-scale local luma means; under
    plain He initialization that pathway is a deep near-linear chain with
    vanishing path products and takes thousands of steps to form. Seeding
    every convolution with a normalized box component keeps a mean-carrying
    channel alive through the whole graph from the first step.
    """
    w = conv.params["w"]
    w[0] += np.float32(1.0 / (conv.in_ch * conv.kh * conv.kw))


def build_depthnet(config: DepthNetConfig, seed: int = 0) -> Network:
    """Assemble the encoder-decoder graph with seeded He-normal weights."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    ws = config.width_scale
    net = Network()

    in_ch = 1
    encoder_relu: list[int] = []
    encoder_ch: list[int] = []
    for k, filters, stride in ENCODER_LAYOUT:
        out_ch = scaled(filters, ws)
        conv = Conv2D(in_ch, out_ch, k, stride=stride, rng=rng)
        _add_mean_carrier(conv)
        net.add(conv)
        encoder_relu.append(net.add(ReLU()))
        encoder_ch.append(out_ch)
        in_ch = out_ch
    net.tags["bottleneck"] = encoder_relu[-1]

    skips = iter(SKIP_SOURCES)
    for i, filters in enumerate(DECODER_FILTERS, start=1):
        out_ch = 1 if i == len(DECODER_FILTERS) else scaled(filters, ws)
        conv = Conv2D(in_ch, out_ch, 3, stride=1, rng=rng)
        _add_mean_carrier(conv)
        if i == len(DECODER_FILTERS):
            # bias the linear output to mid-range so the clamp starts
            # transparent; zero bias leaves most pixels clamped with no
            # gradient and the output layer never learns
            conv.params["b"][:] = 0.5
            net.add(conv, tag="pre_output")
            net.add(Clamp01(), tag="output")
            in_ch = out_ch
            break
        net.add(conv)
        net.add(ReLU())
        in_ch = out_ch
        if i in (2, 4, 6, 8):
            source = next(skips)
            if i != 8:
                net.add(Upsample2x())
            if source == "input":
                skip_id, skip_ch = INPUT, 1
            else:
                skip_id, skip_ch = encoder_relu[source], encoder_ch[source]
            net.add(Concat(), srcs=(len(net) - 1, skip_id))
            in_ch += skip_ch
    return net


def encode(net: Network, image: np.ndarray) -> np.ndarray:
    """Bottleneck activation for one image: (channels, h/8, w/8), nonnegative."""
    x = _as_batch(image)
    return net.forward(x, upto=net.tags["bottleneck"])[0]


def predict_depth(net: Network, image: np.ndarray) -> np.ndarray:
    """Predicted depth map in [0, 1] with the input's spatial dims."""
    return net.forward(_as_batch(image))[0, 0]


def predict_depth_batch(net: Network, images: np.ndarray, batch_size: int = 16) -> np.ndarray:
    images = np.asarray(images, dtype=np.float32)
    outs = []
    for start in range(0, len(images), batch_size):
        chunk = images[start : start + batch_size]
        outs.append(net.forward(chunk[:, None]) [:, 0])
    return np.concatenate(outs, axis=0)


def _as_batch(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 2:
        raise ShapeMismatch(f"expected a single (h, w) image, got {image.shape}")
    return image[None, None]


def train_depthnet(
    net: Network,
    images: np.ndarray,
    depths: np.ndarray,
    recipe: TrainRecipe,
    seed: int = 0,
    batch_size: int = 8,
) -> list[float]:
    """SGD on mean squared depth error; returns the per-epoch mean loss.

    The loss attaches to the network's linear output, one node before the
    clamp. With targets inside [0, 1] that is an upper bound on the clamped
    error, and unlike training through the clamp it cannot enter the
    absorbing state where every pixel saturates and all gradients vanish.
    The error term fed back is clipped to [-1, 1]; inside that band (which
    covers every in-range prediction) the update is exactly the mean
    squared error gradient, outside it the clip stops runaway transients.
    Inference (predict_depth) still goes through the clamp.
    """
    images = np.asarray(images, dtype=np.float32)
    depths = np.asarray(depths, dtype=np.float32)
    if len(images) == 0:
        raise EmptyDataset("no training samples")
    if images.shape != depths.shape:
        raise ShapeMismatch(f"images {images.shape} vs depths {depths.shape}")
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, 1 if recipe.stage == "finetune" else 0])
    )
    pre_output = net.tags["pre_output"]
    n = len(images)
    history: list[float] = []
    for _ in range(recipe.epochs):
        total = 0.0
        with np.errstate(over="ignore", invalid="ignore"):  # NaN check below
            for idx in minibatches(n, batch_size, rng):
                x = images[idx][:, None]
                y = depths[idx][:, None]
                pred = net.forward(x, upto=pre_output)
                loss, _ = mse_loss(pred, y)
                grad = (2.0 / pred.size) * np.clip(pred - y, -1.0, 1.0)
                net.zero_grads()
                net.backward(grad.astype(np.float32))
                sgd_step(net, recipe.learning_rate)
                total += loss * len(idx)
        mean = total / n
        if not np.isfinite(mean):
            raise DivergedNaN(f"{recipe.stage} loss diverged at epoch {len(history)}")
        history.append(mean)
    return history
