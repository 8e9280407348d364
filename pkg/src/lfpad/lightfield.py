"""Light-field data model, refocusing, and depth-from-focus.

Conventions used throughout:

* A light field stores samples as a dense ``(nu, nv, ns, nt, nc)`` float32
  array: two angular axes, two spatial axes, then channels. Angular
  resolutions are odd so a unique center view exists.
* Depth maps are 2D float arrays in ``[0, 1]`` where 0 is the farthest
  plane and 1 the nearest.
* Refocusing is shift-and-sum: each sub-aperture view is sampled at an
  offset proportional to its angular distance from the center view, then
  all views are averaged. Fractional offsets use bilinear interpolation
  with edge clamp, written in ``a + f*(b - a)`` form so constant images
  pass through bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import ShapeMismatch, WindowTooLarge

__all__ = [
    "ChannelLayout",
    "LightField",
    "RefocusStack",
    "refocus",
    "focus_measure",
    "depth_from_focus",
]


class ChannelLayout(IntEnum):
    """How the channel axis is interpreted."""

    LUMA_ONLY = 0  # all channels are color; luma = their mean
    LUMA_CONF = 1  # last channel is a per-sample confidence in [0, 1]


@dataclass(frozen=True)
class LightField:
    """Dense 5D light field with an explicit channel layout.

    The confidence channel (when present) is carried through encode/decode
    untouched but is ignored by refocusing and depth estimation.
    """

    samples: np.ndarray
    channel_layout: ChannelLayout = ChannelLayout.LUMA_ONLY

    def __post_init__(self):
        s = self.samples
        if s.ndim != 5:
            raise ShapeMismatch(f"samples must be 5D (nu, nv, ns, nt, nc), got {s.shape}")
        nu, nv, ns, nt, nc = s.shape
        if nu % 2 == 0 or nv % 2 == 0:
            raise ValueError(f"angular resolutions must be odd, got {nu}x{nv}")
        if nc < 1:
            raise ValueError("at least one channel required")
        if self.channel_layout == ChannelLayout.LUMA_CONF and nc < 2:
            raise ValueError("LUMA_CONF layout needs a color channel plus confidence")
        if not np.all(np.isfinite(s)):
            raise ValueError("light-field samples must be finite")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise ValueError("light-field samples must lie in [0, 1]")
        if s.dtype != np.float32:
            object.__setattr__(self, "samples", np.ascontiguousarray(s, dtype=np.float32))

    @property
    def nu(self) -> int:
        return self.samples.shape[0]

    @property
    def nv(self) -> int:
        return self.samples.shape[1]

    @property
    def ns(self) -> int:
        return self.samples.shape[2]

    @property
    def nt(self) -> int:
        return self.samples.shape[3]

    @property
    def nc(self) -> int:
        return self.samples.shape[4]

    @property
    def n_color_channels(self) -> int:
        if self.channel_layout == ChannelLayout.LUMA_CONF:
            return self.nc - 1
        return self.nc

    def subaperture_view(self, u: int, v: int) -> np.ndarray:
        """Luma image of the single view at angular position (u, v)."""
        if not (0 <= u < self.nu and 0 <= v < self.nv):
            raise IndexError(f"view ({u}, {v}) outside {self.nu}x{self.nv} angular grid")
        view = self.samples[u, v, :, :, : self.n_color_channels]
        return view.mean(axis=-1, dtype=np.float64)

    def center_view(self) -> np.ndarray:
        return self.subaperture_view(self.nu // 2, self.nv // 2)

    def confidence(self, u: int, v: int) -> np.ndarray | None:
        """Confidence plane of a view, or None for LUMA_ONLY fields."""
        if self.channel_layout != ChannelLayout.LUMA_CONF:
            return None
        if not (0 <= u < self.nu and 0 <= v < self.nv):
            raise IndexError(f"view ({u}, {v}) outside {self.nu}x{self.nv} angular grid")
        return self.samples[u, v, :, :, -1].astype(np.float64)


@dataclass(frozen=True)
class RefocusStack:
    """Refocused slices over a strictly increasing list of focus slopes."""

    alphas: tuple[float, ...]
    slices: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.alphas) != len(self.slices):
            raise ShapeMismatch("one slice per alpha required")
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("alphas must be strictly increasing")


def _sample_shifted(img: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """``img`` sampled at ``(i + dy, j + dx)``, bilinear with edge clamp.

    Interpolation uses lerp form so that when the four neighbours agree the
    result equals them exactly.
    """
    h, w = img.shape
    iy = int(np.floor(dy))
    ix = int(np.floor(dx))
    fy = dy - iy
    fx = dx - ix

    def gather(oy, ox):
        rows = np.clip(np.arange(h) + oy, 0, h - 1)
        cols = np.clip(np.arange(w) + ox, 0, w - 1)
        return img[np.ix_(rows, cols)]

    r00 = gather(iy, ix)
    r01 = gather(iy, ix + 1)
    r10 = gather(iy + 1, ix)
    r11 = gather(iy + 1, ix + 1)
    top = r00 + fx * (r01 - r00)
    bot = r10 + fx * (r11 - r10)
    return top + fy * (bot - top)


def refocus(lf: LightField, alpha: float) -> np.ndarray:
    """Shift-and-sum refocus at focus slope ``alpha``.

    output(s, t) = mean over (u, v) of luma(u, v, s + alpha*(u - u0),
    t + alpha*(v - v0)), bilinear with edge clamp; (u0, v0) is the center
    view. A scene plane whose views were warped with disparity d per
    angular step comes into focus at alpha = d.
    """
    u0 = lf.nu // 2
    v0 = lf.nv // 2
    acc = np.zeros((lf.ns, lf.nt), dtype=np.float64)
    for u in range(lf.nu):
        for v in range(lf.nv):
            view = lf.subaperture_view(u, v)
            acc += _sample_shifted(view, alpha * (u - u0), alpha * (v - v0))
    return acc / (lf.nu * lf.nv)


def refocus_stack(lf: LightField, alphas: Sequence[float]) -> RefocusStack:
    alphas = tuple(float(a) for a in alphas)
    return RefocusStack(alphas, tuple(refocus(lf, a) for a in alphas))


# 3x3 discrete Laplacian: 4-neighbour sum minus 4x center, replicated edges.
def _laplacian(img: np.ndarray) -> np.ndarray:
    p = np.pad(np.asarray(img, dtype=np.float64), 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * p[1:-1, 1:-1]


def focus_measure(image: np.ndarray, window: int) -> np.ndarray:
    """Per-pixel variance of the 3x3 Laplacian response within a window.

    ``window`` is the odd side length of the square neighbourhood. Both the
    Laplacian and the windowing replicate edges, so a constant image maps
    to an all-zero sharpness map. Output is nonnegative.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeMismatch(f"image must be 2D, got {img.shape}")
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    h, w = img.shape
    if window > h or window > w:
        raise WindowTooLarge(f"window {window} exceeds image dims {h}x{w}")

    lap = _laplacian(img)
    r = window // 2
    padded = np.pad(lap, r, mode="edge")
    # contiguous windows keep the reduction order equal to summing each
    # window slice directly, so results match a per-pixel recomputation
    win = np.ascontiguousarray(
        np.lib.stride_tricks.sliding_window_view(padded, (window, window))
    )
    n = float(window * window)
    m1 = win.sum(axis=(-2, -1)) / n
    m2 = (win * win).sum(axis=(-2, -1)) / n
    var = m2 - m1 * m1
    return np.maximum(var, 0.0)


def depth_from_focus(lf: LightField, alphas: Sequence[float], window: int) -> np.ndarray:
    """Depth map from the sharpest slice of a refocus stack.

    Per pixel, the focus slope maximizing the local sharpness is selected
    (ties break toward the smaller alpha) and mapped affinely from
    [alphas[0], alphas[-1]] onto [0, 1].
    """
    alphas = [float(a) for a in alphas]
    if len(alphas) < 2:
        raise ValueError("at least two alphas required")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    sharp = np.stack([focus_measure(refocus(lf, a), window) for a in alphas])
    best = np.argmax(sharp, axis=0)  # first max: smallest alpha wins ties
    scale = alphas[-1] - alphas[0]
    arr = np.asarray(alphas, dtype=np.float64)
    return (arr[best] - alphas[0]) / scale
