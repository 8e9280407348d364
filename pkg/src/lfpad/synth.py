"""Deterministic synthetic finger-dorsal scenes and their spoof counterparts.

Every sample starts from the same physical story: a finger is a textured
half-cylinder with sinusoidal knuckle ridges, photographed once. The real
class keeps that geometry; the spoof classes re-present the *photograph*
with new geometry:

* print / scan / mobile sit on a flat plane (zero depth everywhere),
* wrapped print keeps the smooth cylinder but loses the ridge bumps.

Appearance follows the same story. All five classes share the photographed
texture (band-limited noise with darkened ridge lines and the original
Lambertian shading baked in); attacks then apply weak presentation cues:
contrast compression for print-based attacks, extra shading for the wrap,
blur plus sensor noise for the scan, and a faint screen-pixel grid for the
mobile display. Depth, not texture, stays the dominant discriminant.

Sub-aperture views are backward warps of the appearance image with
disparity ``DISPARITY_PER_DEPTH * depth`` pixels per angular step, so a
plane at depth d comes into focus at slope alpha = DISPARITY_PER_DEPTH * d.
All randomness flows from explicit seeds; rendering the same spec twice is
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import DimsTooSmall
from .lightfield import ChannelLayout, LightField

__all__ = [
    "AttackClass",
    "SceneSpec",
    "LabeledSample",
    "DatasetItem",
    "heightfield",
    "render_lightfield",
    "make_dataset",
    "make_generic_depth_corpus",
    "make_generic_shape_corpus",
    "DISPARITY_PER_DEPTH",
]

# Disparity in pixels per unit depth per angular step; keeps view shifts in
# the sub-pixel-to-few-pixel range at desk-scale dimensions.
DISPARITY_PER_DEPTH = 1.5

# Height-to-pixel conversion used only for shading normals.
RELIEF_SCALE_PX = 16.0

# Appearance-cue strengths. Weak enough that geometry stays the dominant
# discriminant, strong enough to be learnable at desk scale.
CONTRAST_COMPRESSION = 0.35  # print/scan/wrap: a' = 0.5 + c*(a - 0.5) - dimming
PRINT_DIMMING = 0.06  # reproduced prints lose a little brightness
RIDGE_DARKENING = 0.30
SCAN_BLUR_SIGMA = 1.0
SCAN_NOISE_STD = 0.008
GRID_AMPLITUDE = 0.07
GRID_PERIOD = 4
HALFTONE_AMPLITUDE = 0.1
HALFTONE_PERIOD = 4
MOIRE_AMPLITUDE = 0.05
MOIRE_PERIOD = 6

CYLINDER_HEIGHT = 0.5  # peak of the half-cylinder profile in depth units

# Nearer surfaces receive more light: luma scales by (1-A) + A*depth.
# Strong enough that local brightness carries absolute depth once the
# band-limited texture is averaged out.
DISTANCE_ATTENUATION = 0.5


class AttackClass(IntEnum):
    REAL = 0
    PRINT = 1
    WRAPPED_PRINT = 2
    SCAN = 3
    MOBILE = 4

    @property
    def is_spoof(self) -> bool:
        return self is not AttackClass.REAL

    @property
    def label_name(self) -> str:
        return self.name.lower()


CLASS_NAMES = tuple(c.label_name for c in AttackClass)
NAME_TO_CLASS = {c.label_name: c for c in AttackClass}


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one capture of one subject under one attack class.

    ``center_offset`` slides the finger axis off-center (normalized units)
    and ``transpose`` flips the finger from vertical to horizontal, so the
    corpus carries pose variation that per-pixel priors cannot absorb.
    """

    subject_id: int
    attack: AttackClass
    base_radius: float = 0.8
    ridge_count: int = 4
    ridge_amplitude: float = 0.25
    texture_seed: int = 0
    noise_level: float = 0.0
    center_offset: float = 0.0
    transpose: bool = False
    ramp_slope: float = 0.0
    ramp_dir: int = 0  # 0..3: desk recedes toward +col, -col, +row, -row

    def __post_init__(self):
        if not 0.0 < self.base_radius <= 1.0:
            raise ValueError(f"base_radius must be in (0, 1], got {self.base_radius}")
        if not 0.0 <= self.ridge_amplitude <= 0.5:
            raise ValueError(f"ridge_amplitude must be in [0, 0.5], got {self.ridge_amplitude}")
        if not 0.0 <= self.noise_level <= 0.1:
            raise ValueError(f"noise_level must be in [0, 0.1], got {self.noise_level}")
        if self.ridge_count < 1:
            raise ValueError("ridge_count must be >= 1")
        if not -0.5 <= self.center_offset <= 0.5:
            raise ValueError(f"center_offset must be in [-0.5, 0.5], got {self.center_offset}")
        if not 0.0 <= self.ramp_slope <= 0.2:
            raise ValueError(f"ramp_slope must be in [0, 0.2], got {self.ramp_slope}")
        if self.ramp_dir not in (0, 1, 2, 3):
            raise ValueError(f"ramp_dir must be 0..3, got {self.ramp_dir}")


@dataclass(frozen=True)
class LabeledSample:
    """One training/evaluation record: center view, analytic depth, label."""

    image: np.ndarray
    depth_gt: np.ndarray
    label: AttackClass
    subject_id: int

    def __post_init__(self):
        if self.image.shape != self.depth_gt.shape:
            raise ValueError("image and depth_gt must share dimensions")


@dataclass(frozen=True)
class DatasetItem:
    """A rendered capture: the full light field plus its labeled sample."""

    spec: SceneSpec
    lightfield: LightField
    sample: LabeledSample
    variant: int


def _check_dims(h: int, w: int) -> None:
    if h < 16 or w < 16:
        raise DimsTooSmall(f"need at least 16x16, got {h}x{w}")


def _cylinder_profile(w: int, base_radius: float, center: float = 0.0) -> np.ndarray:
    x = np.linspace(-1.0, 1.0, w) - center
    r = base_radius
    return CYLINDER_HEIGHT * np.sqrt(np.maximum(r * r - x * x, 0.0)) / r


def _ridge_pattern(
    h: int, w: int, ridge_count: int, base_radius: float, center: float = 0.0
) -> np.ndarray:
    """Unit-amplitude ridge bumps: raised cosine along the finger axis,
    masked by the cylinder footprint so bumps fade at the silhouette."""
    y = np.linspace(-1.0, 1.0, h)
    profile = 0.5 * (1.0 - np.cos(np.pi * ridge_count * (y + 1.0)))
    mask = _cylinder_profile(w, base_radius, center) / CYLINDER_HEIGHT
    return profile[:, None] * mask[None, :]


def _posed(arr: np.ndarray, spec: SceneSpec) -> np.ndarray:
    return arr.T.copy() if spec.transpose else arr


def _posed_ridge_pattern(spec: SceneSpec, h: int, w: int) -> np.ndarray:
    ph, pw = (w, h) if spec.transpose else (h, w)
    pat = _ridge_pattern(ph, pw, spec.ridge_count, spec.base_radius, spec.center_offset)
    return _posed(pat, spec)


def _posed_crease_pattern(spec: SceneSpec, h: int, w: int) -> np.ndarray:
    """Dark knuckle creases: the valleys between ridge bumps, inside the
    cylinder footprint."""
    ph, pw = (w, h) if spec.transpose else (h, w)
    y = np.linspace(-1.0, 1.0, ph)
    valleys = 0.5 * (1.0 + np.cos(np.pi * spec.ridge_count * (y + 1.0)))
    mask = _cylinder_profile(pw, spec.base_radius, spec.center_offset) / CYLINDER_HEIGHT
    return _posed(valleys[:, None] * mask[None, :], spec)


def _desk_ramp(spec: SceneSpec, h: int, w: int) -> np.ndarray:
    """Depth of the supporting surface: a gentle plane rising toward one edge."""
    if spec.ramp_slope == 0.0:
        return np.zeros((h, w), dtype=np.float64)
    axis = np.linspace(0.0, spec.ramp_slope, w if spec.ramp_dir < 2 else h)
    if spec.ramp_dir in (1, 3):
        axis = axis[::-1]
    return np.broadcast_to(
        axis[None, :] if spec.ramp_dir < 2 else axis[:, None], (h, w)
    ).copy()


def heightfield(spec: SceneSpec, h: int, w: int) -> np.ndarray:
    """Analytic depth map of the scene, values in [0, 1] (1 = nearest).

    Real: desk ramp plus half-cylinder plus ridge bumps. Wrapped print: the
    same ramp and cylinder without bumps. Print, scan, and mobile are flat
    reproductions at the reference plane.
    """
    _check_dims(h, w)
    if spec.attack in (AttackClass.PRINT, AttackClass.SCAN, AttackClass.MOBILE):
        return np.zeros((h, w), dtype=np.float64)
    ph, pw = (w, h) if spec.transpose else (h, w)
    cylinder = _posed(
        np.broadcast_to(
            _cylinder_profile(pw, spec.base_radius, spec.center_offset), (ph, pw)
        ).copy(),
        spec,
    ) + _desk_ramp(spec, h, w)
    if spec.attack is AttackClass.WRAPPED_PRINT:
        return cylinder
    return cylinder + spec.ridge_amplitude * _posed_ridge_pattern(spec, h, w)


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge-replicated borders."""
    if sigma <= 0:
        return np.asarray(img, dtype=np.float64).copy()
    radius = max(1, int(np.ceil(3.0 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (t / sigma) ** 2)
    kernel /= kernel.sum()
    out = np.asarray(img, dtype=np.float64)
    for axis in (0, 1):
        moved = np.moveaxis(out, axis, 0)
        padded = np.pad(moved, [(radius, radius)] + [(0, 0)] * (moved.ndim - 1), mode="edge")
        acc = np.zeros_like(moved)
        for k, wgt in enumerate(kernel):
            acc += wgt * padded[k : k + moved.shape[0]]
        out = np.moveaxis(acc, 0, axis)
    return out


def _lambert_shading(hf: np.ndarray) -> np.ndarray:
    """Shading of a heightfield lit from straight above."""
    gy, gx = np.gradient(hf * RELIEF_SCALE_PX)
    return 1.0 / np.sqrt(1.0 + gy * gy + gx * gx)


def _light_transport(texture: np.ndarray, hf: np.ndarray) -> np.ndarray:
    """Surface luma: texture under Lambert shading plus distance attenuation."""
    falloff = (1.0 - DISTANCE_ATTENUATION) + DISTANCE_ATTENUATION * hf
    return texture * _lambert_shading(hf) * falloff


def _band_limited_texture(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((h, w))
    smooth = gaussian_blur(noise, 1.2)
    peak = np.abs(smooth).max()
    if peak > 0:
        smooth = smooth / peak
    return 0.62 + 0.28 * smooth


def _compress(app: np.ndarray) -> np.ndarray:
    return 0.5 + CONTRAST_COMPRESSION * (app - 0.5) - PRINT_DIMMING


def _grid_pattern(h: int, w: int) -> np.ndarray:
    rows = (np.arange(h) % GRID_PERIOD == 0)[:, None]
    cols = (np.arange(w) % GRID_PERIOD == 0)[None, :]
    return (rows | cols).astype(np.float64)


def _halftone_pattern(h: int, w: int) -> np.ndarray:
    """Dot raster left by the printing process."""
    i = np.arange(h)[:, None]
    j = np.arange(w)[None, :]
    return ((i % HALFTONE_PERIOD == 1) & (j % HALFTONE_PERIOD == 1)).astype(np.float64)


def _moire_pattern(h: int, w: int) -> np.ndarray:
    """Low-frequency diagonal interference left by rescanning a print."""
    i = np.arange(h)[:, None]
    j = np.arange(w)[None, :]
    return 0.5 * (1.0 + np.sin(2.0 * np.pi * (i + j) / MOIRE_PERIOD))


def _printed(photo: np.ndarray) -> np.ndarray:
    """A photo reproduced on paper: compressed contrast plus halftone."""
    h, w = photo.shape
    return _compress(photo) - HALFTONE_AMPLITUDE * _halftone_pattern(h, w)


def _appearance(spec: SceneSpec, h: int, w: int) -> np.ndarray:
    """Center-view luma for the scene, in [0, 1]."""
    tex_rng = np.random.default_rng(np.random.SeedSequence([spec.texture_seed, 0]))
    texture = _band_limited_texture(h, w, tex_rng)
    texture *= 1.0 - RIDGE_DARKENING * _posed_crease_pattern(spec, h, w)

    # What the original camera saw: the live finger, regardless of attack.
    real_hf = heightfield(replace(spec, attack=AttackClass.REAL), h, w)
    photographed = _light_transport(texture, real_hf)

    attack = spec.attack
    if attack is AttackClass.REAL:
        app = photographed
    elif attack is AttackClass.PRINT:
        app = _printed(photographed)
    elif attack is AttackClass.WRAPPED_PRINT:
        # the wrapped sheet re-lights the printed photo with its own shape
        wrap_hf = heightfield(spec, h, w)
        app = _light_transport(_printed(photographed), wrap_hf)
    elif attack is AttackClass.SCAN:
        app = gaussian_blur(_printed(photographed), SCAN_BLUR_SIGMA)
        app = app - MOIRE_AMPLITUDE * _moire_pattern(h, w)
        scan_rng = np.random.default_rng(np.random.SeedSequence([spec.texture_seed, 1]))
        app = app + scan_rng.normal(0.0, SCAN_NOISE_STD, size=app.shape)
    elif attack is AttackClass.MOBILE:
        app = photographed + GRID_AMPLITUDE * _grid_pattern(h, w)
    else:  # pragma: no cover
        raise ValueError(f"unknown attack {attack}")

    if spec.noise_level > 0:
        noise_rng = np.random.default_rng(
            np.random.SeedSequence([spec.texture_seed, 2, int(attack)])
        )
        app = app + noise_rng.normal(0.0, spec.noise_level, size=app.shape)
    return np.clip(app, 0.0, 1.0)


def warp_image(img: np.ndarray, dy: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Backward warp: out[i, j] = img sampled at (i + dy[i,j], j + dx[i,j]).

    Bilinear interpolation with edge clamp, lerp form (exact on zero shift).
    """
    h, w = img.shape
    yy = np.arange(h)[:, None] + dy
    xx = np.arange(w)[None, :] + dx
    y0 = np.floor(yy).astype(np.int64)
    x0 = np.floor(xx).astype(np.int64)
    fy = yy - y0
    fx = xx - x0
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    r00 = img[y0c, x0c]
    r01 = img[y0c, x1c]
    r10 = img[y1c, x0c]
    r11 = img[y1c, x1c]
    top = r00 + fx * (r01 - r00)
    bot = r10 + fx * (r11 - r10)
    return top + fy * (bot - top)


def render_views(appearance: np.ndarray, depth: np.ndarray, nu: int, nv: int) -> np.ndarray:
    """All sub-aperture views of a scene as a (nu, nv, h, w) array.

    View (u, v) is the appearance image warped by disparity
    DISPARITY_PER_DEPTH * depth * (u - u0, v - v0) pixels.
    """
    if nu % 2 == 0 or nv % 2 == 0:
        raise ValueError("angular resolutions must be odd")
    h, w = appearance.shape
    u0, v0 = nu // 2, nv // 2
    disparity = DISPARITY_PER_DEPTH * depth
    views = np.empty((nu, nv, h, w), dtype=np.float64)
    for u in range(nu):
        for v in range(nv):
            if u == u0 and v == v0:
                views[u, v] = appearance
            else:
                views[u, v] = warp_image(
                    appearance, -disparity * (u - u0), -disparity * (v - v0)
                )
    return views


def render_lightfield(
    spec: SceneSpec, nu: int, nv: int, ns: int, nt: int
) -> tuple[LightField, np.ndarray]:
    """Render a scene to a light field plus its analytic depth map."""
    _check_dims(ns, nt)
    depth = heightfield(spec, ns, nt)
    app = _appearance(spec, ns, nt)
    views = render_views(app, depth, nu, nv)
    samples = np.clip(views, 0.0, 1.0).astype(np.float32)[..., None]
    return LightField(samples, ChannelLayout.LUMA_ONLY), depth


def _draw_capture_params(master_seed: int, subject: int, variant: int,
                         h: int = 64, w: int = 64):
    """Scene parameters in pixel terms: the finger keeps a ~9-15 px radius
    and a ~5-10 px ridge period whatever the canvas size, so the geometry
    sits at a fixed feature scale for the depth network."""
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, subject, variant]))
    radius_px = float(rng.uniform(9.0, 15.0))
    base_radius = float(np.clip(radius_px / (w / 2.0), 0.05, 0.95))
    max_offset = float(np.clip(0.95 - base_radius, 0.05, 0.4))
    ridge_period_px = float(rng.uniform(5.5, 10.5))
    ridge_count = max(3, int(round(h / ridge_period_px)))
    return dict(
        base_radius=base_radius,
        ridge_count=ridge_count,
        ridge_amplitude=float(rng.uniform(0.18, 0.3)),
        texture_seed=int(rng.integers(0, 2**31 - 1)),
        noise_level=float(rng.uniform(0.004, 0.02)),
        center_offset=float(rng.uniform(-max_offset, max_offset)),
        transpose=bool(rng.random() < 0.5),
        ramp_slope=float(rng.uniform(0.05, 0.15)),
        ramp_dir=int(rng.integers(0, 4)),
    )


def make_dataset(
    n_subjects: int,
    variants_per_subject: int,
    dims: tuple[int, int, int, int],
    master_seed: int,
) -> list[DatasetItem]:
    """Generate the full labeled corpus: five classes per capture.

    Each (subject, variant) capture draws its scene parameters from a
    stream derived from the master seed, then renders one real sample and
    one sample per attack class sharing those parameters. Ground-truth
    depth is the analytic heightfield.
    """
    if n_subjects < 2:
        raise ValueError("need at least 2 subjects")
    nu, nv, ns, nt = dims
    items: list[DatasetItem] = []
    for subject in range(n_subjects):
        for variant in range(variants_per_subject):
            params = _draw_capture_params(master_seed, subject, variant, ns, nt)
            for attack in AttackClass:
                spec = SceneSpec(subject_id=subject, attack=attack, **params)
                lf, depth = render_lightfield(spec, nu, nv, ns, nt)
                sample = LabeledSample(
                    image=lf.center_view(), depth_gt=depth, label=attack, subject_id=subject
                )
                items.append(DatasetItem(spec, lf, sample, variant))
    return items


def _random_smooth_surface(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    # fixed ~4 px feature scale regardless of canvas size
    rough = rng.standard_normal((h, w))
    hf = gaussian_blur(rough, 4.0)
    lo, hi = hf.min(), hf.max()
    hf = (hf - lo) / (hi - lo) if hi > lo else np.zeros_like(hf)
    return hf * float(rng.uniform(0.4, 1.0))


def _random_corrugated_surface(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    base = _random_smooth_surface(h, w, rng) * 0.6
    amp = float(rng.uniform(0.1, 0.35))
    period_px = float(rng.uniform(6.0, 14.0))
    phase = float(rng.uniform(0, 2 * np.pi))
    along_rows = rng.random() < 0.5
    n = h if along_rows else w
    axis = np.arange(n, dtype=np.float64)
    wave = 0.5 * (1.0 - np.cos(2.0 * np.pi * axis / period_px + phase))
    bumps = wave[:, None] if along_rows else wave[None, :]
    return np.clip(base + amp * bumps, 0.0, 1.0)


def make_generic_depth_corpus(
    n: int, h: int, w: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Generic textured scenes for the depth-regression pretrain stage.

    Five scene families cycle: a flat plane, a corrugated surface, a smooth
    random surface, a flat *photograph* of a surface (contrast-compressed,
    sometimes rescanned blurry or re-draped over a fresh surface), and a
    surface shown on a flat screen (pixel grid). Photograph families carry
    surface-like appearance with flat (or re-draped) geometry, so the stage
    teaches both shading-to-depth reading and the contrast gate that
    separates live relief from reproductions. Returns (images, depths),
    each (n, h, w) in [0, 1].
    """
    _check_dims(h, w)
    images = np.empty((n, h, w), dtype=np.float64)
    depths = np.empty((n, h, w), dtype=np.float64)
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        family = i % 5
        texture = _band_limited_texture(h, w, rng)
        if family == 0:
            hf = np.zeros((h, w))
            img = _light_transport(texture, hf)
        elif family == 1:
            hf = _random_corrugated_surface(h, w, rng)
            img = _light_transport(texture, hf)
        elif family == 2:
            hf = _random_smooth_surface(h, w, rng)
            img = _light_transport(texture, hf)
        elif family == 3:
            src = (
                _random_corrugated_surface(h, w, rng)
                if rng.random() < 0.5
                else _random_smooth_surface(h, w, rng)
            )
            photo = _printed(_light_transport(texture, src))
            style = rng.random()
            if style < 0.4:
                hf = np.zeros((h, w))
                img = photo
            elif style < 0.7:  # rescanned print: blurred flat photo + moire
                hf = np.zeros((h, w))
                img = gaussian_blur(photo, SCAN_BLUR_SIGMA)
                img = img - MOIRE_AMPLITUDE * _moire_pattern(h, w)
            else:  # photo draped over a fresh surface
                hf = _random_smooth_surface(h, w, rng)
                img = _light_transport(photo, hf)
        else:
            src = _random_smooth_surface(h, w, rng)
            hf = np.zeros((h, w))
            img = _light_transport(texture, src) + GRID_AMPLITUDE * _grid_pattern(h, w)
        img = img + rng.normal(0.0, 0.01, size=(h, w))
        images[i] = np.clip(img, 0.0, 1.0)
        depths[i] = hf
    return images, depths


def make_generic_shape_corpus(
    n: int, h: int, w: int, seed: int, n_classes: int = 5
) -> tuple[np.ndarray, np.ndarray]:
    """Depth-map-like images of coarse shape categories for backbone pretraining.

    Categories cycle through: flat plane, cylinder, ridged cylinder,
    two-plane step, smooth blobs. Returns (images (n,h,w) in [0,1],
    labels (n,) int). Requires 4 <= n_classes <= 5.
    """
    if not 4 <= n_classes <= 5:
        raise ValueError("n_classes must be 4 or 5")
    _check_dims(h, w)
    images = np.empty((n, h, w), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        cls = i % n_classes
        radius = float(rng.uniform(0.5, 0.95))
        if cls == 0:
            img = np.full((h, w), float(rng.uniform(0.0, 0.2)))
        elif cls == 1:
            img = np.broadcast_to(_cylinder_profile(w, radius), (h, w)).copy()
        elif cls == 2:
            amp = float(rng.uniform(0.15, 0.4))
            count = int(rng.integers(3, 7))
            img = np.broadcast_to(_cylinder_profile(w, radius), (h, w)).copy()
            img = img + amp * _ridge_pattern(h, w, count, radius)
        elif cls == 3:
            split = int(rng.integers(w // 4, 3 * w // 4))
            lo, hi = sorted(rng.uniform(0.0, 1.0, size=2))
            img = np.full((h, w), lo)
            img[:, split:] = hi
        else:
            blobs = gaussian_blur(rng.standard_normal((h, w)), h / 6.0)
            lo_, hi_ = blobs.min(), blobs.max()
            img = (blobs - lo_) / (hi_ - lo_) if hi_ > lo_ else np.zeros((h, w))
        img = np.clip(img + rng.normal(0.0, 0.01, size=(h, w)), 0.0, 1.0)
        images[i] = img
        labels[i] = cls
    return images, labels
