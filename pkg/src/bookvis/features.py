"""Image decoding and scale/rotation-invariant local descriptors.

Cover photos arrive as PNG/JPEG bytes, get decoded to RGB rasters, and are
reduced to sets of 128-d gradient-histogram descriptors anchored at
difference-of-Gaussians keypoints. The pipeline is deterministic: identical
bytes and parameters produce bit-identical descriptor sets, which is what
makes index builds and golden-file tests reproducible.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, asdict

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DecodeError, ImageTooLargeError

MAX_DECODE_SIDE = 8192
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

# descriptor geometry: 4x4 spatial grid x 8 orientation bins = 128 components
DESC_GRID = 4
DESC_ORI_BINS = 8
DESC_SIZE = DESC_GRID * DESC_GRID * DESC_ORI_BINS
_DESC_SCALE_MULT = 3.0          # histogram cell width in units of keypoint scale
_ORI_SIGMA_FACTOR = 1.5         # orientation window sigma relative to scale
_ORI_RADIUS_FACTOR = 3.0        # orientation window radius in sigmas
_BORDER = 5                     # ignore extrema this close to the frame
_MAX_REFINE_STEPS = 5


@dataclass(frozen=True)
class RasterImage:
    """Decoded RGB raster, 8 bits per channel."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8


@dataclass(frozen=True)
class FeatureParams:
    """Every tunable of the descriptor pipeline, with working defaults.

    Serializable so an index manifest can pin the exact extraction setup.
    """

    octaves: int = 3
    scales_per_octave: int = 3
    base_sigma: float = 1.6
    assumed_blur: float = 0.5
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    orientation_bins: int = 36
    peak_ratio: float = 0.8
    descriptor_clip: float = 0.2
    max_extraction_dim: int = 1024

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureParams":
        return cls(**obj)


@dataclass(frozen=True)
class Keypoint:
    x: float            # sub-pixel column in source-image coordinates
    y: float            # sub-pixel row
    scale: float        # detection scale in source-image pixels, > 0
    orientation: float  # radians in [0, 2*pi)


@dataclass(frozen=True)
class Descriptor:
    vector: np.ndarray  # (128,) float32, L2 norm 1
    keypoint: Keypoint


class DescriptorSet:
    """All descriptors of one image. May be empty (featureless input)."""

    def __init__(self, vectors: np.ndarray, keypoints: list[Keypoint],
                 source_dims: tuple[int, int]):
        self.vectors = np.asarray(vectors, dtype=np.float32).reshape(-1, DESC_SIZE)
        self.keypoints = keypoints
        self.source_dims = source_dims

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def descriptors(self) -> list[Descriptor]:
        return [Descriptor(vector=self.vectors[i], keypoint=kp)
                for i, kp in enumerate(self.keypoints)]

    @classmethod
    def empty(cls, source_dims: tuple[int, int]) -> "DescriptorSet":
        return cls(np.zeros((0, DESC_SIZE), dtype=np.float32), [], source_dims)


def decode_image(data: bytes) -> RasterImage:
    """Decode PNG or JPEG bytes into an RGB raster.

    Grayscale sources are expanded to three channels. Corrupt or truncated
    input raises DecodeError; anything over 8192 px on a side raises
    ImageTooLargeError before the pixel data is touched.
    """
    try:
        img = Image.open(io.BytesIO(data))
        width, height = img.size
    except Exception as exc:
        raise DecodeError(f"not a decodable image: {exc}") from exc
    if width > MAX_DECODE_SIDE or height > MAX_DECODE_SIDE:
        raise ImageTooLargeError(f"{width}x{height} exceeds {MAX_DECODE_SIDE} px per side")
    try:
        img.load()
        rgb = img.convert("RGB")
    except Exception as exc:
        raise DecodeError(f"corrupt image data: {exc}") from exc
    pixels = np.asarray(rgb, dtype=np.uint8)
    return RasterImage(width=width, height=height, pixels=pixels)


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Rec.601 luma in [0, 1] as float64."""
    w = np.asarray(GRAY_WEIGHTS, dtype=np.float64)
    return (pixels.astype(np.float64) @ w) / 255.0


# ---------------------------------------------------------------------------
# scale space


def _build_scale_space(gray: np.ndarray, p: FeatureParams):
    """Gaussian pyramid and DoG stacks, one entry per octave."""
    s = p.scales_per_octave
    k = 2.0 ** (1.0 / s)
    n_img = s + 3
    total = [p.base_sigma * (k ** i) for i in range(n_img)]
    increments = [math.sqrt(max(total[i] ** 2 - total[i - 1] ** 2, 1e-8))
                  for i in range(1, n_img)]

    base_blur = math.sqrt(max(p.base_sigma ** 2 - p.assumed_blur ** 2, 0.01))
    base = ndimage.gaussian_filter(gray.astype(np.float32), base_blur)

    gaussians, dogs = [], []
    for _ in range(p.octaves):
        imgs = [base]
        for inc in increments:
            imgs.append(ndimage.gaussian_filter(imgs[-1], inc))
        stack = np.stack(imgs)
        gaussians.append(stack)
        dogs.append(stack[1:] - stack[:-1])
        base = imgs[s][::2, ::2]
        if min(base.shape) < 2 * _BORDER + 3:
            break
    return gaussians, dogs


def _window3_reduce(arr: np.ndarray, op) -> np.ndarray:
    """Reduce over every 3x3 spatial window; output loses a 1-px rim."""
    rows = op(op(arr[:-2], arr[1:-1]), arr[2:])
    return op(op(rows[:, :-2], rows[:, 1:-1]), rows[:, 2:])


def _find_extrema(dog: np.ndarray, pre_threshold: float) -> np.ndarray:
    """Integer (layer, row, col) candidates that are 26-neighborhood extrema."""
    n_layers = dog.shape[0]
    out = []
    for layer in range(1, n_layers - 1):
        cube_max = np.maximum(np.maximum(dog[layer - 1], dog[layer]), dog[layer + 1])
        cube_min = np.minimum(np.minimum(dog[layer - 1], dog[layer]), dog[layer + 1])
        win_max = _window3_reduce(cube_max, np.maximum)
        win_min = _window3_reduce(cube_min, np.minimum)
        c = dog[layer][1:-1, 1:-1]
        mask = (np.abs(c) > pre_threshold) & ((c == win_max) | (c == win_min))
        mask[: _BORDER - 1, :] = False
        mask[-(_BORDER - 1):, :] = False
        mask[:, : _BORDER - 1] = False
        mask[:, -(_BORDER - 1):] = False
        rows, cols = np.nonzero(mask)
        if rows.size:
            out.append(np.stack([np.full(rows.size, layer), rows + 1, cols + 1], axis=1))
    if not out:
        return np.zeros((0, 3), dtype=np.int64)
    return np.concatenate(out)


def _refine_extremum(dog: np.ndarray, layer: int, i: int, j: int, p: FeatureParams):
    """Quadratic sub-pixel refinement; returns (layer, i, j, offset, value) or None."""
    s = p.scales_per_octave
    n_layers, h, w = dog.shape
    for _ in range(_MAX_REFINE_STEPS):
        d = dog
        c = d[layer, i, j]
        gx = 0.5 * (d[layer, i, j + 1] - d[layer, i, j - 1])
        gy = 0.5 * (d[layer, i + 1, j] - d[layer, i - 1, j])
        gs = 0.5 * (d[layer + 1, i, j] - d[layer - 1, i, j])
        dxx = d[layer, i, j + 1] - 2 * c + d[layer, i, j - 1]
        dyy = d[layer, i + 1, j] - 2 * c + d[layer, i - 1, j]
        dss = d[layer + 1, i, j] - 2 * c + d[layer - 1, i, j]
        dxy = 0.25 * (d[layer, i + 1, j + 1] - d[layer, i + 1, j - 1]
                      - d[layer, i - 1, j + 1] + d[layer, i - 1, j - 1])
        dxs = 0.25 * (d[layer + 1, i, j + 1] - d[layer + 1, i, j - 1]
                      - d[layer - 1, i, j + 1] + d[layer - 1, i, j - 1])
        dys = 0.25 * (d[layer + 1, i + 1, j] - d[layer + 1, i - 1, j]
                      - d[layer - 1, i + 1, j] + d[layer - 1, i - 1, j])
        grad = np.array([gx, gy, gs])
        hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            value = c + 0.5 * float(grad @ offset)
            if abs(value) * s < p.contrast_threshold:
                return None
            # reject edge-like responses via the 2x2 spatial Hessian
            tr = dxx + dyy
            det = dxx * dyy - dxy * dxy
            r = p.edge_ratio
            if det <= 0 or r * tr * tr >= (r + 1) ** 2 * det:
                return None
            return layer, i, j, offset, value
        j += int(round(offset[0]))
        i += int(round(offset[1]))
        layer += int(round(offset[2]))
        if not (1 <= layer <= s and _BORDER <= i < h - _BORDER and _BORDER <= j < w - _BORDER):
            return None
    return None


# ---------------------------------------------------------------------------
# orientation and descriptor


class _GradientCache:
    """Per (octave, layer) gradient fields, computed on first use."""

    def __init__(self, gaussians):
        self.gaussians = gaussians
        self._cache = {}

    def get(self, octave: int, layer: int):
        key = (octave, layer)
        if key not in self._cache:
            g = self.gaussians[octave][layer]
            dx = np.zeros_like(g)
            dy = np.zeros_like(g)
            dx[:, 1:-1] = g[:, 2:] - g[:, :-2]
            dy[1:-1, :] = g[:-2, :] - g[2:, :]   # y axis points up
            mag = np.sqrt(dx * dx + dy * dy)
            ang = np.rad2deg(np.arctan2(dy, dx)) % 360.0
            self._cache[key] = (mag, ang)
        return self._cache[key]


def _orientation_angles(grads: _GradientCache, octave: int, layer: int,
                        i: float, j: float, sigma_oct: float, p: FeatureParams) -> list[float]:
    """Dominant gradient directions (degrees); peaks >= peak_ratio of max."""
    mag, ang = grads.get(octave, layer)
    h, w = mag.shape
    ci, cj = int(round(i)), int(round(j))
    sigma = _ORI_SIGMA_FACTOR * sigma_oct
    radius = int(round(_ORI_RADIUS_FACTOR * sigma))
    r0, r1 = max(ci - radius, 1), min(ci + radius + 1, h - 1)
    c0, c1 = max(cj - radius, 1), min(cj + radius + 1, w - 1)
    if r0 >= r1 or c0 >= c1:
        return []
    rows = np.arange(r0, r1)
    cols = np.arange(c0, c1)
    dr = (rows - ci)[:, None]
    dc = (cols - cj)[None, :]
    weight = np.exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma))
    m = mag[r0:r1, c0:c1] * weight
    a = ang[r0:r1, c0:c1]
    n_bins = p.orientation_bins
    bins = np.round(a * n_bins / 360.0).astype(np.int64) % n_bins
    raw = np.bincount(bins.ravel(), weights=m.ravel(), minlength=n_bins)

    idx = np.arange(n_bins)
    smooth = (6 * raw
              + 4 * (raw[(idx - 1) % n_bins] + raw[(idx + 1) % n_bins])
              + raw[(idx - 2) % n_bins] + raw[(idx + 2) % n_bins]) / 16.0
    peak_floor = p.peak_ratio * smooth.max()
    if peak_floor <= 0:
        return []
    left = smooth[(idx - 1) % n_bins]
    right = smooth[(idx + 1) % n_bins]
    peaks = np.nonzero((smooth > left) & (smooth > right) & (smooth >= peak_floor))[0]
    out = []
    for pk in peaks:
        l, c, r = left[pk], smooth[pk], right[pk]
        interp = (pk + 0.5 * (l - r) / (l - 2 * c + r)) % n_bins
        angle = 360.0 - interp * 360.0 / n_bins
        if abs(angle - 360.0) < 1e-7:
            angle = 0.0
        out.append(angle)
    return out


def _compute_descriptor(grads: _GradientCache, octave: int, layer: int,
                        i: float, j: float, sigma_oct: float, angle_deg: float,
                        p: FeatureParams) -> np.ndarray | None:
    """128-d gradient histogram with trilinear interpolation and clipping."""
    mag, ang = grads.get(octave, layer)
    h, w = mag.shape
    ci, cj = int(round(i)), int(round(j))
    rot_deg = 360.0 - angle_deg
    cos_a = math.cos(math.radians(rot_deg))
    sin_a = math.sin(math.radians(rot_deg))
    bins_per_deg = DESC_ORI_BINS / 360.0
    weight_mult = -0.5 / ((0.5 * DESC_GRID) ** 2)
    hist_width = _DESC_SCALE_MULT * sigma_oct
    half = int(round(hist_width * math.sqrt(2) * (DESC_GRID + 1) * 0.5))
    half = min(half, int(math.sqrt(h ** 2 + w ** 2)))

    r0, r1 = max(ci - half, 1), min(ci + half + 1, h - 1)
    c0, c1 = max(cj - half, 1), min(cj + half + 1, w - 1)
    if r0 >= r1 or c0 >= c1:
        return None
    rr = (np.arange(r0, r1) - ci)[:, None].astype(np.float64)
    cc = (np.arange(c0, c1) - cj)[None, :].astype(np.float64)
    col_rot = cc * cos_a - rr * sin_a
    row_rot = cc * sin_a + rr * cos_a
    row_bin = row_rot / hist_width + 0.5 * DESC_GRID - 0.5
    col_bin = col_rot / hist_width + 0.5 * DESC_GRID - 0.5
    valid = (row_bin > -1) & (row_bin < DESC_GRID) & (col_bin > -1) & (col_bin < DESC_GRID)
    if not np.any(valid):
        return None

    row_bin = row_bin[valid]
    col_bin = col_bin[valid]
    m = mag[r0:r1, c0:c1][valid]
    a = ang[r0:r1, c0:c1][valid]
    gw = np.exp(weight_mult * ((row_rot[valid] / hist_width) ** 2
                               + (col_rot[valid] / hist_width) ** 2))
    values = m * gw
    ori_bin = ((a - rot_deg) * bins_per_deg) % DESC_ORI_BINS

    rb0 = np.floor(row_bin).astype(np.int64)
    cb0 = np.floor(col_bin).astype(np.int64)
    ob0 = np.floor(ori_bin).astype(np.int64)
    rf = row_bin - rb0
    cf = col_bin - cb0
    of = ori_bin - ob0

    # scatter the 8 trilinear corners through one flat bincount
    side = DESC_GRID + 2
    flat_len = side * side * DESC_ORI_BINS
    tensor_flat = np.zeros(flat_len)
    for dr_bit in (0, 1):
        wr = values * (rf if dr_bit else 1 - rf)
        r_idx = (rb0 + 1 + dr_bit) * side * DESC_ORI_BINS
        for dc_bit in (0, 1):
            wc = wr * (cf if dc_bit else 1 - cf)
            rc_idx = r_idx + (cb0 + 1 + dc_bit) * DESC_ORI_BINS
            for do_bit in (0, 1):
                wo = wc * (of if do_bit else 1 - of)
                idx = rc_idx + (ob0 + do_bit) % DESC_ORI_BINS
                tensor_flat += np.bincount(idx, weights=wo, minlength=flat_len)
    tensor = tensor_flat.reshape(side, side, DESC_ORI_BINS)
    vec = tensor[1:-1, 1:-1, :].ravel()
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return None
    vec = vec / norm
    np.minimum(vec, p.descriptor_clip, out=vec)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return None
    return (vec / norm).astype(np.float32)


# ---------------------------------------------------------------------------
# public entry point


def extract_descriptors(image: RasterImage, params: FeatureParams | None = None) -> DescriptorSet:
    """Run the full keypoint/descriptor pipeline on one image.

    Long sides above `max_extraction_dim` are downscaled first (keypoints are
    mapped back to source coordinates). An empty result is valid: a uniform
    image simply has no extrema.
    """
    p = params or FeatureParams()
    gray = to_grayscale(image.pixels)
    src_w, src_h = image.width, image.height

    scale_back = 1.0
    long_side = max(src_w, src_h)
    if long_side > p.max_extraction_dim:
        factor = p.max_extraction_dim / long_side
        gray = ndimage.zoom(gray, factor, order=1)
        scale_back = 1.0 / factor

    gaussians, dogs = _build_scale_space(gray, p)
    grads = _GradientCache(gaussians)
    pre_thr = 0.5 * p.contrast_threshold / p.scales_per_octave
    k = 2.0 ** (1.0 / p.scales_per_octave)

    found = []  # (y, x, scale, orientation_rad, vector)
    for octave, dog in enumerate(dogs):
        for layer0, i0, j0 in _find_extrema(dog, pre_thr):
            refined = _refine_extremum(dog, int(layer0), int(i0), int(j0), p)
            if refined is None:
                continue
            layer, i, j, offset, _value = refined
            fi, fj = i + offset[1], j + offset[0]
            sigma_oct = p.base_sigma * (k ** (layer + offset[2]))
            oct_mult = float(2 ** octave)
            x = fj * oct_mult * scale_back
            y = fi * oct_mult * scale_back
            scale = sigma_oct * oct_mult * scale_back
            if not (0 <= x <= src_w - 1 and 0 <= y <= src_h - 1):
                continue
            for angle_deg in _orientation_angles(grads, octave, layer, fi, fj, sigma_oct, p):
                vec = _compute_descriptor(grads, octave, layer, fi, fj,
                                          sigma_oct, angle_deg, p)
                if vec is None:
                    continue
                theta = math.radians(360.0 - angle_deg) % (2.0 * math.pi)
                found.append((y, x, scale, theta, vec))

    if not found:
        return DescriptorSet.empty((src_w, src_h))

    found.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    deduped = []
    prev_key = None
    for y, x, scale, theta, vec in found:
        key = (round(y, 4), round(x, 4), round(scale, 4), round(theta, 6))
        if key == prev_key:
            continue
        prev_key = key
        deduped.append((y, x, scale, theta, vec))

    keypoints = [Keypoint(x=x, y=y, scale=scale, orientation=theta)
                 for y, x, scale, theta, _ in deduped]
    vectors = np.stack([vec for *_, vec in deduped])
    return DescriptorSet(vectors, keypoints, (src_w, src_h))
