"""Dominant cover colors and the UI theme derived from them.

Every visualization is themed from the cover of the book in the user's
hand, so the application always resembles that cover. Colors come from
k-means over the cover's pixels in RGB space; the theme derives primary,
secondary, accent, and background slots plus a readable text color.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .cluster import kmeans
from .errors import ValidationError
from .features import RasterImage

RGB = tuple[int, int, int]

MAX_PALETTE_COLORS = 4  # more than four hardens the coloring of every view
_DOWNSAMPLE_SIDE = 128


@dataclass(frozen=True)
class Palette:
    """Ordered dominant colors of one cover; masses sum to 1."""

    colors: list[tuple[RGB, float]]
    source_book: str | None = None

    def __post_init__(self):
        if not 1 <= len(self.colors) <= MAX_PALETTE_COLORS:
            raise ValidationError("palette must hold 1..4 colors")
        total = sum(m for _, m in self.colors)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"palette masses sum to {total}, expected 1")
        masses = [m for _, m in self.colors]
        if any(b > a for a, b in zip(masses, masses[1:])):
            raise ValidationError("palette colors must be ordered by descending mass")

    @property
    def rgb_list(self) -> list[RGB]:
        return [c for c, _ in self.colors]

    def to_json(self) -> dict:
        return {"colors": [{"rgb": list(c), "mass": m} for c, m in self.colors]}

    @classmethod
    def from_json(cls, obj: dict, source_book: str | None = None) -> "Palette":
        colors = [((int(e["rgb"][0]), int(e["rgb"][1]), int(e["rgb"][2])), float(e["mass"]))
                  for e in obj["colors"]]
        return cls(colors=colors, source_book=source_book)


@dataclass(frozen=True)
class Theme:
    """Color slots every renderer draws from."""

    primary: RGB
    secondary: RGB
    accent: RGB
    background: RGB
    text_on_primary: RGB = field(default=(0, 0, 0))

    def slot_hex(self) -> dict[str, str]:
        return {
            "primary": rgb_to_hex(self.primary),
            "secondary": rgb_to_hex(self.secondary),
            "accent": rgb_to_hex(self.accent),
            "background": rgb_to_hex(self.background),
            "text_on_primary": rgb_to_hex(self.text_on_primary),
        }


def rgb_to_hex(c: RGB) -> str:
    return "#%02x%02x%02x" % (int(c[0]), int(c[1]), int(c[2]))


def _luminance(c: RGB) -> float:
    """WCAG relative luminance of an 8-bit sRGB triple."""
    out = []
    for v in c:
        s = v / 255.0
        out.append(s / 12.92 if s <= 0.03928 else ((s + 0.055) / 1.055) ** 2.4)
    return 0.2126 * out[0] + 0.7152 * out[1] + 0.0722 * out[2]


def contrast_ratio(a: RGB, b: RGB) -> float:
    la, lb = _luminance(a), _luminance(b)
    hi, lo = max(la, lb), min(la, lb)
    return (hi + 0.05) / (lo + 0.05)


def _perceived_darkness_key(c: RGB) -> float:
    # plain Rec.601 luma; used only to break exact mass ties (darker first)
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]


def dominant_colors(image: RasterImage, k: int = MAX_PALETTE_COLORS, seed: int = 0,
                    source_book: str | None = None) -> Palette:
    """Extract up to `k` dominant colors, ordered by descending pixel mass.

    The image is area-averaged down to at most 128x128 before clustering,
    so dominance is statistical rather than pixel-exact. Deterministic
    given (image, k, seed).
    """
    if k < 1 or k > MAX_PALETTE_COLORS:
        raise ValidationError("palette k must be in 1..4")
    pixels = image.pixels
    h, w = pixels.shape[:2]
    if w > _DOWNSAMPLE_SIDE or h > _DOWNSAMPLE_SIDE:
        scale = _DOWNSAMPLE_SIDE / max(w, h)
        new_size = (max(1, int(round(w * scale))), max(1, int(round(h * scale))))
        pixels = np.asarray(
            Image.fromarray(pixels).resize(new_size, Image.Resampling.BOX)
        )
    pts = pixels.reshape(-1, 3).astype(np.float64)
    centroids, assign, _ = kmeans(pts, k, seed)

    counts = np.bincount(assign, minlength=centroids.shape[0]).astype(np.float64)
    mass = counts / counts.sum()
    entries = []
    for i in range(centroids.shape[0]):
        if counts[i] == 0:
            continue
        rgb = tuple(int(v) for v in np.clip(np.round(centroids[i]), 0, 255))
        entries.append((rgb, float(mass[i])))
    entries.sort(key=lambda e: (-e[1], _perceived_darkness_key(e[0]), e[0]))
    return Palette(colors=entries, source_book=source_book)


def _saturation(c: RGB) -> float:
    hi, lo = max(c), min(c)
    return 0.0 if hi == 0 else (hi - lo) / hi


def _darken(c: RGB, factor: float = 0.6) -> RGB:
    return tuple(int(round(v * factor)) for v in c)


def _lighten(c: RGB, amount: float = 0.2) -> RGB:
    return tuple(int(round(v + amount * (255 - v))) for v in c)


def theme_from_palette(p: Palette) -> Theme:
    """Derive the four theme slots plus a readable text color.

    text_on_primary is black or white, whichever clears the higher WCAG
    contrast ratio against the primary (always >= sqrt(21) ~ 4.58, so the
    3.0 floor holds for any cover).
    """
    colors = p.rgb_list
    primary = colors[0]
    secondary = colors[1] if len(colors) > 1 else _darken(primary)
    accent = max(colors, key=lambda c: (_saturation(c), -colors.index(c)))
    lightest = max(colors, key=_luminance)
    background = _lighten(lightest)
    white, black = (255, 255, 255), (0, 0, 0)
    text = white if contrast_ratio(primary, white) >= contrast_ratio(primary, black) else black
    return Theme(primary=primary, secondary=secondary, accent=accent,
                 background=background, text_on_primary=text)
