"""Deterministic synthetic book covers and photo-like transforms.

Desk-scale fixtures need covers that look unique without shipping image
assets: each seed yields a distinct layout of fake title glyphs, shapes,
and texture bands with enough structure for keypoint detection. The
transform helpers simulate what a phone camera does to a real cover
(tilt, distance, lighting).
"""

from __future__ import annotations

import colorsys
import io
import math

import numpy as np
from PIL import Image, ImageDraw, ImageEnhance


def _pick_colors(rng: np.random.Generator, n: int) -> list[tuple[int, int, int]]:
    """Random hues pinned to spaced luma targets.

    Unconstrained draws occasionally land five isoluminant colors, and a
    cover that is flat in grayscale carries no detectable structure; spacing
    the lumas keeps every region edge visible to the gradient pipeline.
    """
    base_hue = rng.random()
    targets = np.linspace(0.14, 0.92, n) + rng.uniform(-0.05, 0.05, n)
    rng.shuffle(targets)
    out = []
    for i in range(n):
        h = (base_hue + i / n + rng.random() * 0.08) % 1.0
        s = 0.45 + 0.5 * rng.random()
        t = float(np.clip(targets[i], 0.05, 0.95))
        for _ in range(8):  # luma scales linearly with value; desaturate if capped
            r, g, b = colorsys.hsv_to_rgb(h, s, 1.0)
            full_luma = 0.299 * r + 0.587 * g + 0.114 * b
            if full_luma >= t:
                break
            s = max(s - 0.2, 0.0)
        v = min(t / max(full_luma, 1e-6), 1.0)
        r, g, b = colorsys.hsv_to_rgb(h, s, v)
        out.append((int(r * 255), int(g * 255), int(b * 255)))
    return out


def _fake_text_block(draw: ImageDraw.ImageDraw, rng: np.random.Generator,
                     x0: int, y0: int, width: int, rows: int, glyph_h: int,
                     color: tuple[int, int, int],
                     notch_color: tuple[int, int, int]) -> None:
    """Rows of glyph-like rectangles; reads as a title from a distance."""
    y = y0
    for _ in range(rows):
        x = x0 + int(rng.integers(0, max(1, width // 6)))
        row_end = x0 + width - int(rng.integers(0, max(1, width // 8)))
        while x < row_end:
            gw = int(rng.integers(5, 14))
            if x + gw > row_end:
                break
            draw.rectangle([x, y, x + gw, y + glyph_h], fill=color)
            if rng.random() < 0.45:  # notched glyphs are corner-rich
                nx = x + int(rng.integers(1, max(2, gw - 1)))
                draw.rectangle([nx, y + glyph_h // 2, min(nx + 3, x + gw), y + glyph_h],
                               fill=notch_color)
            x += gw + int(rng.integers(2, 7))
        y += glyph_h + int(rng.integers(4, 10))


def make_cover(seed: int, width: int = 256, height: int = 384) -> Image.Image:
    """Render one deterministic synthetic cover."""
    rng = np.random.default_rng(seed)
    colors = _pick_colors(rng, 5)
    bg, ink, accent, band_c, shape_c = colors

    img = Image.new("RGB", (width, height), bg)
    draw = ImageDraw.Draw(img)

    # horizontal band with a repeating texture
    band_y = int(rng.integers(height // 8, height // 2))
    band_h = int(rng.integers(height // 10, height // 5))
    draw.rectangle([0, band_y, width, band_y + band_h], fill=band_c)
    step = int(rng.integers(8, 18))
    texture = rng.integers(0, 3)
    for x in range(0, width, step):
        if texture == 0:
            draw.ellipse([x + 2, band_y + 4, x + step - 2, band_y + band_h - 4], fill=ink)
        elif texture == 1:
            draw.rectangle([x, band_y, x + step // 2, band_y + band_h], fill=ink)
        else:
            draw.polygon([(x, band_y + band_h), (x + step // 2, band_y),
                          (x + step, band_y + band_h)], fill=ink)

    # a few large shapes
    for _ in range(int(rng.integers(2, 5))):
        cx = int(rng.integers(0, width))
        cy = int(rng.integers(band_y + band_h, height))
        r = int(rng.integers(12, 46))
        kind = rng.integers(0, 3)
        if kind == 0:
            draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=shape_c, outline=ink, width=3)
        elif kind == 1:
            draw.rectangle([cx - r, cy - r // 2, cx + r, cy + r // 2],
                           fill=shape_c, outline=ink, width=3)
        else:
            pts = [(cx + int(r * math.cos(2 * math.pi * t / 5 + rng.random())),
                    cy + int(r * math.sin(2 * math.pi * t / 5 + rng.random())))
                   for t in range(5)]
            draw.polygon(pts, fill=shape_c, outline=ink)

    # title and author blocks
    _fake_text_block(draw, rng, 18, 16, width - 36, rows=int(rng.integers(2, 4)),
                     glyph_h=int(rng.integers(14, 22)), color=ink, notch_color=bg)
    _fake_text_block(draw, rng, 30, height - 70, width - 60, rows=2,
                     glyph_h=int(rng.integers(8, 12)), color=accent, notch_color=bg)

    # jittered dot motif, unique per cover
    n_dots = int(rng.integers(25, 60))
    xs = rng.integers(4, width - 4, n_dots)
    ys = rng.integers(band_y + band_h + 4, height - 80, n_dots) if height - 84 > band_y + band_h \
        else rng.integers(4, height - 4, n_dots)
    for x, y in zip(xs, ys):
        rr = int(rng.integers(2, 5))
        draw.ellipse([x - rr, y - rr, x + rr, y + rr], fill=accent)

    return img


def cover_png_bytes(seed: int, width: int = 256, height: int = 384) -> bytes:
    buf = io.BytesIO()
    make_cover(seed, width, height).save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# camera-like transforms


def rotate(img: Image.Image, degrees: float) -> Image.Image:
    return img.rotate(degrees, resample=Image.Resampling.BILINEAR,
                      expand=True, fillcolor=(128, 128, 128))


def rescale(img: Image.Image, factor: float) -> Image.Image:
    w, h = img.size
    return img.resize((max(1, int(w * factor)), max(1, int(h * factor))),
                      Image.Resampling.BILINEAR)


def adjust_brightness(img: Image.Image, factor: float) -> Image.Image:
    return ImageEnhance.Brightness(img).enhance(factor)


def _perspective_coeffs(src_quad, dst_quad):
    # solve the 8-parameter homography mapping dst corners back to src
    a = []
    b = []
    for (sx, sy), (dx, dy) in zip(src_quad, dst_quad):
        a.append([dx, dy, 1, 0, 0, 0, -sx * dx, -sx * dy])
        a.append([0, 0, 0, dx, dy, 1, -sy * dx, -sy * dy])
        b.extend([sx, sy])
    return np.linalg.solve(np.asarray(a, dtype=np.float64),
                           np.asarray(b, dtype=np.float64))


def perspective_tilt(img: Image.Image, degrees: float) -> Image.Image:
    """Simulate photographing the cover tilted about its vertical axis."""
    w, h = img.size
    shrink = math.tan(math.radians(degrees)) * 0.5
    dy = h * shrink
    dx = w * shrink * 0.3
    src = [(0, 0), (w, 0), (w, h), (0, h)]
    dst = [(dx, dy), (w - dx * 0.2, 0), (w - dx * 0.2, h), (dx, h - dy)]
    coeffs = _perspective_coeffs(src, dst)
    return img.transform((w, h), Image.Transform.PERSPECTIVE, tuple(coeffs),
                         resample=Image.Resampling.BILINEAR, fillcolor=(128, 128, 128))


def to_png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
