"""Deterministic SVG and JSON renderings of the six views.

Every renderer draws on a fixed 360x360 canvas, takes its colors only
from the supplied theme/palette (black and white are reserved for text
and the placement dot), and is byte-stable: identical inputs yield
identical bytes, in any process, at any time. The JSON payloads are
lossless projections, so the client can rebuild the data objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError
from .palette import Palette, Theme, rgb_to_hex
from .taste import (
    AuthorTimeline,
    BookSelfieData,
    ContourLevel,
    FitResult,
    GenreHistogram,
    GRID_SIZE,
    RadialLayout,
    RoseData,
    RoseSector,
    SimilarGrid,
    TasteModel,
    TimelineTile,
    selfie_contours,
)

SCHEMA = "bookvis/1"
CANVAS = 360
_CX = _CY = CANVAS / 2
_R_DISK = 120.0          # screen radius of the unit circle
_TWO_PI = 2.0 * math.pi

KINDS = ("book_selfie", "author_timeline", "similar_grid",
         "data_selfie", "how_it_fits", "my_rose")


@dataclass(frozen=True)
class VizDocument:
    kind: str
    svg: str
    payload: dict
    theme: Theme


def _f(v: float) -> str:
    return f"{v:.2f}"


def _o(v: float) -> str:
    return f"{v:.3f}"


def _pt(r: float, theta: float, cx: float = _CX, cy: float = _CY) -> tuple[float, float]:
    # math angles, screen y points down
    return (cx + r * math.cos(theta), cy - r * math.sin(theta))


def _wedge_path(r: float, a_start: float, a_end: float) -> str:
    """Filled wedge from center, drawn clockwise from a_start to a_end."""
    x0, y0 = _pt(r, a_start)
    x1, y1 = _pt(r, a_end)
    span = (a_start - a_end) % _TWO_PI
    large = 1 if span > math.pi else 0
    return (f"M{_f(_CX)},{_f(_CY)} L{_f(x0)},{_f(y0)} "
            f"A{_f(r)},{_f(r)} 0 {large} 1 {_f(x1)},{_f(y1)} Z")


def _annular_wedge_path(r0: float, r1: float, a_start: float, a_end: float) -> str:
    xi0, yi0 = _pt(r0, a_start)
    xo0, yo0 = _pt(r1, a_start)
    xo1, yo1 = _pt(r1, a_end)
    xi1, yi1 = _pt(r0, a_end)
    span = (a_start - a_end) % _TWO_PI
    large = 1 if span > math.pi else 0
    return (f"M{_f(xi0)},{_f(yi0)} L{_f(xo0)},{_f(yo0)} "
            f"A{_f(r1)},{_f(r1)} 0 {large} 1 {_f(xo1)},{_f(yo1)} "
            f"L{_f(xi1)},{_f(yi1)} "
            f"A{_f(r0)},{_f(r0)} 0 {large} 0 {_f(xi0)},{_f(yi0)} Z")


def _disk_xy(x: float, y: float) -> tuple[float, float]:
    return (_CX + _R_DISK * x, _CY - _R_DISK * y)


class _Svg:
    def __init__(self, background: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>\n',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
            f'viewBox="0 0 {CANVAS} {CANVAS}">',
            f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="{background}"/>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def circle(self, cx, cy, r, fill="none", stroke=None, stroke_width=None, opacity=None):
        attrs = [f'cx="{_f(cx)}"', f'cy="{_f(cy)}"', f'r="{_f(r)}"', f'fill="{fill}"']
        if stroke:
            attrs.append(f'stroke="{stroke}"')
        if stroke_width is not None:
            attrs.append(f'stroke-width="{_f(stroke_width)}"')
        if opacity is not None:
            attrs.append(f'fill-opacity="{_o(opacity)}"')
        self.parts.append(f"<circle {' '.join(attrs)}/>")

    def rect(self, x, y, w, h, fill, opacity=None, stroke=None, stroke_width=None,
             dashed=False):
        attrs = [f'x="{_f(x)}"', f'y="{_f(y)}"', f'width="{_f(w)}"', f'height="{_f(h)}"',
                 f'fill="{fill}"']
        if opacity is not None:
            attrs.append(f'fill-opacity="{_o(opacity)}"')
        if stroke:
            attrs.append(f'stroke="{stroke}"')
        if stroke_width is not None:
            attrs.append(f'stroke-width="{_f(stroke_width)}"')
        if dashed:
            attrs.append('stroke-dasharray="4 3"')
        self.parts.append(f"<rect {' '.join(attrs)}/>")

    def path(self, d, fill="none", stroke=None, stroke_width=None, opacity=None,
             stroke_opacity=None):
        attrs = [f'd="{d}"', f'fill="{fill}"']
        if opacity is not None:
            attrs.append(f'fill-opacity="{_o(opacity)}"')
        if stroke:
            attrs.append(f'stroke="{stroke}"')
        if stroke_width is not None:
            attrs.append(f'stroke-width="{_f(stroke_width)}"')
        if stroke_opacity is not None:
            attrs.append(f'stroke-opacity="{_o(stroke_opacity)}"')
        self.parts.append(f"<path {' '.join(attrs)}/>")

    def text(self, x, y, content, fill, size=12, anchor="middle", weight=None):
        attrs = [f'x="{_f(x)}"', f'y="{_f(y)}"', f'fill="{fill}"',
                 f'font-size="{size}"', f'text-anchor="{anchor}"',
                 'font-family="sans-serif"']
        if weight:
            attrs.append(f'font-weight="{weight}"')
        self.parts.append(f"<text {' '.join(attrs)}>{escape(str(content))}</text>")

    def polyline(self, points, stroke, stroke_width=1.5, stroke_opacity=None, fill="none"):
        pts = " ".join(f"{_f(px)},{_f(py)}" for px, py in points)
        attrs = [f'points="{pts}"', f'fill="{fill}"', f'stroke="{stroke}"',
                 f'stroke-width="{_f(stroke_width)}"']
        if stroke_opacity is not None:
            attrs.append(f'stroke-opacity="{_o(stroke_opacity)}"')
        self.parts.append(f"<polyline {' '.join(attrs)}/>")

    def render(self) -> str:
        return "".join(self.parts) + "</svg>"


# ---------------------------------------------------------------------------
# individual views


def _render_book_selfie(data: BookSelfieData, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    primary = rgb_to_hex(theme.primary)
    secondary = rgb_to_hex(theme.secondary)
    accent = rgb_to_hex(theme.accent)
    text_c = rgb_to_hex(theme.text_on_primary)
    r_max = 150.0

    # four components, clockwise from 12 o'clock:
    # author | ratings | ratings distance | review count
    quads = [(math.pi / 2, 0.0), (0.0, -math.pi / 2),
             (-math.pi / 2, -math.pi), (-math.pi, -3 * math.pi / 2)]
    rating_r = 0.25 + 0.75 * min(max(data.avg_rating / 5.0, 0.0), 1.0)
    dist_r = 0.5 + min(max(data.ratings_distance, -0.5), 0.5)
    reviews_r = 0.25 + 0.75 * min(math.log1p(max(data.reviews_count, 0)) / math.log1p(1e6), 1.0)
    radii = [0.8, rating_r, dist_r, reviews_r]
    fills = [secondary, primary, accent if data.ratings_distance >= 0 else secondary, primary]
    pad = 0.06
    for (a0, a1), rr, fill in zip(quads, radii, fills):
        svg.path(_wedge_path(r_max * rr, a0 - pad, a1 + pad), fill=fill, opacity=0.9)

    svg.circle(_CX, _CY, 62, fill=primary)
    svg.text(_CX, _CY - 34, data.author_name, text_c, size=11, weight="bold")
    svg.text(_CX, _CY - 12, f"{data.avg_rating:.2f} avg", text_c, size=13)
    svg.text(_CX, _CY + 6, f"{data.ratings_count} ratings", text_c, size=10)
    svg.text(_CX, _CY + 24, f"{data.ratings_distance:+.2f} vs crowd", text_c, size=10)
    svg.text(_CX, _CY + 42, f"{data.reviews_count} reviews", text_c, size=10)
    return svg.render()


def _render_author_timeline(data: AuthorTimeline, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    secondary = rgb_to_hex(theme.secondary)
    accent = rgb_to_hex(theme.accent)
    n = len(data.tiles)
    gap = 6.0
    tile_w = min(52.0, (CANVAS - 40.0 - gap * (n - 1)) / n)
    total_w = tile_w * n + gap * (n - 1)
    x = (CANVAS - total_w) / 2
    base_y, tile_h = 110.0, 140.0
    for tile in data.tiles:
        if tile.hidden:
            svg.rect(x, base_y, tile_w, tile_h, fill="none", stroke=secondary,
                     stroke_width=1.0, dashed=True)
        else:
            # stacked bands, one per palette color, heights by mass
            y = base_y
            colors = tile.palette.colors if tile.palette else [(theme.primary, 1.0)]
            for rgb, mass in colors:
                band = tile_h * mass
                svg.rect(x, y, tile_w, band, fill=rgb_to_hex(rgb))
                y += band
            if tile.is_focus:
                svg.rect(x - 2, base_y - 2, tile_w + 4, tile_h + 4, fill="none",
                         stroke=accent, stroke_width=3.0)
            svg.text(x + tile_w / 2, base_y + tile_h + 16, str(tile.year),
                     secondary, size=10)
        x += tile_w + gap
    return svg.render()


def _render_similar_grid(data: SimilarGrid, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    primary = rgb_to_hex(theme.primary)
    secondary = rgb_to_hex(theme.secondary)
    cell = 56.0
    origin_x = (CANVAS - 5 * cell) / 2
    origin_y = (CANVAS - 5 * cell) / 2
    if data.empty:
        svg.rect(origin_x, origin_y, 5 * cell, 5 * cell, fill="none",
                 stroke=secondary, stroke_width=1.5, dashed=True)
        svg.text(_CX, _CY, "no similar books", secondary, size=13)
        return svg.render()
    for yb in range(5):
        for xb in range(5):
            x = origin_x + xb * cell
            y = origin_y + (4 - yb) * cell  # high ratings on top
            svg.rect(x, y, cell - 2, cell - 2, fill="none", stroke=secondary,
                     stroke_width=0.5)
            members = data.cells[yb][xb]
            if members:
                depth = max(t for _, t in members)
                svg.rect(x + 2, y + 2, cell - 6, cell - 6, fill=primary,
                         opacity=0.15 + 0.85 * depth)
                if len(members) > 1:
                    svg.text(x + cell / 2, y + cell / 2 + 4, str(len(members)),
                             rgb_to_hex(theme.text_on_primary), size=12)
    svg.text(origin_x, origin_y + 5 * cell + 18, str(int(data.x_edges[0])),
             secondary, size=10, anchor="start")
    svg.text(origin_x + 5 * cell, origin_y + 5 * cell + 18,
             str(int(round(data.x_edges[5]))), secondary, size=10, anchor="end")
    svg.text(origin_x - 8, origin_y + 5 * cell, f"{data.y_edges[0]:.1f}",
             secondary, size=10, anchor="end")
    svg.text(origin_x - 8, origin_y + 10, f"{data.y_edges[5]:.1f}",
             secondary, size=10, anchor="end")
    return svg.render()


def _draw_selfie_base(svg: _Svg, model: TasteModel, contours: list[ContourLevel],
                      theme: Theme) -> None:
    primary = rgb_to_hex(theme.primary)
    secondary = rgb_to_hex(theme.secondary)
    accent = rgb_to_hex(theme.accent)
    svg.circle(_CX, _CY, _R_DISK, fill="none", stroke=secondary, stroke_width=1.0)

    counts = model.histogram.counts
    if counts:
        max_count = max(counts.values())
        show_labels = len(counts) <= 16
        for genre in sorted(counts):
            theta = model.layout.angles[genre]
            length = 10.0 + 34.0 * (counts[genre] / max_count)
            half = min(0.42 * _TWO_PI / len(counts), 0.18)
            svg.path(_annular_wedge_path(_R_DISK + 2, _R_DISK + 2 + length,
                                         theta + half, theta - half),
                     fill=primary, opacity=0.85)
            if show_labels:
                lx, ly = _pt(_R_DISK + 14 + length, theta)
                svg.text(lx, ly + 3, genre, secondary, size=8)

    for level_idx, level in enumerate(contours):
        opacity = 0.35 + 0.3 * level_idx
        for poly in level.polylines:
            svg.polyline([_disk_xy(px, py) for px, py in poly], stroke=accent,
                         stroke_width=1.5, stroke_opacity=opacity)

    for _, (dx, dy) in model.dots:
        sx, sy = _disk_xy(dx, dy)
        svg.circle(sx, sy, 2.0, fill=secondary, opacity=0.75)


def _render_data_selfie(model: TasteModel, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    _draw_selfie_base(svg, model, selfie_contours(model), theme)
    return svg.render()


def _render_how_it_fits(model: TasteModel, fit: FitResult, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    accent = rgb_to_hex(theme.accent)
    _draw_selfie_base(svg, model, selfie_contours(model), theme)
    if fit.overlap and fit.contributing_genres:
        anchors = [model.layout.anchor(g) for g, _ in fit.contributing_genres]
        if len(anchors) >= 2:
            pts = [_disk_xy(ax, ay) for ax, ay in anchors]
            pts.append(pts[0])
            svg.polyline(pts, stroke=accent, stroke_width=1.0, stroke_opacity=0.6)
    sx, sy = _disk_xy(*fit.position)
    svg.circle(sx, sy, 6.5, fill="none", stroke="#ffffff", stroke_width=2.0)
    svg.circle(sx, sy, 5.0, fill="#000000")
    return svg.render()


def _render_my_rose(data: RoseData, theme: Theme) -> str:
    svg = _Svg(rgb_to_hex(theme.background))
    secondary = rgb_to_hex(theme.secondary)
    accent = rgb_to_hex(theme.accent)
    n = len(data.sectors)
    span = _TWO_PI / n
    r_full = 150.0
    svg.circle(_CX, _CY, r_full, fill="none", stroke=secondary, stroke_width=0.5)
    for i, sector in enumerate(data.sectors):
        a0 = math.pi / 2 - i * span
        a1 = a0 - span
        for radius, fill, opacity in (
            (r_full * sector.avg_rating / 5.0, secondary, 0.85),
            (r_full * sector.user_rating / 5.0, accent, 0.7),
        ):
            if n == 1:
                d = _wedge_path(max(radius, 0.01), a0, a0 - math.pi) + \
                    _wedge_path(max(radius, 0.01), a0 - math.pi, a1)
                svg.path(d, fill=fill, opacity=opacity)
            else:
                svg.path(_wedge_path(max(radius, 0.01), a0, a1), fill=fill, opacity=opacity)
    return svg.render()


# ---------------------------------------------------------------------------
# payloads (lossless JSON projections)


def _palette_json(p: Palette | None) -> dict | None:
    if p is None:
        return None
    obj = p.to_json()
    obj["source_book"] = p.source_book
    return obj


def _palette_from_json(obj: dict | None) -> Palette | None:
    if obj is None:
        return None
    return Palette.from_json(obj, source_book=obj.get("source_book"))


def _model_json(model: TasteModel) -> dict:
    return {
        "histogram": dict(model.histogram.counts),
        "total_books": model.histogram.total_books,
        "ordering": model.layout.ordering,
        "angles": dict(model.layout.angles),
        "dots": [[bid, [x, y]] for bid, (x, y) in model.dots],
        "density": model.density.tolist(),
        "density_max": model.density_max,
        "bandwidth": model.bandwidth,
        "grid_size": GRID_SIZE,
        "contours": [
            {"quantile": lv.quantile, "threshold": lv.threshold,
             "polylines": [[[px, py] for px, py in poly] for poly in lv.polylines]}
            for lv in selfie_contours(model)
        ],
    }


def _model_from_json(obj: dict) -> TasteModel:
    hist = GenreHistogram(counts={k: int(v) for k, v in obj["histogram"].items()},
                          total_books=int(obj["total_books"]))
    layout = RadialLayout(ordering=obj["ordering"],
                          angles={k: float(v) for k, v in obj["angles"].items()})
    dots = [(bid, (float(p[0]), float(p[1]))) for bid, p in obj["dots"]]
    density = np.asarray(obj["density"], dtype=np.float64)
    return TasteModel(histogram=hist, layout=layout, dots=dots, density=density,
                      density_max=float(obj["density_max"]),
                      bandwidth=float(obj["bandwidth"]))


def payload(kind: str, data) -> dict:
    """Lossless JSON projection of one view's data; see from_payload."""
    body: dict
    if kind == "book_selfie":
        body = {
            "author_name": data.author_name,
            "avg_rating": data.avg_rating,
            "ratings_count": data.ratings_count,
            "ratings_distance": data.ratings_distance,
            "reviews_count": data.reviews_count,
            "palette": _palette_json(data.palette),
        }
    elif kind == "author_timeline":
        body = {
            "tiles": [{"book_id": t.book_id, "year": t.year,
                       "palette": _palette_json(t.palette), "is_focus": t.is_focus}
                      for t in data.tiles],
            "focus_index": data.focus_index,
        }
    elif kind == "similar_grid":
        body = {
            "cells": [[[[bid, trust] for bid, trust in cell] for cell in row]
                      for row in data.cells],
            "x_edges": list(data.x_edges),
            "y_edges": list(data.y_edges),
            "empty": data.empty,
        }
    elif kind == "data_selfie":
        body = _model_json(data)
    elif kind == "how_it_fits":
        model, fit = data
        body = {"model": _model_json(model), "fit": {
            "position": list(fit.position),
            "fitness": fit.fitness,
            "contributing_genres": [[g, w] for g, w in fit.contributing_genres],
            "overlap": fit.overlap,
        }}
    elif kind == "my_rose":
        body = {"sectors": [{"book_id": s.book_id, "user_rating": s.user_rating,
                             "avg_rating": s.avg_rating} for s in data.sectors]}
    else:
        raise ValidationError(f"unknown viz kind {kind!r}")
    return {"schema": SCHEMA, "kind": kind, **body}


def from_payload(obj: dict):
    """Rebuild the data object a payload was projected from."""
    kind = obj.get("kind")
    if kind == "book_selfie":
        return BookSelfieData(
            author_name=obj["author_name"],
            avg_rating=float(obj["avg_rating"]),
            ratings_count=int(obj["ratings_count"]),
            ratings_distance=float(obj["ratings_distance"]),
            reviews_count=int(obj["reviews_count"]),
            palette=_palette_from_json(obj["palette"]),
        )
    if kind == "author_timeline":
        tiles = [TimelineTile(book_id=t["book_id"],
                              year=None if t["year"] is None else int(t["year"]),
                              palette=_palette_from_json(t["palette"]),
                              is_focus=bool(t["is_focus"]))
                 for t in obj["tiles"]]
        return AuthorTimeline(tiles=tiles, focus_index=int(obj["focus_index"]))
    if kind == "similar_grid":
        cells = [[[(bid, float(trust)) for bid, trust in cell] for cell in row]
                 for row in obj["cells"]]
        return SimilarGrid(cells=cells, x_edges=[float(v) for v in obj["x_edges"]],
                           y_edges=[float(v) for v in obj["y_edges"]],
                           empty=bool(obj["empty"]))
    if kind == "data_selfie":
        return _model_from_json(obj)
    if kind == "how_it_fits":
        fit_obj = obj["fit"]
        fit = FitResult(position=(float(fit_obj["position"][0]), float(fit_obj["position"][1])),
                        fitness=float(fit_obj["fitness"]),
                        contributing_genres=[(g, float(w))
                                             for g, w in fit_obj["contributing_genres"]],
                        overlap=bool(fit_obj["overlap"]))
        return (_model_from_json({**obj["model"], "kind": "data_selfie"}), fit)
    if kind == "my_rose":
        return RoseData(sectors=[RoseSector(book_id=s["book_id"],
                                            user_rating=int(s["user_rating"]),
                                            avg_rating=float(s["avg_rating"]))
                                 for s in obj["sectors"]])
    raise ValidationError(f"unknown viz kind {kind!r}")


# ---------------------------------------------------------------------------
# entry point


def render(kind: str, data, theme: Theme) -> VizDocument:
    """Render one view; `data` is the matching taste-module product.

    how_it_fits takes a (TasteModel, FitResult) pair. Raises on data that
    violates the view's contract (wrong shape, empty rose, unknown kind).
    """
    if kind == "book_selfie":
        if not isinstance(data, BookSelfieData):
            raise ValidationError("book_selfie needs BookSelfieData")
        svg = _render_book_selfie(data, theme)
    elif kind == "author_timeline":
        if not isinstance(data, AuthorTimeline) or not data.tiles:
            raise ValidationError("author_timeline needs a non-empty AuthorTimeline")
        if sum(1 for t in data.tiles if t.is_focus) != 1:
            raise ValidationError("timeline must have exactly one focus tile")
        svg = _render_author_timeline(data, theme)
    elif kind == "similar_grid":
        if not isinstance(data, SimilarGrid) or len(data.cells) != 5 \
                or any(len(row) != 5 for row in data.cells):
            raise ValidationError("similar_grid needs a 5x5 SimilarGrid")
        svg = _render_similar_grid(data, theme)
    elif kind == "data_selfie":
        if not isinstance(data, TasteModel):
            raise ValidationError("data_selfie needs a TasteModel")
        svg = _render_data_selfie(data, theme)
    elif kind == "how_it_fits":
        try:
            model, fit = data
        except (TypeError, ValueError):
            raise ValidationError("how_it_fits needs a (TasteModel, FitResult) pair")
        if not isinstance(model, TasteModel) or not isinstance(fit, FitResult):
            raise ValidationError("how_it_fits needs a (TasteModel, FitResult) pair")
        svg = _render_how_it_fits(model, fit, theme)
    elif kind == "my_rose":
        if not isinstance(data, RoseData) or not data.sectors:
            raise ValidationError("my_rose needs a non-empty RoseData")
        svg = _render_my_rose(data, theme)
    else:
        raise ValidationError(f"unknown viz kind {kind!r}")
    return VizDocument(kind=kind, svg=svg, payload=payload(kind, data), theme=theme)
