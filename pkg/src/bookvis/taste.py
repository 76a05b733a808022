"""Math behind every visualization: genre histograms, the radial genre
layout, per-book placement inside it, the density field with its
topographic contours, and the data products for the six views.

Geometry convention: genre anchors sit on the unit circle, book dots in
the closed unit disk, and the density grid spans [-1.1, 1.1] on both
axes so contours have room to close around edge-hugging dots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import BookRecord, Catalog, books_by_author, similar_books
from .errors import EmptyLibraryError, ValidationError
from .palette import Palette

GRID_SIZE = 64
GRID_EXTENT = 1.1
BANDWIDTH_FLOOR = 0.05
CONTOUR_QUANTILES = (0.5, 0.75, 0.9)
MIN_TIMELINE_TILES = 5

ORDER_ALPHABETICAL = "alphabetical"
ORDER_BELL = "bell"

_GRID_AXIS = np.linspace(-GRID_EXTENT, GRID_EXTENT, GRID_SIZE)
_GRID_STEP = 2.0 * GRID_EXTENT / (GRID_SIZE - 1)


# ---------------------------------------------------------------------------
# histogram and radial layout


@dataclass
class GenreHistogram:
    counts: dict[str, int]
    total_books: int

    def __bool__(self) -> bool:
        return bool(self.counts)


def build_histogram(shelf_books: list[BookRecord]) -> GenreHistogram:
    """Count how many shelf books list each genre."""
    counts: dict[str, int] = {}
    for book in shelf_books:
        for g in book.genres:
            counts[g] = counts.get(g, 0) + 1
    return GenreHistogram(counts=counts, total_books=len(shelf_books))


@dataclass
class RadialLayout:
    ordering: str
    angles: dict[str, float]  # genre -> radians in [0, 2*pi)

    def anchor(self, genre: str) -> tuple[float, float]:
        theta = self.angles[genre]
        return (math.cos(theta), math.sin(theta))


def _slot_angle(slot: int, n: int) -> float:
    # slot 0 at 12 o'clock, subsequent slots clockwise
    return (math.pi / 2.0 - slot * (2.0 * math.pi / n)) % (2.0 * math.pi)


def radial_layout(hist: GenreHistogram, ordering: str = ORDER_BELL) -> RadialLayout:
    """Evenly space genres on the circle.

    Alphabetical runs clockwise from 12 o'clock. Bell puts the biggest
    genre on top and alternates the rest right/left of it so counts fall
    away in both directions; with all counts equal there is nothing to
    shape, and the order falls back to the alphabetical one.
    """
    if not hist.counts:
        raise ValidationError("cannot lay out an empty histogram")
    if ordering not in (ORDER_ALPHABETICAL, ORDER_BELL):
        raise ValidationError(f"unknown ordering {ordering!r}")
    labels = sorted(hist.counts)
    n = len(labels)
    if ordering == ORDER_ALPHABETICAL or len(set(hist.counts.values())) == 1:
        slots = {g: i for i, g in enumerate(labels)}
    else:
        ranked = sorted(hist.counts, key=lambda g: (-hist.counts[g], g))
        slots = {}
        for i, g in enumerate(ranked):
            offset = (i + 1) // 2 if i % 2 == 1 else -(i // 2)
            slots[g] = offset % n
    angles = {g: _slot_angle(slots[g], n) for g in labels}
    return RadialLayout(ordering=ordering, angles=angles)


# ---------------------------------------------------------------------------
# taste model: dots plus density field


@dataclass
class TasteModel:
    histogram: GenreHistogram
    layout: RadialLayout
    dots: list[tuple[str, tuple[float, float]]]
    density: np.ndarray           # (GRID_SIZE, GRID_SIZE); [i, j] = f(x=axis[j], y=axis[i])
    density_max: float
    bandwidth: float

    @property
    def grid_axis(self) -> np.ndarray:
        return _GRID_AXIS

    def density_at(self, points: np.ndarray) -> np.ndarray:
        """Exact kernel sum at arbitrary (x, y) points, matching the grid field."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if not self.dots:
            return np.zeros(pts.shape[0])
        centers = np.asarray([p for _, p in self.dots], dtype=np.float64)
        h = self.bandwidth
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-d2 / (2.0 * h * h)).sum(axis=1) / (len(self.dots) * 2.0 * math.pi * h * h)


def _weighted_anchor_centroid(genres, hist: GenreHistogram,
                              layout: RadialLayout) -> tuple[tuple[float, float], list[tuple[str, float]]]:
    """Counts-weighted centroid of the anchors of the given genres."""
    present = [g for g in genres if g in layout.angles]
    total = float(sum(hist.counts[g] for g in present))
    x = y = 0.0
    contrib = []
    for g in present:
        w = hist.counts[g] / total
        ax, ay = layout.anchor(g)
        x += w * ax
        y += w * ay
        contrib.append((g, w))
    return (x, y), contrib


@dataclass
class FitResult:
    position: tuple[float, float]
    fitness: float
    contributing_genres: list[tuple[str, float]]
    overlap: bool

    def to_json(self) -> dict:
        return {
            "schema": "bookvis/1",
            "position": list(self.position),
            "fitness": self.fitness,
            "contributing_genres": [[g, w] for g, w in self.contributing_genres],
            "overlap": self.overlap,
        }


def place_book(book: BookRecord, model: TasteModel) -> FitResult:
    """Locate a book inside the taste field and read off its fitness.

    The dot is the counts-weighted centroid of the anchors of the book's
    genres: bigger genre peaks pull harder, genres the user never reads
    contribute nothing. Fitness is the density there relative to the
    field's peak. No genre overlap means no placement at all.
    """
    present = [g for g in book.genres if g in model.layout.angles]
    if not present:
        return FitResult(position=(0.0, 0.0), fitness=0.0,
                         contributing_genres=[], overlap=False)
    pos, contrib = _weighted_anchor_centroid(present, model.histogram, model.layout)
    if model.density_max > 0.0:
        fitness = float(model.density_at([pos])[0]) / model.density_max
        fitness = min(max(fitness, 0.0), 1.0)
    else:
        fitness = 0.0
    return FitResult(position=pos, fitness=fitness,
                     contributing_genres=contrib, overlap=True)


def build_taste_model(shelf_books: list[BookRecord],
                      ordering: str = ORDER_BELL) -> TasteModel:
    """Histogram, layout, dot cloud, and smoothed density in one pass.

    Bandwidth follows the n^(-1/6) * sigma rule for two dimensions (sigma
    is the mean of the per-axis standard deviations) with a 0.05 floor so
    one- or two-book libraries still get a usable field.
    """
    hist = build_histogram(shelf_books)
    if not hist.counts:
        return TasteModel(histogram=hist,
                          layout=RadialLayout(ordering=ordering, angles={}),
                          dots=[], density=np.zeros((GRID_SIZE, GRID_SIZE)),
                          density_max=0.0, bandwidth=BANDWIDTH_FLOOR)
    layout = radial_layout(hist, ordering)
    dots = []
    for book in shelf_books:
        if book.ungenred:
            continue
        pos, _ = _weighted_anchor_centroid(book.genres, hist, layout)
        dots.append((book.book_id, pos))

    n = len(dots)
    if n == 0:
        density = np.zeros((GRID_SIZE, GRID_SIZE))
        return TasteModel(histogram=hist, layout=layout, dots=dots,
                          density=density, density_max=0.0, bandwidth=BANDWIDTH_FLOOR)
    centers = np.asarray([p for _, p in dots], dtype=np.float64)
    if n >= 2:
        sigma = float((centers.std(axis=0)).mean())
    else:
        sigma = 0.0
    h = max(n ** (-1.0 / 6.0) * sigma, BANDWIDTH_FLOOR)

    gx, gy = np.meshgrid(_GRID_AXIS, _GRID_AXIS)  # gx varies along columns
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    density = np.exp(-d2 / (2.0 * h * h)).sum(axis=1) / (n * 2.0 * math.pi * h * h)
    density = density.reshape(GRID_SIZE, GRID_SIZE)
    return TasteModel(histogram=hist, layout=layout, dots=dots, density=density,
                      density_max=float(density.max()), bandwidth=h)


# ---------------------------------------------------------------------------
# topographic contours (marching squares over the density grid)


@dataclass
class ContourLevel:
    quantile: float
    threshold: float
    polylines: list[list[tuple[float, float]]]  # each closed: first == last


def _marching_squares(f: np.ndarray, threshold: float,
                      xs: np.ndarray, ys: np.ndarray) -> list[list[tuple[float, float]]]:
    """Closed iso-lines of f >= threshold; the field is padded below the
    level so every loop closes inside the (extended) bounds."""
    pad_val = min(float(f.min()), threshold) - 1.0
    fp = np.pad(f, 1, constant_values=pad_val)
    step_x = xs[1] - xs[0]
    step_y = ys[1] - ys[0]
    xs_p = np.concatenate([[xs[0] - step_x], xs, [xs[-1] + step_x]])
    ys_p = np.concatenate([[ys[0] - step_y], ys, [ys[-1] + step_y]])

    above = fp >= threshold
    corner_sum = (above[:-1, :-1].astype(int) + above[:-1, 1:]
                  + above[1:, :-1] + above[1:, 1:])
    mixed = np.argwhere((corner_sum > 0) & (corner_sum < 4))

    def edge_point(edge):
        kind, i, j = edge
        if kind == "h":
            va, vb = fp[i, j], fp[i, j + 1]
            t = (threshold - va) / (vb - va)
            return (xs_p[j] + t * step_x, ys_p[i])
        va, vb = fp[i, j], fp[i + 1, j]
        t = (threshold - va) / (vb - va)
        return (xs_p[j], ys_p[i] + t * step_y)

    segments = []
    for i, j in mixed:
        tl, tr = above[i, j], above[i, j + 1]
        bl, br = above[i + 1, j], above[i + 1, j + 1]
        top, bottom = ("h", i, j), ("h", i + 1, j)
        left, right = ("v", i, j), ("v", i, j + 1)
        crossed_pairs = []
        if tl != tr:
            crossed_pairs.append(top)
        if bl != br:
            crossed_pairs.append(bottom)
        if tl != bl:
            crossed_pairs.append(left)
        if tr != br:
            crossed_pairs.append(right)
        if len(crossed_pairs) == 2:
            segments.append((crossed_pairs[0], crossed_pairs[1]))
        elif len(crossed_pairs) == 4:
            center_high = (fp[i, j] + fp[i, j + 1] + fp[i + 1, j] + fp[i + 1, j + 1]) / 4.0 >= threshold
            diag_tl = bool(tl)  # saddle orientation: which diagonal is high
            if (diag_tl and center_high) or (not diag_tl and not center_high):
                segments.append((top, right))
                segments.append((bottom, left))
            else:
                segments.append((top, left))
                segments.append((bottom, right))

    adj: dict[tuple, list[tuple]] = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for nbrs in adj.values():
        nbrs.sort()

    polylines = []
    visited = set()
    for start in sorted(adj):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        current = start
        while True:
            nxt = None
            for cand in adj[current]:
                if cand not in visited:
                    nxt = cand
                    break
            if nxt is None:
                break
            visited.add(nxt)
            loop.append(nxt)
            current = nxt
        pts = [edge_point(e) for e in loop]
        pts.append(pts[0])
        polylines.append(pts)
    return polylines


def selfie_contours(model: TasteModel,
                    quantiles: tuple[float, ...] = CONTOUR_QUANTILES) -> list[ContourLevel]:
    """Contours at quantiles of the positive density values.

    Quantile levels adapt to library size: a 6-book and a 1200-book shelf
    both get meaningful rings. An all-zero field has no contours.
    """
    positive = model.density[model.density > 0.0]
    if positive.size == 0:
        return []
    out = []
    for q in quantiles:
        thr = float(np.quantile(positive, q))
        polys = _marching_squares(model.density, thr, _GRID_AXIS, _GRID_AXIS)
        out.append(ContourLevel(quantile=q, threshold=thr, polylines=polys))
    return out


# ---------------------------------------------------------------------------
# per-view data products


@dataclass
class BookSelfieData:
    author_name: str
    avg_rating: float
    ratings_count: int
    ratings_distance: float
    reviews_count: int
    palette: Palette


def book_selfie_data(book: BookRecord, catalog: Catalog, palette: Palette) -> BookSelfieData:
    """Single-book symbol data; components render clockwise in field order.

    ratings_distance is the signed gap between the book's average and its
    shrunk estimate (v*R + m*C) / (v + m), where m is the catalog's median
    ratings count and C the catalog mean rating: sparsely rated books get
    pulled toward the crowd before the comparison.
    """
    v = book.ratings_count
    m = catalog.median_ratings_count
    c = catalog.catalog_mean_rating
    r = book.avg_rating
    bayes = (v * r + m * c) / (v + m) if (v + m) > 0 else c
    return BookSelfieData(
        author_name=book.primary_author,
        avg_rating=r,
        ratings_count=v,
        ratings_distance=r - bayes,
        reviews_count=book.reviews_count,
        palette=palette,
    )


@dataclass
class SimilarGrid:
    cells: list[list[list[tuple[str, float]]]]  # [y][x] -> [(book_id, trust)]
    x_edges: list[float]                        # 6 year edges, monotone
    y_edges: list[float]                        # 6 rating edges, monotone
    empty: bool = False

    @classmethod
    def empty_grid(cls) -> "SimilarGrid":
        return cls(cells=[[[] for _ in range(5)] for _ in range(5)],
                   x_edges=[0.0] * 6, y_edges=[0.0] * 6, empty=True)


_BIN_EPS = 1e-9


def _to_bin(value: float, lo: float, hi: float) -> int:
    b = int(math.floor(5.0 * (value - lo) / (hi - lo + _BIN_EPS)))
    return min(max(b, 0), 4)


def similar_grid(book: BookRecord, catalog: Catalog) -> SimilarGrid:
    """Rescale the similar set's years and ratings into a fixed 5x5 grid.

    Trust is log ratings count relative to the set's most-rated book. A
    single similar book sits in the center cell; an empty set returns a
    grid flagged for hidden rendering.
    """
    sims = similar_books(catalog, book.book_id)
    if not sims:
        return SimilarGrid.empty_grid()
    years = [b.publication_year for b in sims]
    ratings = [b.avg_rating for b in sims]
    y_lo, y_hi = min(years), max(years)
    r_lo, r_hi = min(ratings), max(ratings)
    x_edges = [y_lo + t * (y_hi - y_lo + _BIN_EPS) / 5.0 for t in range(6)]
    y_edges = [r_lo + t * (r_hi - r_lo + _BIN_EPS) / 5.0 for t in range(6)]
    max_rc = max(b.ratings_count for b in sims)
    cells: list[list[list[tuple[str, float]]]] = [[[] for _ in range(5)] for _ in range(5)]
    for b in sims:
        if len(sims) == 1:
            xb = yb = 2
        else:
            xb = _to_bin(b.publication_year, y_lo, y_hi)
            yb = _to_bin(b.avg_rating, r_lo, r_hi)
        trust = math.log1p(b.ratings_count) / math.log1p(max_rc) if max_rc > 0 else 0.0
        cells[yb][xb].append((b.book_id, trust))
    return SimilarGrid(cells=cells, x_edges=x_edges, y_edges=y_edges, empty=False)


@dataclass
class TimelineTile:
    book_id: str | None        # None marks a hidden filler tile
    year: int | None
    palette: Palette | None
    is_focus: bool = False

    @property
    def hidden(self) -> bool:
        return self.book_id is None


@dataclass
class AuthorTimeline:
    tiles: list[TimelineTile]
    focus_index: int


def author_timeline(book: BookRecord, catalog: Catalog,
                    palettes: dict[str, Palette]) -> AuthorTimeline:
    """Carousel of the author's books by year, padded with hidden tiles.

    Sparse authors still get a five-tile strip: hidden tiles are appended
    right, then left, alternating, until the minimum is met.
    """
    row = books_by_author(catalog, book.primary_author)
    tiles = [TimelineTile(book_id=b.book_id, year=b.publication_year,
                          palette=palettes.get(b.book_id),
                          is_focus=(b.book_id == book.book_id)) for b in row]
    if not any(t.is_focus for t in tiles):
        tiles.append(TimelineTile(book_id=book.book_id, year=book.publication_year,
                                  palette=palettes.get(book.book_id), is_focus=True))
    hidden = TimelineTile(book_id=None, year=None, palette=None)
    append_right = True
    while len(tiles) < MIN_TIMELINE_TILES:
        if append_right:
            tiles.append(hidden)
        else:
            tiles.insert(0, hidden)
        append_right = not append_right
    focus_index = next(i for i, t in enumerate(tiles) if t.is_focus)
    return AuthorTimeline(tiles=tiles, focus_index=focus_index)


@dataclass
class RoseSector:
    book_id: str
    user_rating: int   # 0 means unrated
    avg_rating: float


@dataclass
class RoseData:
    sectors: list[RoseSector]

    @property
    def sector_angle(self) -> float:
        return 2.0 * math.pi / len(self.sectors)


def my_rose(shelf: list[tuple[BookRecord, int | None]]) -> RoseData:
    """Rose diagram data: the user's rating against the crowd's, per book.

    Sector order is shelf insertion order; both radii share the 0..5 scale.
    """
    if not shelf:
        raise EmptyLibraryError("rose needs at least one shelved book")
    sectors = []
    for book, user_rating in shelf:
        ur = int(user_rating) if user_rating else 0
        if not 0 <= ur <= 5:
            raise ValidationError(f"user rating {ur} outside 0..5")
        sectors.append(RoseSector(book_id=book.book_id, user_rating=ur,
                                  avg_rating=book.avg_rating))
    return RoseData(sectors=sectors)
