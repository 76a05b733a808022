"""The three book-side views for a single recognized book: bookSelfie,
author timeline (with hidden-tile padding), and the 5x5 similar-books grid.

Run:  python3 demos/04_book_views.py
"""

import json
from pathlib import Path

from bookvis import taste, vizgen
from bookvis.catalog import load_catalog
from bookvis.features import decode_image
from bookvis.palette import dominant_colors, theme_from_palette
from bookvis.synthcovers import cover_png_bytes

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# desk catalog: one author with three books, another with one, plus similars
records = []
for i in range(10):
    author = "Prolific Penner" if i < 3 else ("Single Hit" if i == 3 else f"Other {i}")
    records.append({
        "book_id": f"d{i}", "title": f"Demo Volume {i}", "authors": [author],
        "publication_year": 1995 + 4 * i, "avg_rating": 3.8 + (i % 8) * 0.08,
        "ratings_count": 10 ** (1 + i % 4), "reviews_count": 12 * i,
        "genres": ["fantasy", "magic"] if i % 2 else ["history"],
        "similar_ids": [f"d{j}" for j in range(10) if j != i][:6],
        "cover_ref": f"d{i}.png",
    })
catalog_path = OUT / "demo_catalog.jsonl"
catalog_path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
catalog = load_catalog(catalog_path)

palettes = {}
for i in range(10):
    raster = decode_image(cover_png_bytes(400 + i))
    palettes[f"d{i}"] = dominant_colors(raster, k=4, seed=0, source_book=f"d{i}")

focus = catalog.books["d1"]
theme = theme_from_palette(palettes["d1"])

selfie = taste.book_selfie_data(focus, catalog, palettes["d1"])
print(f"bookSelfie for {focus.title!r}: author {selfie.author_name}, "
      f"avg {selfie.avg_rating:.2f} over {selfie.ratings_count} ratings, "
      f"distance {selfie.ratings_distance:+.3f}, {selfie.reviews_count} reviews")
(OUT / "book_selfie.svg").write_text(
    vizgen.render("book_selfie", selfie, theme).svg, encoding="utf-8")

timeline = taste.author_timeline(focus, catalog, palettes)
real = sum(1 for t in timeline.tiles if not t.hidden)
print(f"author timeline: {len(timeline.tiles)} tiles ({real} real), "
      f"focus at index {timeline.focus_index}")
(OUT / "author_timeline.svg").write_text(
    vizgen.render("author_timeline", timeline, theme).svg, encoding="utf-8")

solo = catalog.books["d3"]
solo_tl = taste.author_timeline(solo, catalog, palettes)
hidden = sum(1 for t in solo_tl.tiles if t.hidden)
print(f"single-book author: {hidden} hidden tiles pad the strip to "
      f"{len(solo_tl.tiles)}")
(OUT / "author_timeline_padded.svg").write_text(
    vizgen.render("author_timeline", solo_tl, theme).svg, encoding="utf-8")

grid = taste.similar_grid(focus, catalog)
occupied = sum(1 for y in range(5) for x in range(5) if grid.cells[y][x])
print(f"similar grid: {occupied} occupied cells, years "
      f"{grid.x_edges[0]:.0f}..{grid.x_edges[5]:.0f}")
(OUT / "similar_grid.svg").write_text(
    vizgen.render("similar_grid", grid, theme).svg, encoding="utf-8")

rose = taste.my_rose([(catalog.books[f"d{i}"], (i % 5) + 1) for i in range(6)])
(OUT / "my_rose.svg").write_text(
    vizgen.render("my_rose", rose, theme).svg, encoding="utf-8")
print(f"myRose: {len(rose.sectors)} sectors of "
      f"{rose.sector_angle:.2f} rad each")

print(f"\nwrote five SVG views to {OUT}")
