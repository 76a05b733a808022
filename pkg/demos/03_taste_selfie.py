"""A user's taste selfie: genre histogram, bell layout, dot cloud, density
contours, and how a new book fits into the picture.

Run:  python3 demos/03_taste_selfie.py
"""

from pathlib import Path

from bookvis import taste, vizgen
from bookvis.catalog import BookRecord
from bookvis.service import DEFAULT_THEME

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def shelf_book(i, genres):
    return BookRecord(book_id=f"shelf-{i:03d}", title=f"Shelf Book {i}",
                      authors=("Someone",), publication_year=1980 + i % 40,
                      avg_rating=3.5 + (i % 15) * 0.1, ratings_count=50 * (i + 1),
                      reviews_count=i, genres=tuple(genres), similar_ids=(),
                      cover_ref="none.png")


# a reader who mostly lives in fantasy with occasional forays elsewhere
profiles = [("fantasy", "magic"), ("fantasy", "epic"), ("magic", "epic"),
            ("fantasy",), ("history", "war"), ("fantasy", "magic", "epic"),
            ("science", "space")]
shelf = [shelf_book(i, profiles[i % len(profiles)]) for i in range(42)]

model = taste.build_taste_model(shelf, ordering="bell")
print(f"library: {model.histogram.total_books} books, "
      f"{len(model.histogram.counts)} genres")
for genre, count in sorted(model.histogram.counts.items(), key=lambda e: -e[1]):
    bar = "#" * count
    print(f"  {genre:<10} {bar} {count}")
print(f"dots: {len(model.dots)}, bandwidth {model.bandwidth:.3f}, "
      f"peak density {model.density_max:.2f}")

levels = taste.selfie_contours(model)
for level in levels:
    print(f"contour q={level.quantile}: threshold {level.threshold:.4f}, "
          f"{len(level.polylines)} loop(s)")

doc = vizgen.render("data_selfie", model, DEFAULT_THEME)
(OUT / "data_selfie.svg").write_text(doc.svg, encoding="utf-8")

candidates = [
    ("core", ("fantasy", "magic")),       # the reader's home turf
    ("fringe", ("history",)),             # read occasionally, off the dot mass
    ("offbeat", ("science", "space")),    # rare combination in this library
]
for name, genres in candidates:
    book = shelf_book(999, genres)
    fit = taste.place_book(book, model)
    print(f"\n{name} candidate {genres}: fitness {fit.fitness:.3f} "
          f"at ({fit.position[0]:+.2f}, {fit.position[1]:+.2f})")
    doc = vizgen.render("how_it_fits", (model, fit), DEFAULT_THEME)
    (OUT / f"how_it_fits_{name}.svg").write_text(doc.svg, encoding="utf-8")

print(f"\nwrote data_selfie.svg and three how_it_fits_*.svg files to {OUT}")
