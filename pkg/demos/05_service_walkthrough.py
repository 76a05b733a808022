"""Walk the HTTP API the way the web client does: build a corpus and index,
start the app in-process, recognize a photo, theme from the palette, save
to a shelf, and fetch the user-side views.

Run:  python3 demos/05_service_walkthrough.py
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from bookvis.service import ServiceConfig, create_app
from bookvis.synthcovers import cover_png_bytes, make_cover, rotate, to_png_bytes

root = Path(tempfile.mkdtemp(prefix="bookvis-demo-"))
covers = root / "covers"
covers.mkdir()

genre_pool = [["fantasy", "magic"], ["history"], ["fantasy", "epic"],
              ["science"], ["mystery", "crime"], ["fantasy", "magic", "epic"]]
lines = []
for i in range(6):
    (covers / f"c{i}.png").write_bytes(cover_png_bytes(600 + i))
    lines.append(json.dumps({
        "book_id": f"w{i}", "title": f"Walk Book {i}", "authors": [f"W. Author {i % 2}"],
        "publication_year": 2000 + i, "avg_rating": 3.9 + i * 0.08,
        "ratings_count": 120 * (i + 1), "reviews_count": 9 * i,
        "genres": genre_pool[i], "similar_ids": [f"w{(i + 1) % 6}", f"w{(i + 2) % 6}"],
        "cover_ref": f"covers/c{i}.png"}))
(root / "catalog.jsonl").write_text("\n".join(lines) + "\n")

print("building the index via the CLI...")
subprocess.run([sys.executable, "-m", "bookvis.cli", "index", "build",
                "--catalog", str(root / "catalog.jsonl"), "--covers", str(root),
                "--branch-factor", "6", "--depth", "2", "--seed", "1",
                "--out", str(root / "walk.bvix")], check=True,
               stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)

config = ServiceConfig(catalog_path=str(root / "catalog.jsonl"),
                       index_path=str(root / "walk.bvix"),
                       data_dir=str(root / "data"), covers_dir=str(root))
client = TestClient(create_app(config))

print("\n1. snap a (tilted) photo of cover 2 and recognize it")
photo = to_png_bytes(rotate(make_cover(602), 8))
body = client.post("/api/recognize",
                   files={"image": ("photo.png", photo, "image/png")}).json()
top = body["matches"][0]
print(f"   -> {top['book_id']} {top['title']!r} "
      f"(confidence {top['confidence']:.2f})")

print("2. theme the UI from the cover palette")
palette = client.get(f"/api/books/{top['book_id']}/palette").json()
print(f"   colors: {[c['hex'] for c in palette['colors']]}")
print(f"   theme:  {palette['theme']}")

print("3. fetch the three book-side views")
for view in ("selfie.svg", "similar-grid.svg", "author-timeline.svg"):
    r = client.get(f"/api/books/{top['book_id']}/{view}")
    print(f"   {view}: {r.status_code}, {len(r.content)} bytes, "
          f"hash {r.headers['x-content-hash'][:12]}...")

print("4. create a user, save a few books (long-press), re-check the selfie")
uid = client.post("/api/users", json={"display_name": "Demo Reader"}).json()["user_id"]
for book_id, rating in [("w0", 5), ("w2", 4), ("w5", 5), ("w1", 3)]:
    client.post(f"/api/users/{uid}/shelves/saved/books",
                json={"book_id": book_id, "rating": rating})
selfie = client.get(f"/api/users/{uid}/data-selfie.json").json()
print(f"   histogram: {selfie['histogram']}")

print("5. user-side views: dataSelfie, How-it-fits, myRose")
fit = client.get(f"/api/users/{uid}/fit/{top['book_id']}").json()
print(f"   fit of {top['book_id']}: fitness {fit['fit']['fitness']:.3f}, "
      f"overlap {fit['fit']['overlap']}")
for url in (f"/api/users/{uid}/data-selfie.svg?book={top['book_id']}",
            fit["svg"], f"/api/users/{uid}/rose.svg?book={top['book_id']}"):
    r = client.get(url)
    print(f"   GET {url.split('?')[0]}: {r.status_code}")

print(f"\nworkspace: {root}")
