import json

import pytest

from bookvis.catalog import BookRecord, Catalog, load_catalog
from bookvis.synthcovers import cover_png_bytes


def make_book(book_id, title=None, authors=("Alex Writer",), year=2000,
              avg_rating=4.0, ratings_count=100, reviews_count=10,
              genres=("fiction",), similar_ids=(), cover_ref=None,
              edition_label=None):
    return BookRecord(
        book_id=book_id,
        title=title or f"Title {book_id}",
        authors=tuple(authors),
        publication_year=year,
        avg_rating=avg_rating,
        ratings_count=ratings_count,
        reviews_count=reviews_count,
        genres=tuple(genres),
        similar_ids=tuple(similar_ids),
        cover_ref=cover_ref or f"{book_id}.png",
        edition_label=edition_label,
    )


def make_catalog(books):
    return Catalog(books={b.book_id: b for b in books})


def book_json(book_id, **kw):
    obj = {
        "book_id": book_id,
        "title": kw.get("title", f"Title {book_id}"),
        "authors": kw.get("authors", ["Alex Writer"]),
        "publication_year": kw.get("year", 2000),
        "avg_rating": kw.get("avg_rating", 4.0),
        "ratings_count": kw.get("ratings_count", 100),
        "reviews_count": kw.get("reviews_count", 10),
        "genres": kw.get("genres", ["fiction"]),
        "similar_ids": kw.get("similar_ids", []),
        "cover_ref": kw.get("cover_ref", f"{book_id}.png"),
    }
    if "edition_label" in kw:
        obj["edition_label"] = kw["edition_label"]
    return obj


GENRE_POOL = [
    ["fantasy", "magic"], ["fantasy", "epic"], ["history", "war"],
    ["science", "physics"], ["romance"], ["mystery", "crime"],
    ["poetry"], ["history", "biography"], ["science", "nature"],
    ["fantasy", "magic", "epic"],
]


@pytest.fixture(scope="session")
def demo_corpus(tmp_path_factory):
    """Eight synthetic covers with a catalog on disk; shared by index,
    service, and CLI tests."""
    root = tmp_path_factory.mktemp("demo_corpus")
    covers = root / "covers"
    covers.mkdir()
    lines = []
    for i in range(8):
        (covers / f"c{i}.png").write_bytes(cover_png_bytes(100 + i))
        lines.append(json.dumps(book_json(
            f"b{i}",
            title=f"Book {i}",
            authors=[f"Author {i % 3}"],
            year=1990 + i,
            avg_rating=3.8 + (i % 7) * 0.1,
            ratings_count=100 * (i + 1),
            reviews_count=10 * i,
            genres=GENRE_POOL[i],
            similar_ids=[f"b{(i + 1) % 8}", f"b{(i + 2) % 8}"],
            cover_ref=f"covers/c{i}.png",
        )))
    catalog_path = root / "catalog.jsonl"
    catalog_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def demo_catalog(demo_corpus):
    return load_catalog(demo_corpus / "catalog.jsonl")


@pytest.fixture(scope="session")
def demo_index(demo_corpus, demo_catalog, tmp_path_factory):
    """Trained tree + finalized index over the demo corpus, saved to disk."""
    from bookvis.features import decode_image, extract_descriptors
    from bookvis.vocab_index import InvertedIndex, save_index, train_tree

    corpus = []
    for i in range(8):
        data = (demo_corpus / "covers" / f"c{i}.png").read_bytes()
        corpus.append(extract_descriptors(decode_image(data)))
    tree = train_tree(corpus, k=8, L=3, seed=42)
    index = InvertedIndex()
    for i, ds in enumerate(corpus):
        index.add_document(tree, i, ds, f"b{i}")
    index.finalize(tree)
    path = tmp_path_factory.mktemp("index") / "demo.bvix"
    save_index(path, tree, index)
    return {"tree": tree, "index": index, "path": path, "corpus": corpus}
