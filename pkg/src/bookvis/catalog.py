"""Book, author, and genre metadata: ingestion, lookups, and the
pluggable metadata-client hook that turns a recognition match into a
full record.

The catalog is a JSON-Lines file (one record per line) loaded into an
immutable in-memory structure. Malformed lines are skipped and counted
rather than aborting the load; zero valid records is an error.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCatalogError, NotFoundError, ValidationError

JSONL_KEYS = ("book_id", "title", "authors", "publication_year", "avg_rating",
              "ratings_count", "reviews_count", "genres", "similar_ids", "cover_ref")


def canonicalize_genre(raw: str) -> str:
    """Lowercase, trim, and collapse internal whitespace.

    Canonical labels are what histograms and orderings key on, so every
    genre entering the system passes through here.
    """
    label = " ".join(str(raw).split()).lower()
    if not label:
        raise ValidationError(f"genre {raw!r} canonicalizes to empty")
    return label


@dataclass(frozen=True)
class BookRecord:
    book_id: str
    title: str
    authors: tuple[str, ...]
    publication_year: int
    avg_rating: float
    ratings_count: int
    reviews_count: int
    genres: tuple[str, ...]          # canonical labels
    similar_ids: tuple[str, ...]
    cover_ref: str
    edition_label: str | None = None
    language: str | None = None

    @property
    def primary_author(self) -> str:
        # downstream logic keys on the first listed author only
        return self.authors[0]

    @property
    def ungenred(self) -> bool:
        return not self.genres

    def to_json(self) -> dict:
        obj = {
            "book_id": self.book_id,
            "title": self.title,
            "authors": list(self.authors),
            "publication_year": self.publication_year,
            "avg_rating": self.avg_rating,
            "ratings_count": self.ratings_count,
            "reviews_count": self.reviews_count,
            "genres": list(self.genres),
            "similar_ids": list(self.similar_ids),
            "cover_ref": self.cover_ref,
        }
        if self.edition_label is not None:
            obj["edition_label"] = self.edition_label
        if self.language is not None:
            obj["language"] = self.language
        return obj


def _parse_record(obj: dict) -> BookRecord:
    for key in JSONL_KEYS:
        if key not in obj:
            raise ValidationError(f"missing key {key!r}")
    authors = [str(a) for a in obj["authors"] if str(a).strip()]
    if not authors:
        raise ValidationError("authors must be non-empty")
    avg_rating = float(obj["avg_rating"])
    if not 0.0 <= avg_rating <= 5.0:
        raise ValidationError(f"avg_rating {avg_rating} outside [0, 5]")
    ratings_count = int(obj["ratings_count"])
    reviews_count = int(obj["reviews_count"])
    if ratings_count < 0 or reviews_count < 0:
        raise ValidationError("counts must be >= 0")
    book_id = str(obj["book_id"])
    genres = []
    for g in obj["genres"]:
        try:
            label = canonicalize_genre(g)
        except ValidationError:
            continue  # empty labels vanish; a record may end up ungenred
        if label not in genres:
            genres.append(label)
    similar = [str(s) for s in obj["similar_ids"] if str(s) != book_id]
    return BookRecord(
        book_id=book_id,
        title=str(obj["title"]),
        authors=tuple(authors),
        publication_year=int(obj["publication_year"]),
        avg_rating=avg_rating,
        ratings_count=ratings_count,
        reviews_count=reviews_count,
        genres=tuple(genres),
        similar_ids=tuple(similar),
        cover_ref=str(obj["cover_ref"]),
        edition_label=obj.get("edition_label"),
        language=obj.get("language"),
    )


@dataclass
class Catalog:
    books: dict[str, BookRecord]
    authors: dict[str, list[str]] = field(default_factory=dict)
    catalog_mean_rating: float = 0.0
    median_ratings_count: int = 0
    skipped_lines: int = 0
    source_path: str | None = None

    def __post_init__(self):
        self._rebuild_stats()

    def _rebuild_stats(self) -> None:
        self.authors = {}
        for book in self.books.values():
            self.authors.setdefault(book.primary_author, []).append(book.book_id)
        if self.books:
            self.catalog_mean_rating = sum(b.avg_rating for b in self.books.values()) / len(self.books)
            self.median_ratings_count = int(
                statistics.median_low(b.ratings_count for b in self.books.values()))

    def get(self, book_id: str) -> BookRecord:
        rec = self.books.get(book_id)
        if rec is None:
            raise NotFoundError(f"unknown book_id {book_id!r}")
        return rec


def load_catalog(path) -> Catalog:
    """Load a JSONL catalog; malformed lines are skipped and counted."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read catalog {p}: {exc}") from exc

    books: dict[str, BookRecord] = {}
    skipped = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            rec = _parse_record(json.loads(line))
        except (json.JSONDecodeError, ValidationError, KeyError, TypeError, ValueError):
            skipped += 1
            continue
        if rec.book_id in books:
            skipped += 1
            continue
        books[rec.book_id] = rec
    if not books:
        raise EmptyCatalogError(f"no valid records in {p}")
    return Catalog(books=books, skipped_lines=skipped, source_path=str(p))


def save_catalog(catalog: Catalog, path) -> None:
    """Serialize back to JSONL; load(save(load(x))) is record-set idempotent."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for book_id in catalog.books:
            fh.write(json.dumps(catalog.books[book_id].to_json(), ensure_ascii=False))
            fh.write("\n")


def books_by_author(catalog: Catalog, author: str) -> list[BookRecord]:
    """All books whose primary author matches, by (year, title) ascending."""
    ids = catalog.authors.get(author, [])
    records = [catalog.books[i] for i in ids]
    records.sort(key=lambda b: (b.publication_year, b.title))
    return records


def similar_books(catalog: Catalog, book_id: str) -> list[BookRecord]:
    """Dereference a book's similar list, dropping ids not in the catalog."""
    rec = catalog.get(book_id)
    return [catalog.books[s] for s in rec.similar_ids if s in catalog.books]


class MetadataClient:
    """Resolves a recognized book id into the freshest available record.

    The local implementation reads the loaded catalog; a remote client can
    implement the same surface to pull point-in-time data from elsewhere.
    """

    def resolve(self, book_id: str) -> BookRecord:
        raise NotImplementedError


class LocalCatalogClient(MetadataClient):
    def __init__(self, catalog: Catalog):
        self.catalog = catalog

    def resolve(self, book_id: str) -> BookRecord:
        return self.catalog.get(book_id)


def resolve_book(client: MetadataClient, match) -> BookRecord:
    """Resolve a recognition match (anything carrying .book_id) to a record."""
    book_id = match.book_id if hasattr(match, "book_id") else str(match)
    return client.resolve(book_id)
