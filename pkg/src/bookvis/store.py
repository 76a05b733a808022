"""File-backed user store: profiles, shelves, and ratings.

One JSON document per user under ``{data_dir}/users/``, written with
temp-file-then-rename so a crash mid-write never corrupts state. Mutations
take a per-user lock; reads see the last fully committed document.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .catalog import BookRecord, Catalog
from .errors import FormatError, NotFoundError, ValidationError

DEFAULT_SHELF = "saved"
CSV_REQUIRED_HEADERS = ("Book Id", "Title", "Author", "My Rating",
                        "Average Rating", "Bookshelves", "Date Added")


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class ShelfEntry:
    book_id: str
    user_rating: int | None
    added_at: str

    def to_json(self) -> dict:
        return {"book_id": self.book_id, "user_rating": self.user_rating,
                "added_at": self.added_at}

    @classmethod
    def from_json(cls, obj: dict) -> "ShelfEntry":
        return cls(book_id=obj["book_id"], user_rating=obj.get("user_rating"),
                   added_at=obj["added_at"])


@dataclass
class UserProfile:
    user_id: str
    display_name: str
    shelves: dict[str, list[ShelfEntry]]
    created_at: str
    updated_at: str

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "display_name": self.display_name,
            "shelves": {name: [e.to_json() for e in entries]
                        for name, entries in self.shelves.items()},
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "UserProfile":
        return cls(
            user_id=obj["user_id"],
            display_name=obj["display_name"],
            shelves={name: [ShelfEntry.from_json(e) for e in entries]
                     for name, entries in obj["shelves"].items()},
            created_at=obj["created_at"],
            updated_at=obj["updated_at"],
        )


@dataclass
class ImportReport:
    imported: int
    unmatched: list[dict] = field(default_factory=list)
    shelves_touched: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"schema": "bookvis/1", "imported": self.imported,
                "unmatched": self.unmatched, "shelves_touched": self.shelves_touched}


def _validate_rating(rating) -> int | None:
    if rating is None:
        return None
    r = int(rating)
    if not 1 <= r <= 5:
        raise ValidationError(f"rating {r} outside 1..5")
    return r


class Store:
    """All user-document reads and writes go through one Store instance."""

    def __init__(self, data_dir):
        self.users_dir = Path(data_dir) / "users"
        self.users_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, user_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(user_id, threading.Lock())

    def _path(self, user_id: str) -> Path:
        return self.users_dir / f"{user_id}.json"

    def _write(self, profile: UserProfile) -> None:
        # temp file in the same directory so the rename is atomic
        path = self._path(profile.user_id)
        fd, tmp = tempfile.mkstemp(dir=self.users_dir, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(profile.to_json(), fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # -- public surface ----------------------------------------------------

    def create_user(self, display_name: str) -> UserProfile:
        now = _now_iso()
        profile = UserProfile(user_id=uuid.uuid4().hex, display_name=display_name,
                              shelves={DEFAULT_SHELF: []}, created_at=now, updated_at=now)
        self._write(profile)
        return profile

    def get_user(self, user_id: str) -> UserProfile:
        path = self._path(user_id)
        if not path.exists():
            raise NotFoundError(f"unknown user {user_id!r}")
        with open(path, encoding="utf-8") as fh:
            return UserProfile.from_json(json.load(fh))

    def ensure_user(self, user_id: str, display_name: str | None = None) -> UserProfile:
        """Fetch a user, creating the profile under the given id if absent.

        Operator tooling addresses users by chosen ids (import targets),
        so unlike create_user this does not mint a fresh uuid.
        """
        if not user_id or "/" in user_id or user_id.startswith("."):
            raise ValidationError(f"invalid user id {user_id!r}")
        with self._lock(user_id):
            if self.user_exists(user_id):
                return self.get_user(user_id)
            now = _now_iso()
            profile = UserProfile(user_id=user_id, display_name=display_name or user_id,
                                  shelves={DEFAULT_SHELF: []}, created_at=now,
                                  updated_at=now)
            self._write(profile)
            return profile

    def user_exists(self, user_id: str) -> bool:
        return self._path(user_id).exists()

    def add_to_shelf(self, user_id: str, shelf: str, book_id: str,
                     rating: int | None = None) -> None:
        """Upsert one entry; the shelf is created on first use.

        Re-adding a book overwrites its rating; doing it twice with the same
        arguments leaves the same state as doing it once.
        """
        rating = _validate_rating(rating)
        if not shelf or not shelf.strip():
            raise ValidationError("shelf name must be non-empty")
        with self._lock(user_id):
            profile = self.get_user(user_id)
            entries = profile.shelves.setdefault(shelf, [])
            now = _now_iso()
            for entry in entries:
                if entry.book_id == book_id:
                    entry.user_rating = rating
                    break
            else:
                entries.append(ShelfEntry(book_id=book_id, user_rating=rating,
                                          added_at=now))
            profile.updated_at = now
            self._write(profile)

    def import_shelves(self, user_id: str, csv_bytes: bytes,
                       catalog: Catalog) -> ImportReport:
        """Bulk-load a ratings-export CSV into the user's shelves.

        Rows match the catalog by book id first, then by exact
        (title, primary author) case-insensitively; unmatched rows are
        reported, not imported. A zero "My Rating" means unrated, and rows
        without shelf names land on the default shelf.
        """
        text = csv_bytes.decode("utf-8-sig")
        reader = csv.DictReader(io.StringIO(text))
        headers = reader.fieldnames or []
        missing = [h for h in CSV_REQUIRED_HEADERS if h not in headers]
        if missing:
            raise FormatError(f"CSV missing required headers: {', '.join(missing)}")

        by_title_author = {
            (b.title.casefold(), b.primary_author.casefold()): b.book_id
            for b in catalog.books.values()
        }
        report = ImportReport(imported=0)
        shelves_touched: list[str] = []
        with self._lock(user_id):
            profile = self.get_user(user_id)
            now = _now_iso()
            for idx, row in enumerate(reader, start=2):
                book_id = (row.get("Book Id") or "").strip()
                if book_id not in catalog.books:
                    key = ((row.get("Title") or "").strip().casefold(),
                           (row.get("Author") or "").strip().casefold())
                    book_id = by_title_author.get(key, "")
                if not book_id:
                    report.unmatched.append({"row": idx, "title": (row.get("Title") or "").strip()})
                    continue
                raw_rating = (row.get("My Rating") or "").strip()
                rating = None
                if raw_rating and raw_rating != "0":
                    try:
                        rating = _validate_rating(raw_rating)
                    except (ValidationError, ValueError):
                        rating = None
                names = [s.strip() for s in (row.get("Bookshelves") or "").split(",") if s.strip()]
                if not names:
                    names = [DEFAULT_SHELF]
                for shelf in names:
                    entries = profile.shelves.setdefault(shelf, [])
                    for entry in entries:
                        if entry.book_id == book_id:
                            entry.user_rating = rating
                            break
                    else:
                        entries.append(ShelfEntry(book_id=book_id, user_rating=rating,
                                                  added_at=now))
                    if shelf not in shelves_touched:
                        shelves_touched.append(shelf)
                report.imported += 1
            profile.updated_at = now
            self._write(profile)
        report.shelves_touched = shelves_touched
        return report

    def list_shelf_books(self, user_id: str, shelf: str,
                         catalog: Catalog) -> tuple[list[tuple[BookRecord, int | None]], int]:
        """Join one shelf against the catalog; dangling ids are counted, not returned."""
        profile = self.get_user(user_id)
        if shelf not in profile.shelves:
            raise NotFoundError(f"user {user_id!r} has no shelf {shelf!r}")
        items = []
        skipped = 0
        for entry in profile.shelves[shelf]:
            rec = catalog.books.get(entry.book_id)
            if rec is None:
                skipped += 1
                continue
            items.append((rec, entry.user_rating))
        return items, skipped

    def library_union(self, user_id: str,
                      catalog: Catalog) -> list[tuple[BookRecord, int | None]]:
        """Every shelved book once, with its most recent rating.

        Shelves overlap (a book can sit on several lists); user-level views
        treat the library as the union. The rating kept is the one from the
        most recently added entry that actually carries a rating.
        """
        profile = self.get_user(user_id)
        best: dict[str, tuple[str, int | None]] = {}
        for entries in profile.shelves.values():
            for entry in entries:
                prev = best.get(entry.book_id)
                if prev is None:
                    best[entry.book_id] = (entry.added_at, entry.user_rating)
                    continue
                prev_at, prev_rating = prev
                if entry.user_rating is not None and (prev_rating is None or entry.added_at >= prev_at):
                    best[entry.book_id] = (entry.added_at, entry.user_rating)
                elif entry.added_at >= prev_at and prev_rating is None:
                    best[entry.book_id] = (entry.added_at, entry.user_rating)
        out = []
        for book_id, (_at, rating) in best.items():
            rec = catalog.books.get(book_id)
            if rec is not None:
                out.append((rec, rating))
        return out
