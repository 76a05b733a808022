"""HTTP JSON/SVG API binding recognition, catalog, taste, palette, and store.

Read endpoints never mutate state; every non-2xx body is a single-shape
error object ``{"status", "code", "message"}``. SVG responses are
deterministic, so they carry a strong content hash and are cacheable.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile, File
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import taste, vizgen
from .catalog import Catalog, load_catalog
from .errors import (
    BookVisError,
    DecodeError,
    EmptyLibraryError,
    ImageTooLargeError,
    NotFoundError,
    ValidationError,
)
from .features import decode_image
from .palette import Palette, Theme, dominant_colors, rgb_to_hex, theme_from_palette
from .store import Store
from .vocab_index import Recognizer, load_index

MAX_UPLOAD_BYTES = 10 * 1024 * 1024
DEFAULT_PORT = 8080

ENV_DATA_DIR = "BOOKVIS_DATA_DIR"
ENV_INDEX = "BOOKVIS_INDEX"
ENV_CATALOG = "BOOKVIS_CATALOG"
ENV_COVERS = "BOOKVIS_COVERS"
ENV_PORT = "BOOKVIS_PORT"

# neutral slate theme for user views requested without a book context
DEFAULT_THEME = Theme(primary=(74, 85, 104), secondary=(140, 147, 160),
                      accent=(214, 126, 70), background=(243, 244, 246),
                      text_on_primary=(255, 255, 255))
FALLBACK_PALETTE = Palette(colors=[((128, 128, 128), 1.0)])


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"status": status, "code": code, "message": message})


@dataclass
class ServiceConfig:
    catalog_path: str
    index_path: str
    data_dir: str
    covers_dir: str | None = None
    port: int = DEFAULT_PORT

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        """Environment variables configure the service; explicit kwargs win."""
        catalog_path = overrides.get("catalog_path") or os.environ.get(ENV_CATALOG)
        index_path = overrides.get("index_path") or os.environ.get(ENV_INDEX)
        data_dir = overrides.get("data_dir") or os.environ.get(ENV_DATA_DIR)
        if not catalog_path or not index_path or not data_dir:
            raise ValidationError(
                f"set {ENV_CATALOG}, {ENV_INDEX}, and {ENV_DATA_DIR} (or pass them explicitly)")
        covers = overrides.get("covers_dir") or os.environ.get(ENV_COVERS) \
            or str(Path(catalog_path).parent)
        port = int(overrides.get("port") or os.environ.get(ENV_PORT) or DEFAULT_PORT)
        return cls(catalog_path=catalog_path, index_path=index_path,
                   data_dir=data_dir, covers_dir=covers, port=port)


class AppState:
    """Immutable engine (catalog, tree, index) plus per-user caches.

    Taste models are rebuilt lazily and invalidated whenever the user's
    shelves change; palettes are cached per book because covers are static.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.catalog: Catalog = load_catalog(config.catalog_path)
        self.tree, self.index = load_index(config.index_path)
        self.recognizer = Recognizer(self.tree, self.index, self.catalog)
        self.store = Store(config.data_dir)
        self.covers_dir = Path(config.covers_dir or Path(config.catalog_path).parent)
        self._palettes: dict[str, Palette] = {}
        self._taste_models: dict[str, taste.TasteModel] = {}
        self._cache_lock = threading.Lock()

    def palette_for(self, book_id: str) -> Palette:
        with self._cache_lock:
            if book_id in self._palettes:
                return self._palettes[book_id]
        record = self.catalog.get(book_id)
        cover = self.covers_dir / record.cover_ref
        try:
            raster = decode_image(cover.read_bytes())
            pal = dominant_colors(raster, k=4, seed=0, source_book=book_id)
        except (OSError, BookVisError):
            pal = Palette(colors=list(FALLBACK_PALETTE.colors), source_book=book_id)
        with self._cache_lock:
            self._palettes[book_id] = pal
        return pal

    def theme_for(self, book_id: str | None) -> Theme:
        if book_id is None:
            return DEFAULT_THEME
        return theme_from_palette(self.palette_for(book_id))

    def taste_model_for(self, user_id: str) -> taste.TasteModel:
        with self._cache_lock:
            model = self._taste_models.get(user_id)
        if model is not None:
            return model
        library = self.store.library_union(user_id, self.catalog)
        if not library:
            raise EmptyLibraryError(f"user {user_id!r} has no usable library")
        model = taste.build_taste_model([b for b, _ in library])
        with self._cache_lock:
            self._taste_models[user_id] = model
        return model

    def invalidate_user(self, user_id: str) -> None:
        with self._cache_lock:
            self._taste_models.pop(user_id, None)


def _svg_response(svg: str) -> Response:
    digest = hashlib.sha256(svg.encode("utf-8")).hexdigest()
    return Response(content=svg, media_type="image/svg+xml",
                    headers={"ETag": f'"{digest}"', "X-Content-Hash": digest})


def create_app(config: ServiceConfig | None = None, state: AppState | None = None) -> FastAPI:
    state = state or AppState(config or ServiceConfig.from_env())
    app = FastAPI(title="bookvis", version="1.0", openapi_url="/api/spec")
    app.state.engine = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ApiException)
    async def _api_exc(_req: Request, exc: ApiException):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(EmptyLibraryError)
    async def _empty_library(_req: Request, exc: EmptyLibraryError):
        return _error_response(409, "empty_library", str(exc))

    @app.exception_handler(ValidationError)
    async def _invalid(_req: Request, exc: ValidationError):
        return _error_response(422, "invalid", str(exc))

    @app.exception_handler(DecodeError)
    async def _bad_image(_req: Request, exc: DecodeError):
        return _error_response(400, "bad_image", str(exc))

    @app.exception_handler(ImageTooLargeError)
    async def _too_large(_req: Request, exc: ImageTooLargeError):
        return _error_response(413, "too_large", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_invalid(_req: Request, exc: RequestValidationError):
        return _error_response(422, "invalid_request", str(exc.errors()))

    @app.exception_handler(StarletteHTTPException)
    async def _http_exc(_req: Request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, "http_error", str(exc.detail))

    @app.exception_handler(Exception)
    async def _internal(_req: Request, exc: Exception):
        return _error_response(500, "internal", f"{type(exc).__name__}: {exc}")

    # -- recognition --------------------------------------------------------

    @app.post("/api/recognize")
    async def recognize(image: UploadFile = File(...), hints: str | None = None):
        data = await image.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiException(413, "too_large", "image exceeds 10 MiB")
        hint_tokens = [t for t in (hints.split(",") if hints else []) if t.strip()]
        matches = state.recognizer.recognize(data, hints=hint_tokens or None, top_n=5)
        return matches.to_json(state.catalog)

    # -- book-side reads ----------------------------------------------------

    @app.get("/api/books/{book_id}")
    def get_book(book_id: str):
        record = state.catalog.get(book_id)
        return {"schema": "bookvis/1", **record.to_json()}

    @app.get("/api/books/{book_id}/palette")
    def get_palette(book_id: str):
        pal = state.palette_for(book_id)
        theme = theme_from_palette(pal)
        return {
            "schema": "bookvis/1",
            "book_id": book_id,
            "colors": [{"rgb": list(rgb), "mass": mass, "hex": rgb_to_hex(rgb)}
                       for rgb, mass in pal.colors],
            "theme": theme.slot_hex(),
        }

    @app.get("/api/books/{book_id}/selfie.svg")
    def book_selfie_svg(book_id: str):
        record = state.catalog.get(book_id)
        pal = state.palette_for(book_id)
        data = taste.book_selfie_data(record, state.catalog, pal)
        doc = vizgen.render("book_selfie", data, theme_from_palette(pal))
        return _svg_response(doc.svg)

    def _similar_grid_doc(book_id: str) -> vizgen.VizDocument:
        record = state.catalog.get(book_id)
        grid = taste.similar_grid(record, state.catalog)
        return vizgen.render("similar_grid", grid, state.theme_for(book_id))

    @app.get("/api/books/{book_id}/similar-grid.svg")
    def similar_grid_svg(book_id: str):
        return _svg_response(_similar_grid_doc(book_id).svg)

    @app.get("/api/books/{book_id}/similar-grid.json")
    def similar_grid_json(book_id: str):
        return _similar_grid_doc(book_id).payload

    def _timeline_doc(book_id: str) -> vizgen.VizDocument:
        record = state.catalog.get(book_id)
        palettes = {b.book_id: state.palette_for(b.book_id)
                    for b in state.catalog.books.values()
                    if b.primary_author == record.primary_author}
        timeline = taste.author_timeline(record, state.catalog, palettes)
        return vizgen.render("author_timeline", timeline, state.theme_for(book_id))

    @app.get("/api/books/{book_id}/author-timeline.svg")
    def timeline_svg(book_id: str):
        return _svg_response(_timeline_doc(book_id).svg)

    @app.get("/api/books/{book_id}/author-timeline.json")
    def timeline_json(book_id: str):
        return _timeline_doc(book_id).payload

    # -- user-side reads ----------------------------------------------------

    @app.get("/api/users/{user_id}/data-selfie.svg")
    def data_selfie_svg(user_id: str, book: str | None = None):
        model = state.taste_model_for(user_id)
        doc = vizgen.render("data_selfie", model, state.theme_for(book))
        return _svg_response(doc.svg)

    @app.get("/api/users/{user_id}/data-selfie.json")
    def data_selfie_json(user_id: str):
        model = state.taste_model_for(user_id)
        return vizgen.payload("data_selfie", model)

    @app.get("/api/users/{user_id}/rose.svg")
    def rose_svg(user_id: str, book: str | None = None):
        library = state.store.library_union(user_id, state.catalog)
        if not library:
            raise EmptyLibraryError(f"user {user_id!r} has no usable library")
        rose = taste.my_rose(library)
        doc = vizgen.render("my_rose", rose, state.theme_for(book))
        return _svg_response(doc.svg)

    # the .svg route must register before the bare route: path params match
    # greedily, so "/fit/b2.svg" would otherwise bind book_id="b2.svg"
    @app.get("/api/users/{user_id}/fit/{book_id}.svg")
    def fit_svg(user_id: str, book_id: str):
        record = state.catalog.get(book_id)
        model = state.taste_model_for(user_id)
        fit = taste.place_book(record, model)
        doc = vizgen.render("how_it_fits", (model, fit), state.theme_for(book_id))
        return _svg_response(doc.svg)

    @app.get("/api/users/{user_id}/fit/{book_id}")
    def fit_json(user_id: str, book_id: str):
        record = state.catalog.get(book_id)
        model = state.taste_model_for(user_id)
        fit = taste.place_book(record, model)
        return {
            "schema": "bookvis/1",
            "user_id": user_id,
            "book_id": book_id,
            "fit": fit.to_json(),
            "svg": f"/api/users/{user_id}/fit/{book_id}.svg",
        }

    # -- mutations ----------------------------------------------------------

    @app.post("/api/users", status_code=201)
    def create_user(body: dict):
        name = str(body.get("display_name") or "").strip()
        if not name:
            raise ApiException(422, "invalid", "display_name is required")
        profile = state.store.create_user(name)
        return {"schema": "bookvis/1", "user_id": profile.user_id,
                "display_name": profile.display_name}

    @app.post("/api/users/{user_id}/shelves/{shelf}/books", status_code=201)
    def save_to_shelf(user_id: str, shelf: str, body: dict):
        book_id = str(body.get("book_id") or "")
        if not book_id:
            raise ApiException(422, "invalid", "book_id is required")
        state.catalog.get(book_id)  # 404 on unknown books
        if not state.store.user_exists(user_id):
            raise NotFoundError(f"unknown user {user_id!r}")
        state.store.add_to_shelf(user_id, shelf, book_id, body.get("rating"))
        state.invalidate_user(user_id)
        return {"schema": "bookvis/1", "status": "saved", "shelf": shelf,
                "book_id": book_id}

    return app


def run(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.port)
