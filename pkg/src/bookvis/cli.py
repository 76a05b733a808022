"""Operator command line: build indexes, query covers, import shelves,
emit visualizations, run the server.

Machine-readable JSON goes to stdout; human diagnostics go to stderr.
Exit codes: 0 success, 1 usage, 2 I/O problem, 3 domain error. Flags
mirror the BOOKVIS_* environment variables, flags winning.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .catalog import load_catalog
from .errors import BookVisError
from .features import FeatureParams, decode_image, extract_descriptors
from .palette import dominant_colors, theme_from_palette
from .service import (
    DEFAULT_THEME,
    ENV_CATALOG,
    ENV_COVERS,
    ENV_DATA_DIR,
    ENV_INDEX,
    ServiceConfig,
)
from .store import Store
from .taste import build_taste_model, place_book
from .vizgen import render
from .vocab_index import (
    DEFAULT_BRANCH_FACTOR,
    DEFAULT_DEPTH,
    InvertedIndex,
    Recognizer,
    build_manifest,
    corpus_hash,
    load_index,
    save_index,
    save_manifest,
    train_tree,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DOMAIN = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _env(name: str) -> str | None:
    return os.environ.get(name) or None


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, ensure_ascii=False)
    sys.stdout.write("\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bookvis", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bookvis {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_index = sub.add_parser("index", help="index maintenance")
    index_sub = p_index.add_subparsers(dest="index_command", parser_class=_Parser)
    p_build = index_sub.add_parser("build", help="train a vocabulary and index covers")
    p_build.add_argument("--catalog", default=_env(ENV_CATALOG), required=_env(ENV_CATALOG) is None)
    p_build.add_argument("--covers", default=_env(ENV_COVERS))
    p_build.add_argument("--branch-factor", type=int, default=DEFAULT_BRANCH_FACTOR)
    p_build.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p_build.add_argument("--seed", type=int, default=0)
    p_build.add_argument("--out", default=_env(ENV_INDEX), required=_env(ENV_INDEX) is None)

    p_query = sub.add_parser("query", help="match one cover image against an index")
    p_query.add_argument("image")
    p_query.add_argument("--index", default=_env(ENV_INDEX), required=_env(ENV_INDEX) is None)
    p_query.add_argument("--catalog", default=_env(ENV_CATALOG), required=_env(ENV_CATALOG) is None)
    p_query.add_argument("--hints", default=None, help="comma-separated text tokens")
    p_query.add_argument("--top", type=int, default=5)

    p_palette = sub.add_parser("palette", help="dominant colors of an image")
    p_palette.add_argument("image")
    p_palette.add_argument("-k", type=int, default=4)
    p_palette.add_argument("--seed", type=int, default=0)

    p_selfie = sub.add_parser("selfie", help="render a user's taste selfie SVG")
    p_selfie.add_argument("--user", required=True)
    p_selfie.add_argument("--data-dir", default=_env(ENV_DATA_DIR), required=_env(ENV_DATA_DIR) is None)
    p_selfie.add_argument("--catalog", default=_env(ENV_CATALOG), required=_env(ENV_CATALOG) is None)
    p_selfie.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="how one book fits a user's taste")
    p_fit.add_argument("--user", required=True)
    p_fit.add_argument("--book", required=True)
    p_fit.add_argument("--data-dir", default=_env(ENV_DATA_DIR), required=_env(ENV_DATA_DIR) is None)
    p_fit.add_argument("--catalog", default=_env(ENV_CATALOG), required=_env(ENV_CATALOG) is None)
    p_fit.add_argument("--out", default=None, help="optional how-it-fits SVG path")

    p_import = sub.add_parser("import", help="import a ratings-export CSV into shelves")
    p_import.add_argument("--user", required=True)
    p_import.add_argument("--csv", required=True)
    p_import.add_argument("--data-dir", default=_env(ENV_DATA_DIR), required=_env(ENV_DATA_DIR) is None)
    p_import.add_argument("--catalog", default=_env(ENV_CATALOG), required=_env(ENV_CATALOG) is None)
    p_import.add_argument("--display-name", default=None)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--catalog", default=None)
    p_serve.add_argument("--index", default=None)
    p_serve.add_argument("--data-dir", default=None)
    p_serve.add_argument("--covers", default=None)
    p_serve.add_argument("--port", type=int, default=None)

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_index_build(args) -> int:
    catalog = load_catalog(args.catalog)
    covers_dir = Path(args.covers or Path(args.catalog).parent)
    params = FeatureParams()

    items, corpus, book_ids = [], [], []
    for book_id in sorted(catalog.books):
        record = catalog.books[book_id]
        path = covers_dir / record.cover_ref
        try:
            data = path.read_bytes()
        except OSError:
            _log(f"skipping {book_id}: missing cover {path}")
            continue
        ds = extract_descriptors(decode_image(data), params)
        items.append((book_id, data))
        corpus.append(ds)
        book_ids.append(book_id)
        _log(f"extracted {len(ds):4d} descriptors from {record.cover_ref}")

    tree = train_tree(corpus, k=args.branch_factor, L=args.depth, seed=args.seed)
    index = InvertedIndex()
    for doc_id, (book_id, ds) in enumerate(zip(book_ids, corpus)):
        index.add_document(tree, doc_id, ds, book_id)
    index.finalize(tree)

    save_index(args.out, tree, index)
    manifest = build_manifest(params, tree, index, corpus_hash(items))
    manifest_path = f"{args.out}.manifest.json"
    save_manifest(manifest_path, manifest)
    _emit({"schema": "bookvis/1", "index": str(args.out), "manifest": manifest_path,
           "documents": len(index.doc_table), "nodes": tree.node_count})
    return EXIT_OK


def _cmd_query(args) -> int:
    tree, index = load_index(args.index)
    catalog = load_catalog(args.catalog)
    image_bytes = Path(args.image).read_bytes()
    hints = [t for t in (args.hints.split(",") if args.hints else []) if t.strip()]
    recognizer = Recognizer(tree, index, catalog)
    matches = recognizer.recognize(image_bytes, hints=hints or None, top_n=args.top)
    _emit(matches.to_json(catalog))
    return EXIT_OK


def _cmd_palette(args) -> int:
    raster = decode_image(Path(args.image).read_bytes())
    pal = dominant_colors(raster, k=args.k, seed=args.seed)
    theme = theme_from_palette(pal)
    _emit({"schema": "bookvis/1",
           "colors": [{"rgb": list(rgb), "mass": mass} for rgb, mass in pal.colors],
           "theme": theme.slot_hex()})
    return EXIT_OK


def _cmd_selfie(args) -> int:
    catalog = load_catalog(args.catalog)
    store = Store(args.data_dir)
    library = store.library_union(args.user, catalog)
    model = build_taste_model([b for b, _ in library])
    doc = render("data_selfie", model, DEFAULT_THEME)
    Path(args.out).write_text(doc.svg, encoding="utf-8")
    _emit({"schema": "bookvis/1", "out": str(args.out),
           "books": len(model.dots), "genres": len(model.histogram.counts)})
    return EXIT_OK


def _cmd_fit(args) -> int:
    catalog = load_catalog(args.catalog)
    store = Store(args.data_dir)
    record = catalog.get(args.book)
    library = store.library_union(args.user, catalog)
    model = build_taste_model([b for b, _ in library])
    fit = place_book(record, model)
    if args.out:
        doc = render("how_it_fits", (model, fit), DEFAULT_THEME)
        Path(args.out).write_text(doc.svg, encoding="utf-8")
    _emit({"schema": "bookvis/1", "user_id": args.user, "book_id": args.book,
           "fit": fit.to_json()})
    return EXIT_OK


def _cmd_import(args) -> int:
    catalog = load_catalog(args.catalog)
    store = Store(args.data_dir)
    store.ensure_user(args.user, args.display_name)
    report = store.import_shelves(args.user, Path(args.csv).read_bytes(), catalog)
    _emit(report.to_json())
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import run

    config = ServiceConfig.from_env(catalog_path=args.catalog, index_path=args.index,
                                    data_dir=args.data_dir, covers_dir=args.covers,
                                    port=args.port)
    _log(f"serving on port {config.port}")
    run(config)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if args.command == "index" and getattr(args, "index_command", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "index":
            return _cmd_index_build(args)
        if args.command == "query":
            return _cmd_query(args)
        if args.command == "palette":
            return _cmd_palette(args)
        if args.command == "selfie":
            return _cmd_selfie(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "import":
            return _cmd_import(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return EXIT_IO
    except BookVisError as exc:
        _log(f"error: {exc}")
        return EXIT_DOMAIN
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
