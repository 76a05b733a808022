import io
import xml.etree.ElementTree as ET

import pytest
from fastapi.testclient import TestClient

from bookvis.service import ServiceConfig, create_app


@pytest.fixture(scope="module")
def client(demo_corpus, demo_index, tmp_path_factory):
    config = ServiceConfig(
        catalog_path=str(demo_corpus / "catalog.jsonl"),
        index_path=str(demo_index["path"]),
        data_dir=str(tmp_path_factory.mktemp("svc_data")),
        covers_dir=str(demo_corpus),
    )
    app = create_app(config)
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


@pytest.fixture(scope="module")
def user_with_library(client):
    uid = client.post("/api/users", json={"display_name": "Reader"}).json()["user_id"]
    for book_id, rating in [("b0", 5), ("b1", 4), ("b3", 4), ("b5", 3), ("b7", 5)]:
        r = client.post(f"/api/users/{uid}/shelves/saved/books",
                        json={"book_id": book_id, "rating": rating})
        assert r.status_code == 201
    return uid


def post_image(client, data, hints=None):
    url = "/api/recognize" + (f"?hints={hints}" if hints else "")
    return client.post(url, files={"image": ("q.png", data, "image/png")})


class TestRecognize:
    def test_exact_indexed_cover_rank_one(self, client, demo_corpus):
        data = (demo_corpus / "covers" / "c6.png").read_bytes()
        r = post_image(client, data)
        assert r.status_code == 200
        body = r.json()
        assert body["matches"][0]["book_id"] == "b6"
        assert body["matches"][0]["title"] == "Book 6"
        assert body["query_descriptors"] > 0
        assert len(body["matches"]) <= 5

    def test_garbage_bytes_bad_image(self, client):
        r = post_image(client, b"x" * 20)
        assert r.status_code == 400
        assert r.json()["code"] == "bad_image"
        assert set(r.json()) == {"status", "code", "message"}

    def test_blank_image_empty_matches(self, client):
        from PIL import Image

        buf = io.BytesIO()
        Image.new("RGB", (200, 300), (255, 255, 255)).save(buf, format="PNG")
        r = post_image(client, buf.getvalue())
        assert r.status_code == 200
        assert r.json()["matches"] == []

    def test_oversized_body_rejected(self, client):
        r = post_image(client, b"\x89PNG" + b"\x00" * (10 * 1024 * 1024 + 1))
        assert r.status_code == 413
        assert r.json()["code"] == "too_large"

    def test_missing_field_conforms_to_error_shape(self, client):
        r = client.post("/api/recognize")
        assert r.status_code == 422
        assert set(r.json()) == {"status", "code", "message"}


class TestBookReads:
    def test_get_book(self, client):
        r = client.get("/api/books/b2")
        assert r.status_code == 200
        assert r.json()["title"] == "Book 2"

    def test_unknown_book_404(self, client):
        r = client.get("/api/books/zz")
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"

    def test_palette_hex_and_theme(self, client):
        body = client.get("/api/books/b0/palette").json()
        assert body["book_id"] == "b0"
        for entry in body["colors"]:
            assert entry["hex"].startswith("#") and len(entry["hex"]) == 7
            rgb = entry["rgb"]
            assert entry["hex"] == "#%02x%02x%02x" % tuple(rgb)
        assert set(body["theme"]) == {"primary", "secondary", "accent",
                                      "background", "text_on_primary"}

    def test_svg_endpoints_content_type_and_hash(self, client):
        for url in ("/api/books/b1/selfie.svg", "/api/books/b1/similar-grid.svg",
                    "/api/books/b1/author-timeline.svg"):
            r = client.get(url)
            assert r.status_code == 200
            assert r.headers["content-type"].startswith("image/svg+xml")
            assert r.headers["etag"].strip('"') == r.headers["x-content-hash"]
            ET.fromstring(r.text)

    def test_svg_deterministic_same_hash(self, client):
        a = client.get("/api/books/b3/selfie.svg")
        b = client.get("/api/books/b3/selfie.svg")
        assert a.content == b.content
        assert a.headers["etag"] == b.headers["etag"]

    def test_grid_and_timeline_json_payloads(self, client):
        grid = client.get("/api/books/b1/similar-grid.json").json()
        assert grid["schema"] == "bookvis/1"
        assert len(grid["cells"]) == 5
        tl = client.get("/api/books/b1/author-timeline.json").json()
        assert tl["schema"] == "bookvis/1"
        assert len(tl["tiles"]) >= 5
        assert sum(1 for t in tl["tiles"] if t["is_focus"]) == 1


class TestUserViews:
    def test_empty_library_conflict(self, client):
        uid = client.post("/api/users", json={"display_name": "Empty"}).json()["user_id"]
        for url in (f"/api/users/{uid}/data-selfie.svg", f"/api/users/{uid}/rose.svg",
                    f"/api/users/{uid}/fit/b0"):
            r = client.get(url)
            assert r.status_code == 409
            assert r.json()["code"] == "empty_library"

    def test_unknown_user_404(self, client):
        r = client.get("/api/users/ghost/data-selfie.svg")
        assert r.status_code == 404

    def test_data_selfie_renders(self, client, user_with_library):
        r = client.get(f"/api/users/{user_with_library}/data-selfie.svg")
        assert r.status_code == 200
        ET.fromstring(r.text)

    def test_rose_renders(self, client, user_with_library):
        r = client.get(f"/api/users/{user_with_library}/rose.svg")
        assert r.status_code == 200
        ET.fromstring(r.text)

    def test_fit_json_and_svg(self, client, user_with_library):
        r = client.get(f"/api/users/{user_with_library}/fit/b2")
        assert r.status_code == 200
        body = r.json()
        assert body["fit"]["overlap"] in (True, False)
        assert 0.0 <= body["fit"]["fitness"] <= 1.0
        svg = client.get(body["svg"])
        assert svg.status_code == 200
        ET.fromstring(svg.text)

    def test_fit_single_genre_book_on_anchor(self, client, user_with_library):
        # b2 shares genres with the library via the fixture pool; verify the
        # position equals the anchor when exactly one genre overlaps
        selfie = client.get(f"/api/users/{user_with_library}/data-selfie.json").json()
        fit = client.get(f"/api/users/{user_with_library}/fit/b2").json()["fit"]
        if len(fit["contributing_genres"]) == 1:
            genre = fit["contributing_genres"][0][0]
            import math

            angle = selfie["angles"][genre]
            assert fit["position"][0] == pytest.approx(math.cos(angle), abs=1e-9)
            assert fit["position"][1] == pytest.approx(math.sin(angle), abs=1e-9)

    def test_save_then_selfie_reflects_genres(self, client):
        uid = client.post("/api/users", json={"display_name": "Fresh"}).json()["user_id"]
        client.post(f"/api/users/{uid}/shelves/saved/books", json={"book_id": "b4"})
        selfie = client.get(f"/api/users/{uid}/data-selfie.json").json()
        assert selfie["total_books"] == 1
        assert set(selfie["histogram"]) == {"romance"}

    def test_duplicate_save_idempotent(self, client, user_with_library):
        for _ in range(2):
            r = client.post(f"/api/users/{user_with_library}/shelves/saved/books",
                            json={"book_id": "b0", "rating": 5})
            assert r.status_code == 201
        selfie = client.get(f"/api/users/{user_with_library}/data-selfie.json").json()
        assert selfie["total_books"] == 5

    def test_bad_rating_422(self, client, user_with_library):
        r = client.post(f"/api/users/{user_with_library}/shelves/saved/books",
                        json={"book_id": "b0", "rating": 11})
        assert r.status_code == 422

    def test_save_unknown_book_404(self, client, user_with_library):
        r = client.post(f"/api/users/{user_with_library}/shelves/saved/books",
                        json={"book_id": "zz"})
        assert r.status_code == 404


class TestApiShape:
    def test_openapi_served(self, client):
        r = client.get("/api/spec")
        assert r.status_code == 200
        assert "paths" in r.json()

    def test_cors_header_present(self, client):
        r = client.get("/api/books/b0", headers={"Origin": "http://localhost:5173"})
        assert r.headers.get("access-control-allow-origin") == "*"

    def test_all_errors_conform(self, client, user_with_library):
        cases = [
            client.get("/api/books/none"),
            client.get("/api/users/none/rose.svg"),
            client.post("/api/recognize"),
            client.post(f"/api/users/{user_with_library}/shelves/saved/books",
                        json={"book_id": "b0", "rating": 99}),
            client.post("/api/users", json={}),
        ]
        for r in cases:
            assert r.status_code >= 400
            body = r.json()
            assert set(body) == {"status", "code", "message"}
            assert body["status"] == r.status_code
