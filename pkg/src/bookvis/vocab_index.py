"""Hierarchical visual vocabulary, inverted file, and ranked cover matching.

Descriptors are quantized down a tree of k-means centroids; every node on
the root-to-leaf path acts as a visual word. Documents (indexed cover
images) become sparse entropy-weighted word vectors, and a query is ranked
against them with a normalized-difference score computed sparsely from the
inverted file. Smaller scores mean closer matches.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .cluster import kmeans
from .errors import ConflictError, FormatError, TrainingError, ValidationError
from .features import DESC_SIZE, DescriptorSet, FeatureParams, decode_image, extract_descriptors

DEFAULT_BRANCH_FACTOR = 10
DEFAULT_DEPTH = 4
MAGIC = b"BVIX"
FORMAT_VERSION = 1

NORM_L1 = "l1"
NORM_L2 = "l2"


# ---------------------------------------------------------------------------
# vocabulary tree


@dataclass
class VocabTree:
    branch_factor: int
    max_depth: int
    centroids: np.ndarray        # (node_count, 128) float32, dense ids 0..n-1
    children: list[list[int]]    # per node id, child ids in ascending order
    seed: int

    @property
    def node_count(self) -> int:
        return self.centroids.shape[0]

    def leaf_ids(self) -> list[int]:
        return [i for i, ch in enumerate(self.children) if not ch]


def train_tree(corpus: list[DescriptorSet], k: int = DEFAULT_BRANCH_FACTOR,
               L: int = DEFAULT_DEPTH, seed: int = 0) -> VocabTree:
    """Recursively cluster all corpus descriptors into a k-way tree of depth <= L.

    Each node re-clusters its subset until the depth limit or until the
    subset is smaller than `k`. Deterministic given (corpus, k, L, seed).
    """
    if k < 2:
        raise TrainingError("branch factor must be >= 2")
    if L < 1:
        raise TrainingError("depth must be >= 1")
    stacks = [ds.vectors for ds in corpus if len(ds)]
    if not stacks:
        raise TrainingError("no descriptors to train on")
    data = np.concatenate(stacks).astype(np.float64)
    if data.shape[0] < k:
        raise TrainingError(f"need at least {k} descriptors, got {data.shape[0]}")

    centroids: list[np.ndarray] = [data.mean(axis=0)]
    children: list[list[int]] = [[]]
    call_counter = 0

    def split(node_id: int, idxs: np.ndarray, depth: int) -> None:
        nonlocal call_counter
        if depth >= L or idxs.shape[0] < k:
            return
        child_seed = np.random.SeedSequence([seed & 0xFFFFFFFF, call_counter])
        call_counter += 1
        cents, assign, _ = kmeans(data[idxs], k, child_seed)
        for c in range(cents.shape[0]):
            child_id = len(centroids)
            centroids.append(cents[c])
            children.append([])
            children[node_id].append(child_id)
            split(child_id, idxs[assign == c], depth + 1)

    split(0, np.arange(data.shape[0]), 0)
    return VocabTree(branch_factor=k, max_depth=L,
                     centroids=np.asarray(centroids, dtype=np.float32),
                     children=children, seed=seed)


def quantize(tree: VocabTree, vector: np.ndarray) -> list[int]:
    """Greedy root-to-leaf descent; ties go to the lowest node id."""
    v = np.asarray(vector, dtype=np.float32)
    node = 0
    path = [0]
    while tree.children[node]:
        ch = tree.children[node]
        d = np.linalg.norm(tree.centroids[ch] - v, axis=1)
        node = ch[int(np.argmin(d))]
        path.append(node)
    return path


def _quantize_counts(tree: VocabTree, vectors: np.ndarray) -> dict[int, int]:
    """Term counts over all path nodes for a whole descriptor set."""
    counts: dict[int, int] = {}
    if vectors.shape[0] == 0:
        return counts
    vecs = vectors.astype(np.float32)

    def descend(node: int, idxs: np.ndarray) -> None:
        counts[node] = counts.get(node, 0) + idxs.shape[0]
        ch = tree.children[node]
        if not ch:
            return
        cents = tree.centroids[ch]
        sub = vecs[idxs]
        d2 = (
            np.einsum("ij,ij->i", sub, sub)[:, None]
            - 2.0 * sub @ cents.T
            + np.einsum("ij,ij->i", cents, cents)[None, :]
        )
        assign = np.argmin(d2, axis=1)
        for c in range(len(ch)):
            member = idxs[assign == c]
            if member.shape[0]:
                descend(ch[c], member)

    descend(0, np.arange(vecs.shape[0]))
    return counts


# ---------------------------------------------------------------------------
# inverted index


@dataclass
class Match:
    book_id: str
    score: float
    confidence: float


@dataclass
class RankedMatches:
    entries: list[Match]
    query_descriptor_count: int

    def to_json(self, catalog=None) -> dict:
        matches = []
        for m in self.entries:
            row = {"book_id": m.book_id, "score": m.score, "confidence": m.confidence}
            if catalog is not None and m.book_id in catalog.books:
                row["title"] = catalog.books[m.book_id].title
            matches.append(row)
        return {"schema": "bookvis/1", "matches": matches,
                "query_descriptors": self.query_descriptor_count}


class InvertedIndex:
    """Per-word posting lists plus entropy weights and normalized doc vectors.

    Mutations (add_document) are only legal before finalize(); afterwards the
    index is immutable and safe for concurrent scoring.
    """

    def __init__(self, norm: str = NORM_L1):
        if norm not in (NORM_L1, NORM_L2):
            raise ValidationError(f"unknown norm {norm!r}")
        self.norm = norm
        self.postings: dict[int, list[tuple[int, int]]] = {}
        self.weights: np.ndarray | None = None
        self.doc_vectors: dict[int, dict[int, float]] = {}
        self.doc_table: dict[int, str] = {}
        self.finalized = False

    def add_document(self, tree: VocabTree, doc_id: int, ds: DescriptorSet,
                     book_id: str) -> None:
        """Quantize one cover's descriptors and register its term counts."""
        if self.finalized:
            raise ValidationError("index already finalized")
        if doc_id in self.doc_table:
            raise ConflictError(f"doc_id {doc_id} already indexed")
        counts = _quantize_counts(tree, ds.vectors)
        for node, cnt in counts.items():
            self.postings.setdefault(node, []).append((doc_id, cnt))
        self.doc_table[doc_id] = book_id

    def finalize(self, tree: VocabTree) -> None:
        """Compute entropy weights and build normalized document vectors.

        Node weight is ln(N / N_i) with N_i the number of documents whose
        descriptors pass through node i; nodes no document touched carry
        zero weight (they contribute no database evidence). A document
        whose every word has zero weight (all its words are universal)
        falls back to a plain term-count vector, so a fully degenerate
        vocabulary makes all documents tie instead of vanishing.
        """
        if not self.doc_table:
            raise ValidationError("cannot finalize an empty index")
        n_docs = len(self.doc_table)
        weights = np.zeros(tree.node_count, dtype=np.float64)
        for node, plist in self.postings.items():
            plist.sort(key=lambda e: e[0])
            weights[node] = math.log(n_docs / len(plist))
        self.weights = weights

        raw: dict[int, dict[int, float]] = {d: {} for d in self.doc_table}
        counts_by_doc: dict[int, dict[int, int]] = {d: {} for d in self.doc_table}
        for node, plist in self.postings.items():
            w = weights[node]
            for doc_id, cnt in plist:
                counts_by_doc[doc_id][node] = cnt
                if w > 0.0:
                    raw[doc_id][node] = w * cnt
        self.doc_vectors = {
            d: _weighted_or_tf_vector(raw[d], counts_by_doc[d], self.norm)
            for d in self.doc_table
        }
        self.finalized = True

    def _query_vector(self, tree: VocabTree, ds: DescriptorSet) -> dict[int, float]:
        counts = _quantize_counts(tree, ds.vectors)
        vec = {}
        for node, cnt in counts.items():
            w = float(self.weights[node])
            if w > 0.0:
                vec[node] = w * cnt
        return _weighted_or_tf_vector(vec, counts, self.norm)

    def score_query(self, tree: VocabTree, ds: DescriptorSet,
                    top_n: int = 5) -> RankedMatches:
        """Rank indexed books against a query descriptor set.

        Only documents sharing at least one weighted word with the query are
        candidates. With L1 normalization the distance reduces to
        2 - 2 * sum(min(q_i, d_i)) over shared words; with L2 it is
        sqrt(2 - 2 * dot). The best-scoring document represents its book.
        """
        if not self.finalized:
            raise ValidationError("index not finalized")
        q = self._query_vector(tree, ds)
        if not q:
            return RankedMatches(entries=[], query_descriptor_count=len(ds))

        acc: dict[int, float] = {}
        for node, q_val in q.items():
            plist = self.postings.get(node)
            if not plist:
                continue
            for doc_id, _cnt in plist:
                d_val = self.doc_vectors[doc_id].get(node)
                if d_val is None:
                    continue
                if self.norm == NORM_L1:
                    acc[doc_id] = acc.get(doc_id, 0.0) + min(q_val, d_val)
                else:
                    acc[doc_id] = acc.get(doc_id, 0.0) + q_val * d_val

        best_per_book: dict[str, float] = {}
        for doc_id, overlap in acc.items():
            if self.norm == NORM_L1:
                score = 2.0 - 2.0 * overlap
            else:
                score = math.sqrt(max(2.0 - 2.0 * overlap, 0.0))
            book = self.doc_table[doc_id]
            if book not in best_per_book or score < best_per_book[book]:
                best_per_book[book] = score

        ranked = sorted(best_per_book.items(), key=lambda e: (e[1], e[0]))[:top_n]
        entries = [Match(book_id=b, score=s, confidence=0.0) for b, s in ranked]
        if len(entries) >= 2 and entries[1].score > 0.0:
            gap = (entries[1].score - entries[0].score) / entries[1].score
            entries[0].confidence = min(max(gap, 0.0), 1.0)
        return RankedMatches(entries=entries, query_descriptor_count=len(ds))


def _normalize_sparse(vec: dict[int, float], norm: str) -> dict[int, float]:
    # canonical sorted-key order: summation order (and so the exact floats)
    # must not depend on how the dict was assembled, or a saved index would
    # score infinitesimally differently after loading
    if not vec:
        return {}
    keys = sorted(vec)
    if norm == NORM_L1:
        total = sum(vec[k] for k in keys)
    else:
        total = math.sqrt(sum(vec[k] * vec[k] for k in keys))
    if total <= 0.0:
        return {}
    return {k: vec[k] / total for k in keys}


def _weighted_or_tf_vector(weighted: dict[int, float], counts: dict[int, int],
                           norm: str) -> dict[int, float]:
    """Normalized weighted vector, or the term-count vector when every
    touched word carries zero weight (degenerate-vocabulary fallback)."""
    if weighted:
        return _normalize_sparse(weighted, norm)
    if counts:
        return _normalize_sparse({n: float(c) for n, c in counts.items()}, norm)
    return {}


# ---------------------------------------------------------------------------
# recognition engine (decode -> extract -> score, plus text-evidence hook)


class Recognizer:
    """Bundles tree, index, catalog, and extraction params for live queries."""

    def __init__(self, tree: VocabTree, index: InvertedIndex, catalog,
                 params: FeatureParams | None = None):
        self.tree = tree
        self.index = index
        self.catalog = catalog
        self.params = params or FeatureParams()

    def recognize(self, image_bytes: bytes, hints: list[str] | None = None,
                  top_n: int = 5) -> RankedMatches:
        """Full pipeline on raw image bytes.

        `hints` are externally produced text tokens (e.g. from an OCR pass
        run elsewhere); when they name an edition that matches a candidate's
        edition label, that candidate is promoted above same-title
        candidates lacking the label. Nothing else about the ranking moves.
        """
        raster = decode_image(image_bytes)
        ds = extract_descriptors(raster, self.params)
        matches = self.index.score_query(self.tree, ds, top_n=top_n)
        if hints:
            matches = promote_editions(matches, self.catalog, hints)
        return matches


def promote_editions(matches: RankedMatches, catalog, hints: list[str]) -> RankedMatches:
    """Stable reorder: edition-labeled candidates named by the hints move
    ahead of same-title candidates without the label."""
    tokens = {t.strip().lower() for t in hints if t.strip()}
    if not tokens or not matches.entries:
        return matches

    def hinted(book_id: str) -> bool:
        rec = catalog.books.get(book_id)
        if rec is None or not rec.edition_label:
            return False
        label_tokens = rec.edition_label.lower().split()
        return bool(label_tokens) and all(t in tokens for t in label_tokens)

    def title_of(book_id: str) -> str:
        rec = catalog.books.get(book_id)
        return rec.title.casefold() if rec else book_id

    groups: dict[str, list[int]] = {}
    for pos, m in enumerate(matches.entries):
        groups.setdefault(title_of(m.book_id), []).append(pos)

    entries = list(matches.entries)
    for positions in groups.values():
        if len(positions) < 2:
            continue
        members = [entries[p] for p in positions]
        reordered = [m for m in members if hinted(m.book_id)] + \
                    [m for m in members if not hinted(m.book_id)]
        for p, m in zip(positions, reordered):
            entries[p] = m
    return RankedMatches(entries=entries, query_descriptor_count=matches.query_descriptor_count)


# ---------------------------------------------------------------------------
# on-disk format


def save_index(path, tree: VocabTree, index: InvertedIndex) -> None:
    """Write the trained tree and finalized index as one BVIX file."""
    if not index.finalized:
        raise ValidationError("finalize the index before saving")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    norm_code = 1 if index.norm == NORM_L1 else 2
    out += struct.pack("<IIQB", tree.branch_factor, tree.max_depth,
                       tree.seed & 0xFFFFFFFFFFFFFFFF, norm_code)
    out += struct.pack("<I", tree.node_count)
    out += np.ascontiguousarray(tree.centroids, dtype="<f4").tobytes()
    for ch in tree.children:
        out += struct.pack("<H", len(ch))
        out += struct.pack(f"<{len(ch)}I", *ch) if ch else b""
    out += struct.pack("<I", len(index.doc_table))
    for doc_id in sorted(index.doc_table):
        book = index.doc_table[doc_id].encode("utf-8")
        out += struct.pack("<IH", doc_id, len(book))
        out += book
    for node in range(tree.node_count):
        plist = index.postings.get(node, [])
        out += struct.pack("<I", len(plist))
        for doc_id, cnt in plist:
            out += struct.pack("<II", doc_id, cnt)
    out += np.ascontiguousarray(index.weights, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_index(path) -> tuple[VocabTree, InvertedIndex]:
    """Read a BVIX file back into a tree and a finalized index."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != MAGIC:
        raise FormatError("not a BVIX index file")
    off = 4
    (version,) = struct.unpack_from("<I", buf, off)
    off += 4
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported index version {version}")
    k, L, seed, norm_code = struct.unpack_from("<IIQB", buf, off)
    off += struct.calcsize("<IIQB")
    (node_count,) = struct.unpack_from("<I", buf, off)
    off += 4
    cent_bytes = node_count * DESC_SIZE * 4
    centroids = np.frombuffer(buf, dtype="<f4", count=node_count * DESC_SIZE,
                              offset=off).reshape(node_count, DESC_SIZE).copy()
    off += cent_bytes
    children: list[list[int]] = []
    for _ in range(node_count):
        (n_ch,) = struct.unpack_from("<H", buf, off)
        off += 2
        ch = list(struct.unpack_from(f"<{n_ch}I", buf, off)) if n_ch else []
        off += 4 * n_ch
        children.append(ch)
    tree = VocabTree(branch_factor=k, max_depth=L, centroids=centroids,
                     children=children, seed=seed)

    index = InvertedIndex(norm=NORM_L1 if norm_code == 1 else NORM_L2)
    (doc_count,) = struct.unpack_from("<I", buf, off)
    off += 4
    for _ in range(doc_count):
        doc_id, blen = struct.unpack_from("<IH", buf, off)
        off += struct.calcsize("<IH")
        book = buf[off:off + blen].decode("utf-8")
        off += blen
        index.doc_table[doc_id] = book
    for node in range(node_count):
        (n_post,) = struct.unpack_from("<I", buf, off)
        off += 4
        if n_post:
            flat = struct.unpack_from(f"<{2 * n_post}I", buf, off)
            off += 8 * n_post
            index.postings[node] = [(flat[2 * i], flat[2 * i + 1]) for i in range(n_post)]
    index.weights = np.frombuffer(buf, dtype="<f8", count=node_count, offset=off).copy()
    off += 8 * node_count
    if off != len(buf):
        raise FormatError("trailing bytes in index file")

    raw: dict[int, dict[int, float]] = {d: {} for d in index.doc_table}
    for node, plist in index.postings.items():
        w = float(index.weights[node])
        if w <= 0.0:
            continue
        for doc_id, cnt in plist:
            raw[doc_id][node] = w * cnt
    index.doc_vectors = {d: _normalize_sparse(v, index.norm) for d, v in raw.items()}
    index.finalized = True
    return tree, index


def build_manifest(feature_params: FeatureParams, tree: VocabTree,
                   index: InvertedIndex, corpus_hash: str) -> dict:
    """Reproducibility sidecar for one index build."""
    return {
        "schema": "bookvis/1",
        "corpus_hash": corpus_hash,
        "feature_params": feature_params.to_json(),
        "branch_factor": tree.branch_factor,
        "depth": tree.max_depth,
        "seed": tree.seed,
        "norm": index.norm,
        "documents": len(index.doc_table),
        "nodes": tree.node_count,
    }


def corpus_hash(items: list[tuple[str, bytes]]) -> str:
    """Stable hash over (book_id, cover bytes) pairs, order-independent."""
    h = hashlib.sha256()
    for book_id, data in sorted(items, key=lambda e: e[0]):
        h.update(book_id.encode("utf-8"))
        h.update(hashlib.sha256(data).digest())
    return h.hexdigest()


def save_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
