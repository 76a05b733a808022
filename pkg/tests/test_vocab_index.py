import math

import numpy as np
import pytest

from bookvis.errors import ConflictError, FormatError, TrainingError, ValidationError
from bookvis.features import DESC_SIZE, DescriptorSet
from bookvis.vocab_index import (
    InvertedIndex,
    Recognizer,
    load_index,
    promote_editions,
    quantize,
    save_index,
    train_tree,
)

from conftest import make_book, make_catalog
from oracles import dense_tfidf_scores


def ds_from(vectors) -> DescriptorSet:
    arr = np.zeros((len(vectors), DESC_SIZE), dtype=np.float32)
    for i, v in enumerate(vectors):
        arr[i, : len(v)] = v
    return DescriptorSet(arr, [], (10, 10))


def random_ds(rng, n) -> DescriptorSet:
    return DescriptorSet(rng.random((n, DESC_SIZE), dtype=np.float32), [], (10, 10))


@pytest.fixture
def two_pair_corpus():
    # two tight pairs far apart; cluster means are hand-computable
    a1 = [1.0, 0.0]
    a2 = [1.0, 0.2]
    b1 = [-1.0, 0.0]
    b2 = [-1.0, 0.2]
    return ds_from([a1, a2, b1, b2])


class TestTrainTree:
    def test_two_pairs_yield_pair_means(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=1, seed=0)
        leaves = tree.leaf_ids()
        assert len(leaves) == 2
        got = sorted(tuple(np.round(tree.centroids[i][:2], 6)) for i in leaves)
        assert got == [(-1.0, 0.1), (1.0, 0.1)]

    def test_recursion_stops_below_branch_factor(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=2, seed=0)
        assert len(tree.leaf_ids()) <= 4
        # the two pair clusters hold 2 descriptors each = k, so they split once more
        assert tree.max_depth == 2

    def test_node_ids_dense(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=2, seed=0)
        seen = [0]
        for ch in tree.children:
            seen.extend(ch)
        assert sorted(seen) == list(range(tree.node_count))

    def test_deterministic_bit_for_bit(self):
        rng = np.random.default_rng(1)
        corpus = [random_ds(rng, 80) for _ in range(3)]
        t1 = train_tree(corpus, k=4, L=2, seed=77)
        t2 = train_tree(corpus, k=4, L=2, seed=77)
        assert np.array_equal(t1.centroids, t2.centroids)
        assert t1.children == t2.children

    def test_insufficient_descriptors_raise(self):
        with pytest.raises(TrainingError):
            train_tree([ds_from([[1.0]])], k=2, L=1, seed=0)

    def test_bad_params_raise(self):
        corpus = [random_ds(np.random.default_rng(0), 10)]
        with pytest.raises(TrainingError):
            train_tree(corpus, k=1, L=1, seed=0)
        with pytest.raises(TrainingError):
            train_tree(corpus, k=2, L=0, seed=0)

    def test_leaf_count_bounded(self):
        rng = np.random.default_rng(2)
        corpus = [random_ds(rng, 150)]
        tree = train_tree(corpus, k=3, L=3, seed=5)
        assert len(tree.leaf_ids()) <= 3 ** 3


class TestQuantize:
    def test_exact_centroid_descends_to_its_leaf(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=1, seed=0)
        for leaf in tree.leaf_ids():
            path = quantize(tree, tree.centroids[leaf])
            assert path[0] == 0
            assert path[-1] == leaf

    def test_tie_breaks_to_lower_node_id(self):
        tree = train_tree([ds_from([[1.0], [1.0], [-1.0], [-1.0]])], k=2, L=1, seed=3)
        # query equidistant from both children
        mid = np.zeros(DESC_SIZE, dtype=np.float32)
        path = quantize(tree, mid)
        assert path[-1] == min(tree.children[0])

    def test_path_is_root_to_leaf(self):
        rng = np.random.default_rng(3)
        tree = train_tree([random_ds(rng, 100)], k=3, L=3, seed=1)
        path = quantize(tree, rng.random(DESC_SIZE, dtype=np.float32))
        assert path[0] == 0
        assert len(path) <= tree.max_depth + 1
        assert not tree.children[path[-1]]
        for a, b in zip(path, path[1:]):
            assert b in tree.children[a]


class TestInvertedIndex:
    def test_empty_descriptor_set_registers_unmatchable_doc(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=1, seed=0)
        index = InvertedIndex()
        index.add_document(tree, 0, two_pair_corpus, "b0")
        index.add_document(tree, 1, DescriptorSet.empty((5, 5)), "b1")
        index.finalize(tree)
        assert index.doc_vectors[1] == {}
        result = index.score_query(tree, two_pair_corpus)
        assert [m.book_id for m in result.entries] == ["b0"]

    def test_term_counts_accumulate_per_leaf(self):
        vecs = ds_from([[1.0, 0.0]] * 10 + [[-1.0, 0.0]] * 2)
        tree = train_tree([vecs], k=2, L=1, seed=0)
        index = InvertedIndex()
        index.add_document(tree, 0, ds_from([[1.0, 0.0]] * 10), "b0")
        leaf = quantize(tree, ds_from([[1.0, 0.0]]).vectors[0])[-1]
        assert index.postings[leaf] == [(0, 10)]

    def test_duplicate_doc_id_conflicts(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=1, seed=0)
        index = InvertedIndex()
        index.add_document(tree, 0, two_pair_corpus, "b0")
        with pytest.raises(ConflictError):
            index.add_document(tree, 0, two_pair_corpus, "b1")

    def test_finalize_weights(self):
        # four docs, one per corner vector; shared root weight 0, exclusive
        # leaf weight ln 4
        docs = [ds_from([[1.0, 0.0]]), ds_from([[-1.0, 0.0]]),
                ds_from([[0.0, 1.0]]), ds_from([[0.0, -1.0]])]
        tree = train_tree(docs, k=4, L=1, seed=0)
        index = InvertedIndex()
        for i, d in enumerate(docs):
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        assert index.weights[0] == 0.0  # root is in every doc
        leaf = quantize(tree, docs[0].vectors[0])[-1]
        assert index.weights[leaf] == pytest.approx(math.log(4), abs=1e-12)

    def test_weight_bounds(self):
        rng = np.random.default_rng(8)
        docs = [random_ds(rng, 30) for _ in range(6)]
        tree = train_tree(docs, k=3, L=2, seed=2)
        index = InvertedIndex()
        for i, d in enumerate(docs):
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        assert np.all(index.weights >= 0.0)
        assert np.all(index.weights <= math.log(6) + 1e-12)

    def test_doc_vectors_l1_normalized(self):
        rng = np.random.default_rng(9)
        docs = [random_ds(rng, 25) for _ in range(4)]
        tree = train_tree(docs, k=3, L=2, seed=0)
        index = InvertedIndex()
        for i, d in enumerate(docs):
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        for vec in index.doc_vectors.values():
            if vec:
                assert sum(vec.values()) == pytest.approx(1.0, abs=1e-9)

    def test_finalize_empty_index_raises(self, two_pair_corpus):
        tree = train_tree([two_pair_corpus], k=2, L=1, seed=0)
        with pytest.raises(ValidationError):
            InvertedIndex().finalize(tree)

    def test_postings_doc_ids_strictly_increasing(self):
        rng = np.random.default_rng(10)
        docs = [random_ds(rng, 20) for _ in range(5)]
        tree = train_tree(docs, k=3, L=2, seed=1)
        index = InvertedIndex()
        for i, d in zip([3, 0, 4, 1, 2], docs):  # out-of-order inserts
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        for plist in index.postings.values():
            ids = [doc for doc, _ in plist]
            assert ids == sorted(ids)
            assert len(ids) == len(set(ids))


def build_toy_index(rng, n_docs, max_desc=30, k=3, L=2, seed=0, norm="l1"):
    docs = [random_ds(rng, int(rng.integers(3, max_desc))) for _ in range(n_docs)]
    tree = train_tree(docs, k=k, L=L, seed=seed)
    index = InvertedIndex(norm=norm)
    for i, d in enumerate(docs):
        index.add_document(tree, i, d, f"b{i}")
    index.finalize(tree)
    return docs, tree, index


class TestScoreQuery:
    def test_self_query_scores_zero_at_rank_one(self):
        rng = np.random.default_rng(11)
        docs, tree, index = build_toy_index(rng, 5)
        for i, d in enumerate(docs):
            result = index.score_query(tree, d)
            assert result.entries[0].book_id == f"b{i}"
            assert abs(result.entries[0].score) < 1e-9

    def test_degenerate_single_word_tree_all_docs_tie(self):
        # every descriptor identical: one chain of words shared by all docs
        docs = [ds_from([[1.0, 0.5]] * (i + 1)) for i in range(3)]
        tree = train_tree(docs, k=2, L=1, seed=0)
        index = InvertedIndex()
        for i, d in enumerate(docs):
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        result = index.score_query(tree, ds_from([[1.0, 0.5]] * 4))
        assert len(result.entries) == 3
        scores = [m.score for m in result.entries]
        assert max(scores) - min(scores) < 1e-12

    def test_matches_dense_oracle_on_toy_corpus(self):
        from bookvis.vocab_index import _quantize_counts

        rng = np.random.default_rng(12)
        docs, tree, index = build_toy_index(rng, 5)
        query = random_ds(rng, 12)
        result = index.score_query(tree, query, top_n=5)

        doc_counts = [_quantize_counts(tree, d.vectors) for d in docs]
        q_counts = _quantize_counts(tree, query.vectors)
        scores, cand = dense_tfidf_scores(doc_counts, q_counts, tree.node_count)
        expected = sorted((round(scores[i], 9), f"b{i}") for i in range(5) if cand[i])
        got = [(m.score, m.book_id) for m in result.entries]
        assert [b for _, b in got] == [b for _, b in expected]
        for i, (gs, bid) in enumerate(got):
            assert abs(gs - scores[int(bid[1:])]) < 1e-9

    def test_empty_query_returns_no_match(self):
        rng = np.random.default_rng(13)
        _, tree, index = build_toy_index(rng, 3)
        result = index.score_query(tree, DescriptorSet.empty((5, 5)))
        assert result.entries == []
        assert result.query_descriptor_count == 0

    def test_confidence_zero_with_single_candidate(self):
        # two docs in disjoint clusters: a query inside one cluster sees one candidate
        docs = [ds_from([[1.0, 0.0], [1.0, 0.1]]), ds_from([[-1.0, 0.0], [-1.0, 0.1]])]
        tree = train_tree(docs, k=2, L=1, seed=0)
        index = InvertedIndex()
        for i, d in enumerate(docs):
            index.add_document(tree, i, d, f"b{i}")
        index.finalize(tree)
        result = index.score_query(tree, ds_from([[1.0, 0.05]]))
        assert len(result.entries) == 1
        assert result.entries[0].confidence == 0.0

    def test_unfinalized_query_raises(self):
        rng = np.random.default_rng(14)
        docs = [random_ds(rng, 10) for _ in range(2)]
        tree = train_tree(docs, k=2, L=1, seed=0)
        index = InvertedIndex()
        index.add_document(tree, 0, docs[0], "b0")
        with pytest.raises(ValidationError):
            index.score_query(tree, docs[1])

    def test_l2_norm_mode(self):
        rng = np.random.default_rng(15)
        docs, tree, index = build_toy_index(rng, 4, norm="l2")
        from bookvis.vocab_index import _quantize_counts

        query = random_ds(rng, 8)
        result = index.score_query(tree, query)
        doc_counts = [_quantize_counts(tree, d.vectors) for d in docs]
        q_counts = _quantize_counts(tree, query.vectors)
        scores, cand = dense_tfidf_scores(doc_counts, q_counts, tree.node_count, norm="l2")
        expected = sorted((round(scores[i], 9), f"b{i}") for i in range(4) if cand[i])
        got = [(m.score, m.book_id) for m in result.entries]
        assert [b for _, b in got] == [b for _, b in expected]
        for i, (gs, bid) in enumerate(got):
            assert abs(gs - scores[int(bid[1:])]) < 1e-9


class TestSerialization:
    def test_roundtrip_identical_matches(self, tmp_path):
        rng = np.random.default_rng(16)
        docs, tree, index = build_toy_index(rng, 6)
        path = tmp_path / "toy.bvix"
        save_index(path, tree, index)
        tree2, index2 = load_index(path)
        for d in docs:
            a = index.score_query(tree, d)
            b = index2.score_query(tree2, d)
            assert [(m.book_id, m.score, m.confidence) for m in a.entries] == \
                   [(m.book_id, m.score, m.confidence) for m in b.entries]

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bvix"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_index(path)

    def test_unfinalized_save_rejected(self, tmp_path):
        rng = np.random.default_rng(17)
        docs = [random_ds(rng, 10) for _ in range(2)]
        tree = train_tree(docs, k=2, L=1, seed=0)
        with pytest.raises(ValidationError):
            save_index(tmp_path / "x.bvix", tree, InvertedIndex())


class TestEditionPromotion:
    def _fixture(self):
        catalog = make_catalog([
            make_book("b1", title="The Saga", edition_label=None),
            make_book("b2", title="The Saga", edition_label="2nd edition"),
            make_book("b3", title="Other Book"),
        ])
        return catalog

    def _matches(self):
        from bookvis.vocab_index import Match, RankedMatches

        return RankedMatches(entries=[
            Match("b1", 0.10, 0.5), Match("b2", 0.11, 0.0), Match("b3", 0.50, 0.0),
        ], query_descriptor_count=42)

    def test_hint_promotes_matching_edition(self):
        result = promote_editions(self._matches(), self._fixture(), ["2nd", "edition"])
        assert [m.book_id for m in result.entries] == ["b2", "b1", "b3"]

    def test_no_hints_is_identity(self):
        original = self._matches()
        result = promote_editions(original, self._fixture(), [])
        assert [m.book_id for m in result.entries] == ["b1", "b2", "b3"]

    def test_unrelated_hints_are_stable(self):
        result = promote_editions(self._matches(), self._fixture(), ["hardcover"])
        assert [m.book_id for m in result.entries] == ["b1", "b2", "b3"]

    def test_different_titles_never_reordered(self):
        catalog = make_catalog([
            make_book("b1", title="Alpha"),
            make_book("b2", title="Beta", edition_label="2nd edition"),
        ])
        from bookvis.vocab_index import Match, RankedMatches

        matches = RankedMatches(entries=[Match("b1", 0.1, 0.0), Match("b2", 0.2, 0.0)],
                                query_descriptor_count=1)
        result = promote_editions(matches, catalog, ["2nd", "edition"])
        assert [m.book_id for m in result.entries] == ["b1", "b2"]


class TestRecognizer:
    def test_exact_cover_rank_one(self, demo_corpus, demo_catalog, demo_index):
        rec = Recognizer(demo_index["tree"], demo_index["index"], demo_catalog)
        image = (demo_corpus / "covers" / "c4.png").read_bytes()
        result = rec.recognize(image)
        assert result.entries[0].book_id == "b4"

    def test_hints_empty_equals_plain_scoring(self, demo_corpus, demo_catalog, demo_index):
        rec = Recognizer(demo_index["tree"], demo_index["index"], demo_catalog)
        image = (demo_corpus / "covers" / "c2.png").read_bytes()
        plain = rec.recognize(image)
        hinted = rec.recognize(image, hints=None)
        assert [(m.book_id, m.score) for m in plain.entries] == \
               [(m.book_id, m.score) for m in hinted.entries]

    def test_decode_failure_propagates(self, demo_catalog, demo_index):
        from bookvis.errors import DecodeError

        rec = Recognizer(demo_index["tree"], demo_index["index"], demo_catalog)
        with pytest.raises(DecodeError):
            rec.recognize(b"not an image")
