import numpy as np
import pytest

from bookvis.cluster import kmeans
from bookvis.errors import ValidationError


def test_all_points_identical_collapses_to_one_centroid():
    pts = np.tile([2.0, 3.0, 4.0], (10, 1))
    centroids, assign, trace = kmeans(pts, k=3, seed=0)
    assert centroids.shape == (1, 3)
    assert np.allclose(centroids[0], [2.0, 3.0, 4.0])
    assert set(assign.tolist()) == {0}


def test_two_separated_clouds_recover_means():
    # hand-computed cloud means: (0.5, 0) and (10.5, 1)
    cloud_a = np.array([[0.0, 0.0], [1.0, 0.0]])
    cloud_b = np.array([[10.0, 1.0], [11.0, 1.0]])
    pts = np.concatenate([cloud_a, cloud_b])
    centroids, assign, _ = kmeans(pts, k=2, seed=1)
    got = sorted(centroids.tolist())
    assert np.allclose(got, [[0.5, 0.0], [10.5, 1.0]])
    assert assign[0] == assign[1] and assign[2] == assign[3]
    assert assign[0] != assign[2]


def test_objective_trace_monotone_on_random_input():
    rng = np.random.default_rng(7)
    for trial in range(25):
        pts = rng.random((40, 3))
        _, _, trace = kmeans(pts, k=4, seed=trial)
        assert all(a >= b - 1e-12 for a, b in zip(trace, trace[1:]))


def test_deterministic_under_fixed_seed():
    rng = np.random.default_rng(3)
    pts = rng.random((60, 5))
    c1, a1, t1 = kmeans(pts, k=5, seed=99)
    c2, a2, t2 = kmeans(pts, k=5, seed=99)
    assert np.array_equal(c1, c2)
    assert np.array_equal(a1, a2)
    assert t1 == t2


def test_distinct_count_below_k_returns_fewer_centroids():
    pts = np.array([[0.0], [0.0], [1.0], [1.0]])
    centroids, _, _ = kmeans(pts, k=4, seed=0)
    assert centroids.shape[0] == 2


def test_empty_points_raise():
    with pytest.raises(ValidationError):
        kmeans(np.zeros((0, 2)), k=2, seed=0)


def test_k_below_one_raises():
    with pytest.raises(ValidationError):
        kmeans(np.ones((3, 2)), k=0, seed=0)


def test_empty_cluster_reseeded_from_farthest_point():
    # three tight points and one far outlier with k=3: every centroid ends
    # non-degenerate and the objective still never increases
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [50.0, 50.0]])
    centroids, assign, trace = kmeans(pts, k=3, seed=5)
    assert centroids.shape[0] == 3
    assert all(a >= b - 1e-12 for a, b in zip(trace, trace[1:]))
    # the outlier must own its centroid exactly
    assert np.any(np.all(np.isclose(centroids, [50.0, 50.0]), axis=1))
