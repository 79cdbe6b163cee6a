import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow.structure import (
    StructureError,
    average_path_length,
    dbscan,
    default_eps,
    harmonic,
    isolation_forest_scores,
    kurtosis,
    perplexity_of,
    tsne_embed,
    tsne_perplexity_inputs,
)
from fracflow.synthgen import brute_force_dbscan

TWO_TRIADS = np.array(
    [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1],
     [5.0, 5.0], [5.1, 5.0], [5.0, 5.1],
     [20.0, 20.0]]
)


def _same_partition(a, b):
    if not np.array_equal(a == -1, b == -1):
        return False
    mapping = {}
    for x, y in zip(a, b):
        if x == -1:
            continue
        if mapping.setdefault(x, y) != y:
            return False
    return len(set(mapping.values())) == len(mapping)


class TestDbscan:
    def test_two_triads_fixture(self):
        out = dbscan(TWO_TRIADS, eps=0.5, min_pts=3)
        assert out.labels.tolist() == [0, 0, 0, 1, 1, 1, -1]
        assert out.n_clusters == 2

    def test_matches_oracle_on_fixture(self):
        a = dbscan(TWO_TRIADS, eps=0.5, min_pts=3)
        b = brute_force_dbscan(TWO_TRIADS, eps=0.5, min_pts=3)
        assert np.array_equal(a.labels, b.labels)

    def test_min_pts_one_makes_everything_core(self):
        out = dbscan(TWO_TRIADS, eps=0.5, min_pts=1)
        assert (out.labels >= 0).all()
        assert out.n_clusters == 3

    def test_single_point_noise(self):
        out = dbscan(np.zeros((1, 2)), eps=1.0, min_pts=2)
        assert out.labels.tolist() == [-1]

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(30, 2))
        base = dbscan(pts, eps=0.6, min_pts=3)
        perm = rng.permutation(30)
        permuted = dbscan(pts[perm], eps=0.6, min_pts=3)
        assert _same_partition(base.labels[perm], permuted.labels)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_oracle_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 35))
        pts = rng.normal(size=(n, int(rng.integers(1, 4))))
        eps = float(rng.uniform(0.2, 1.5))
        min_pts = int(rng.integers(1, 6))
        a = dbscan(pts, eps, min_pts)
        b = brute_force_dbscan(pts, eps, min_pts)
        assert _same_partition(a.labels, b.labels)

    def test_invalid_params(self):
        with pytest.raises(StructureError):
            dbscan(TWO_TRIADS, eps=0.0, min_pts=3)
        with pytest.raises(StructureError):
            dbscan(np.zeros((0, 2)), eps=1.0, min_pts=1)

    def test_default_eps_is_positive_and_monotone_in_percentile(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(50, 3))
        lo = default_eps(pts, 4, percentile=50)
        hi = default_eps(pts, 4, percentile=95)
        assert 0 < lo <= hi


class TestIsolationForest:
    def test_path_length_constants(self):
        assert average_path_length(1) == 0.0
        assert average_path_length(2) == pytest.approx(1.0)
        # c(n) = 2 H(n-1) - 2 (n-1)/n
        assert average_path_length(10) == pytest.approx(
            2 * sum(1 / k for k in range(1, 10)) - 2 * 9 / 10
        )

    def test_harmonic_approximation_continuity(self):
        assert abs(harmonic(1000) - harmonic(1001) + 1 / 1001) < 1e-6

    def test_far_outlier_scores_highest(self):
        rng = np.random.default_rng(2)
        pts = np.vstack([rng.normal(size=(60, 3)), [[12.0, 12.0, 12.0]]])
        out = isolation_forest_scores(pts, n_trees=50, subsample=32, seed=0)
        assert np.argmax(out.scores) == 60
        assert ((out.scores > 0) & (out.scores <= 1)).all()

    def test_seeded_determinism(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(40, 2))
        a = isolation_forest_scores(pts, 20, 16, seed=5).scores
        b = isolation_forest_scores(pts, 20, 16, seed=5).scores
        assert np.array_equal(a, b)

    def test_invalid_subsample(self):
        with pytest.raises(StructureError):
            isolation_forest_scores(np.zeros((5, 2)), 10, subsample=6)


class TestKurtosis:
    def test_known_distributions(self):
        rng = np.random.default_rng(4)
        gauss = rng.normal(size=200000)
        assert abs(kurtosis(gauss)) < 0.1
        uniform = rng.uniform(size=200000)
        assert kurtosis(uniform) == pytest.approx(-1.2, abs=0.05)

    def test_hand_computed(self):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        c = v - v.mean()
        expect = (c**4).mean() / (c**2).mean() ** 2 - 3
        assert kurtosis(v) == pytest.approx(expect)

    def test_degenerate_inputs(self):
        with pytest.raises(StructureError):
            kurtosis([1.0, 1.0, 1.0, 1.0])
        with pytest.raises(StructureError):
            kurtosis([1.0, 2.0, 3.0])


class TestTsne:
    def test_perplexity_bisection_hits_target(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(40, 4))
        for target in (5.0, 12.0):
            P, betas = tsne_perplexity_inputs(pts, target)
            # conditional rows (before symmetrization) carry the target
            d2 = ((pts[:, None] - pts[None, :]) ** 2).sum(-1)
            for i in range(0, 40, 13):
                row = np.delete(d2[i], i)
                p = np.exp(-row * betas[i])
                p /= p.sum()
                assert perplexity_of(p) == pytest.approx(target, rel=1e-4)

    def test_affinities_symmetric_and_normalized(self):
        rng = np.random.default_rng(6)
        P, _ = tsne_perplexity_inputs(rng.normal(size=(25, 3)), 8.0)
        assert np.allclose(P, P.T)
        assert P.sum() == pytest.approx(1.0, abs=1e-6)

    def test_separated_clusters_stay_separated(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(20, 5))
        b = rng.normal(size=(20, 5)) + 25.0
        Y = tsne_embed(np.vstack([a, b]), perplexity=8.0, iters=400, seed=0)
        da = Y[:20].mean(axis=0)
        db = Y[20:].mean(axis=0)
        within = max(Y[:20].std(), Y[20:].std())
        assert np.linalg.norm(da - db) > 2.0 * within

    def test_seeded_determinism(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(15, 3))
        a = tsne_embed(pts, perplexity=4.0, iters=60, seed=2)
        b = tsne_embed(pts, perplexity=4.0, iters=60, seed=2)
        assert np.array_equal(a, b)

    def test_bad_perplexity(self):
        with pytest.raises(StructureError):
            tsne_embed(np.zeros((5, 2)), perplexity=5.0)
