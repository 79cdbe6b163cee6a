import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow.regress import (
    EarlyStopper,
    GbdtModel,
    RegressError,
    TrainerSpec,
    bin_features,
    fit_forest,
    fit_gbdt,
    fit_tree,
    fold_indices,
    grid_search,
    kfold_cv,
    knn_regress,
    mape,
    r2_score,
    select_model,
)


def _friedman(rng, n):
    X = rng.uniform(size=(n, 5))
    y = (
        10 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20 * (X[:, 2] - 0.5) ** 2
        + 10 * X[:, 3]
        + 5 * X[:, 4]
    )
    return X, y


class TestBinning:
    def test_midpoint_edges_small_cardinality(self):
        X = np.array([[1.0], [2.0], [4.0], [2.0]])
        binned, edges = bin_features(X)
        assert edges[0].tolist() == [1.5, 3.0]
        assert binned[:, 0].tolist() == [0, 1, 2, 1]

    def test_high_cardinality_capped(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(2000, 1))
        binned, edges = bin_features(X)
        assert len(edges[0]) <= 254
        assert binned.max() <= len(edges[0])


class TestFitTree:
    def test_single_split_hand_trace(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 1.0, 5.0, 5.0])
        tree = fit_tree(X, y, depth=1)
        assert tree.n_splits == 1
        assert tree.threshold[0] == 1.5
        assert tree.predict(np.array([[0.5]]))[0] == 1.0
        assert tree.predict(np.array([[2.5]]))[0] == 5.0

    def test_l2_shrinks_leaves(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 4.0])
        tree = fit_tree(X, y, depth=1, l2=1.0)
        # leaf value = sum / (n + l2) = 4 / 2
        assert tree.predict(np.array([[1.0]]))[0] == pytest.approx(2.0)

    def test_tie_breaks_lowest_feature(self):
        # duplicated feature: identical gains, must split on index 0
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        tree = fit_tree(X, y, depth=1)
        assert tree.feature[0] == 0

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        tree = fit_tree(X, y, depth=8, min_leaf=10)
        leaf_counts = tree.count[tree.feature < 0]
        assert (leaf_counts >= 10).all()

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        X, y = _friedman(rng, 200)
        a = fit_tree(X, y, depth=5)
        b = fit_tree(X, y, depth=5)
        assert np.array_equal(a.threshold, b.threshold)

    def test_row_order_invariance(self):
        rng = np.random.default_rng(3)
        X, y = _friedman(rng, 150)
        perm = rng.permutation(150)
        a = fit_tree(X, y, depth=4)
        b = fit_tree(X[perm], y[perm], depth=4)
        q, _ = _friedman(np.random.default_rng(99), 50)
        assert np.allclose(a.predict(q), b.predict(q))

    def test_pure_memorization(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(64, 2))
        y = rng.normal(size=64)
        tree = fit_tree(X, y, depth=20)
        assert np.abs(tree.predict(X) - y).max() < 1e-9

    def test_empty_input(self):
        with pytest.raises(RegressError):
            fit_tree(np.empty((0, 2)), np.empty(0))


class TestForest:
    def test_single_tree_no_randomness_equals_exact_tree(self):
        rng = np.random.default_rng(5)
        X, y = _friedman(rng, 200)
        forest = fit_forest(X, y, mode="random_forest", n_trees=1, depth=5,
                            feature_frac=1.0, bootstrap=False)
        tree = fit_tree(X, y, depth=5)
        q, _ = _friedman(np.random.default_rng(100), 40)
        assert np.allclose(forest.predict(q), tree.predict(q))

    def test_averaging_reduces_variance(self):
        rng = np.random.default_rng(6)
        X, y = _friedman(rng, 400)
        y = y + rng.normal(scale=2.0, size=len(y))
        Xq, yq = _friedman(np.random.default_rng(101), 200)
        one = fit_forest(X, y, n_trees=1, depth=10, seed=0)
        many = fit_forest(X, y, n_trees=60, depth=10, feature_frac=0.6, seed=0)
        assert (
            ((many.predict(Xq) - yq) ** 2).mean()
            < ((one.predict(Xq) - yq) ** 2).mean()
        )

    def test_extra_trees_seeded(self):
        rng = np.random.default_rng(7)
        X, y = _friedman(rng, 150)
        a = fit_forest(X, y, mode="extra_trees", n_trees=10, seed=3)
        b = fit_forest(X, y, mode="extra_trees", n_trees=10, seed=3)
        assert np.array_equal(a.predict(X), b.predict(X))

    def test_bad_mode(self):
        with pytest.raises(RegressError):
            fit_forest(np.zeros((4, 1)), np.zeros(4), mode="boosting")


class TestEarlyStopper:
    def test_hand_traced_sequence(self):
        # validation scores .1 .2 .2 .2 .2 .2 .2 -> best at round 2,
        # five non-improving rounds -> stop at round 7
        stopper = EarlyStopper(od_wait=5)
        outcomes = [stopper.update(s) for s in [.1, .2, .2, .2, .2, .2, .2]]
        assert outcomes == [False, False, False, False, False, False, True]
        assert stopper.best_round == 2

    def test_improvement_resets_wait(self):
        stopper = EarlyStopper(od_wait=2)
        # best moves to round 3; two non-improving rounds end it at round 5
        assert [stopper.update(s) for s in [.1, .1, .3, .2, .2]] == [
            False, False, False, False, True,
        ]
        assert stopper.best_round == 3

    def test_disabled(self):
        stopper = EarlyStopper(od_wait=0)
        assert not any(stopper.update(s) for s in [.5, .4, .3, .2, .1])


class TestGbdt:
    def test_training_mse_monotone(self):
        rng = np.random.default_rng(8)
        X, y = _friedman(rng, 300)
        model = fit_gbdt(X, y, n_rounds=80, depth=4, learning_rate=0.1,
                         od_wait=0, l2_leaf=0.5)
        curve = np.array(model.train_mse_curve)
        assert (np.diff(curve) <= 1e-9).all()

    def test_noiseless_memorization(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(50, 2))
        y = rng.normal(size=50)
        model = fit_gbdt(X, y, n_rounds=5, depth=20, learning_rate=1.0,
                         od_wait=0, l2_leaf=0.0)
        assert model.train_mse_curve[-1] < 1e-12

    def test_early_stopping_truncates_prediction(self):
        rng = np.random.default_rng(10)
        X, y = _friedman(rng, 400)
        y = y + rng.normal(scale=3.0, size=len(y))
        Xv, yv = X[:100], y[:100]
        model = fit_gbdt(X[100:], y[100:], Xv, yv, n_rounds=500, depth=6,
                         learning_rate=0.3, od_wait=5)
        assert model.best_iteration <= len(model.trees)
        assert len(model.trees) - model.best_iteration <= 5
        manual = np.full(100, model.base_score)
        for t in model.trees[: model.best_iteration]:
            manual += model.learning_rate * t.predict(Xv)
        assert np.allclose(model.predict(Xv), manual)

    def test_constant_target_reports_zero_iterations(self):
        X = np.arange(20.0).reshape(-1, 1)
        y = np.full(20, 3.0)
        model = fit_gbdt(X, y, X, y, n_rounds=10, od_wait=5)
        assert model.best_iteration == 0
        assert (model.predict(X) == 3.0).all()

    def test_od_wait_without_validation_rejected(self):
        with pytest.raises(RegressError):
            fit_gbdt(np.zeros((4, 1)), np.zeros(4), od_wait=5)

    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        X, y = _friedman(rng, 100)
        model = fit_gbdt(X, y, X[:30], y[:30], n_rounds=20, depth=3, od_wait=5)
        path = tmp_path / "m.json"
        model.save(path)
        back = GbdtModel.load(path)
        assert np.array_equal(back.predict(X), model.predict(X))
        assert back.best_iteration == model.best_iteration


class TestKnn:
    def test_exact_neighbors(self):
        X = np.array([[0.0], [1.0], [10.0]])
        y = np.array([1.0, 3.0, 100.0])
        out = knn_regress(X, y, np.array([[0.4]]), k=2)
        assert out[0] == 2.0

    def test_k_equals_n_is_global_mean(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(20, 2))
        y = rng.normal(size=20)
        out = knn_regress(X, y, X[:3], k=20)
        assert np.allclose(out, y.mean())

    def test_bad_k(self):
        with pytest.raises(RegressError):
            knn_regress(np.zeros((3, 1)), np.zeros(3), np.zeros((1, 1)), k=4)


class TestMetrics:
    def test_r2_hand_values(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r2_score(y, y) == 1.0
        assert r2_score(y, np.full(3, 2.0)) == 0.0

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_r2_below_one(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=10)
        yhat = rng.normal(size=10)
        assert r2_score(y, yhat) <= 1.0

    def test_r2_errors(self):
        with pytest.raises(RegressError):
            r2_score([1.0, 1.0], [1.0, 2.0])
        with pytest.raises(RegressError):
            r2_score([1.0], [1.0])

    def test_mape(self):
        assert mape([100.0, 200.0], [110.0, 180.0]) == pytest.approx(10.0)
        with pytest.raises(RegressError):
            mape([0.0, 1.0], [1.0, 1.0])


class TestCvAndGrid:
    def test_fold_indices_partition(self):
        folds = fold_indices(23, 4, seed=0)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        assert sorted(len(f) for f in folds) == [5, 6, 6, 6]

    def test_kfold_scores_plausible(self):
        rng = np.random.default_rng(13)
        X, y = _friedman(rng, 300)
        spec = TrainerSpec.make("decision_tree", depth=6)
        rep = kfold_cv(X, y, spec, k=3, seed=0)
        assert len(rep.fold_scores) == 3
        assert rep.mean > 0.5

    def test_held_out_set_scored(self):
        rng = np.random.default_rng(14)
        X, y = _friedman(rng, 300)
        spec = TrainerSpec.make("decision_tree", depth=6)
        rep = kfold_cv(X[:250], y[:250], spec, k=3, seed=0,
                       X_test=X[250:], y_test=y[250:])
        assert rep.test_r2 is not None and rep.test_r2 > 0.5

    def test_grid_search_prefers_good_cell(self):
        # pure interaction target: depth-1 boosting cannot express it
        rng = np.random.default_rng(15)
        X = rng.normal(size=(250, 3))
        y = 10.0 * X[:, 0] * X[:, 1]
        best, rows = grid_search(
            X, y, depth_grid=[1, 5], l2_grid=[0.5],
            fixed_params={"learning_rate": 0.2, "n_rounds": 40, "od_wait": 5},
            k=3, seed=0,
        )
        assert best["depth"] == 5
        assert len(rows) == 2

    def test_grid_tie_break_smaller_depth(self):
        # zero learning rate makes every cell score identically, so the tie
        # rule (smaller depth, then smaller l2) decides
        rng = np.random.default_rng(16)
        X = rng.normal(size=(60, 2))
        y = rng.normal(size=60)
        best, rows = grid_search(
            X, y, depth_grid=[2, 3], l2_grid=[0.5, 1.0],
            fixed_params={"learning_rate": 0.0, "n_rounds": 2, "od_wait": 0},
            k=2, seed=0,
        )
        assert len({round(r["cv_mean_r2"], 12) for r in rows}) == 1
        assert best == {"depth": 2, "l2_leaf": 0.5}

    def test_select_model_prefers_best_single(self):
        rep_a = kfold_cv(
            *_friedman(np.random.default_rng(17), 200),
            TrainerSpec.make("decision_tree", depth=6), k=2, seed=0,
        )
        a = rep_a
        b = kfold_cv(
            *_friedman(np.random.default_rng(17), 200),
            TrainerSpec.make("decision_tree", depth=1), k=2, seed=0,
        )
        assert select_model([("deep", a), ("stump", b)]) == "deep"

    def test_select_model_empty(self):
        with pytest.raises(RegressError):
            select_model([])
