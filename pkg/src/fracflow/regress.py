"""Regression model zoo on a shared histogram tree engine.

Features are binned once per fit: every candidate threshold is the midpoint
between two adjacent observed feature values (all midpoints when a feature
has at most 255 distinct values, quantile-thinned above that).  Split search,
growth and prediction run in numba kernels so that the 315-cell grid search
stays inside its time budget on one core.  All fits are deterministic: ties
in split gain break toward the lowest feature index, then the lowest
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

MAX_BINS = 255
GAIN_EPS = 1e-12


class RegressError(ValueError):
    pass


# -- binning ---------------------------------------------------------------


def bin_features(X: np.ndarray):
    """Per-feature bin edges (midpoints of adjacent observed values) + codes."""
    n, m = X.shape
    edges: list[np.ndarray] = []
    binned = np.empty((n, m), dtype=np.uint8)
    for j in range(m):
        col = X[:, j]
        uniq = np.unique(col)
        if len(uniq) <= MAX_BINS:
            e = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            sv = np.sort(col)
            cand = []
            for b in range(1, MAX_BINS):
                pos = round(b * n / MAX_BINS)
                if 0 < pos < n and sv[pos - 1] < sv[pos]:
                    cand.append((sv[pos - 1] + sv[pos]) / 2.0)
            e = np.unique(np.array(cand))
        edges.append(e.astype(np.float64))
        binned[:, j] = np.searchsorted(e, col, side="left").astype(np.uint8)
    return binned, edges


# -- numba kernels ---------------------------------------------------------


@njit(cache=True)
def _grow_kernel(
    binned,        # (N, M) uint8
    nbins,         # (M,) int64, number of bins per feature
    grad,          # (N,) float64 residuals
    sample_idx,    # (n,) int64 rows of this fit
    max_depth,
    min_leaf,
    l2,
    mode,          # 0 = exact, 1 = rf (feature subset), 2 = extra (random thr)
    n_sub_features,
    rng_seed,
    feature, thr_bin, left, right, value, gain, count,  # out: node arrays
    train_pred,    # (N,) float64, leaf value written at each sample's row
):
    np.random.seed(rng_seed)
    n_total, m = binned.shape
    max_b = 0
    for j in range(m):
        if nbins[j] > max_b:
            max_b = nbins[j]
    hist_sum = np.zeros((m, max_b))
    hist_cnt = np.zeros((m, max_b), dtype=np.int64)
    idx = sample_idx.copy()
    buf = np.empty_like(idx)
    perm = np.empty(m, dtype=np.int64)

    # stack of (node, start, end, depth)
    cap = feature.shape[0]
    stack = np.empty((cap, 4), dtype=np.int64)
    top = 0
    stack[top, 0] = 0
    stack[top, 1] = 0
    stack[top, 2] = len(idx)
    stack[top, 3] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start
        s = 0.0
        for p in range(start, end):
            s += grad[idx[p]]
        value[node] = s / (n + l2)
        count[node] = n
        feature[node] = -1
        gain[node] = 0.0
        if depth >= max_depth or n < 2 * min_leaf or n_nodes + 2 > cap:
            for p in range(start, end):
                train_pred[idx[p]] = value[node]
            continue

        # candidate features for this split
        if mode == 1 and n_sub_features < m:
            for j in range(m):
                perm[j] = j
            for j in range(n_sub_features):
                k = j + np.random.randint(0, m - j)
                tmp = perm[j]
                perm[j] = perm[k]
                perm[k] = tmp
            # sort the chosen prefix so ties still break by lowest feature
            sub = np.sort(perm[:n_sub_features])
            n_feats = n_sub_features
        else:
            sub = perm
            for j in range(m):
                perm[j] = j
            n_feats = m

        # histograms over the node's samples
        for q in range(n_feats):
            f = sub[q]
            for b in range(nbins[f]):
                hist_sum[f, b] = 0.0
                hist_cnt[f, b] = 0
            for p in range(start, end):
                r = idx[p]
                b = binned[r, f]
                hist_sum[f, b] += grad[r]
                hist_cnt[f, b] += 1

        parent_score = s * s / (n + l2)
        best_gain = 0.0
        best_f = -1
        best_b = -1
        for q in range(n_feats):
            f = sub[q]
            if mode == 2:
                # one random boundary, uniform over the node's bin range
                lo_b = 0
                while lo_b < nbins[f] and hist_cnt[f, lo_b] == 0:
                    lo_b += 1
                hi_b = nbins[f] - 1
                while hi_b > 0 and hist_cnt[f, hi_b] == 0:
                    hi_b -= 1
                if hi_b <= lo_b:
                    continue
                b = lo_b + np.random.randint(0, hi_b - lo_b)
                ls = 0.0
                lc = 0
                for bb in range(b + 1):
                    ls += hist_sum[f, bb]
                    lc += hist_cnt[f, bb]
                if lc < min_leaf or n - lc < min_leaf:
                    continue
                rs = s - ls
                g = (
                    ls * ls / (lc + l2)
                    + rs * rs / (n - lc + l2)
                    - parent_score
                )
                if g > best_gain + GAIN_EPS:
                    best_gain = g
                    best_f = f
                    best_b = b
            else:
                ls = 0.0
                lc = 0
                for b in range(nbins[f] - 1):
                    ls += hist_sum[f, b]
                    lc += hist_cnt[f, b]
                    if lc < min_leaf:
                        continue
                    if n - lc < min_leaf:
                        break
                    rs = s - ls
                    g = (
                        ls * ls / (lc + l2)
                        + rs * rs / (n - lc + l2)
                        - parent_score
                    )
                    if g > best_gain + GAIN_EPS:
                        best_gain = g
                        best_f = f
                        best_b = b
        if best_f < 0:
            for p in range(start, end):
                train_pred[idx[p]] = value[node]
            continue

        # stable partition: left block keeps original order, then right block
        nl = 0
        for p in range(start, end):
            if binned[idx[p], best_f] <= best_b:
                buf[start + nl] = idx[p]
                nl += 1
        nr = 0
        for p in range(start, end):
            if binned[idx[p], best_f] > best_b:
                buf[start + nl + nr] = idx[p]
                nr += 1
        for p in range(start, end):
            idx[p] = buf[p]

        feature[node] = best_f
        thr_bin[node] = best_b
        gain[node] = best_gain
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _predict_kernel(X, feature, threshold, left, right, value, out):
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]


# -- tree / forest / gbdt models ------------------------------------------


@dataclass
class Tree:
    """Flat-array regression tree; feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int((self.feature >= 0).sum())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        _predict_kernel(
            X, self.feature, self.threshold, self.left, self.right, self.value, out
        )
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "count": self.count.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            value=np.array(d["value"], dtype=np.float64),
            count=np.array(d["count"], dtype=np.int64),
            gain=np.array(d["gain"], dtype=np.float64),
        )


def _grow_tree(
    binned,
    edges,
    grad,
    sample_idx,
    depth,
    min_leaf,
    l2,
    mode=0,
    n_sub_features=0,
    rng_seed=0,
    train_pred=None,
):
    n_total, m = binned.shape
    n = len(sample_idx)
    max_leaves = max(1, n // max(min_leaf, 1))
    cap = min(2 ** (depth + 1) + 1, 4 * max_leaves + 8)
    feature = np.full(cap, -1, dtype=np.int64)
    thr_bin = np.zeros(cap, dtype=np.int64)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    gain = np.zeros(cap, dtype=np.float64)
    count = np.zeros(cap, dtype=np.int64)
    if train_pred is None:
        train_pred = np.zeros(n_total)
    nbins = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    n_nodes = _grow_kernel(
        binned,
        nbins,
        np.ascontiguousarray(grad, dtype=np.float64),
        np.ascontiguousarray(sample_idx, dtype=np.int64),
        depth,
        min_leaf,
        float(l2),
        mode,
        n_sub_features,
        rng_seed,
        feature,
        thr_bin,
        left,
        right,
        value,
        gain,
        count,
        train_pred,
    )
    threshold = np.zeros(n_nodes)
    for i in range(n_nodes):
        if feature[i] >= 0:
            threshold[i] = edges[feature[i]][thr_bin[i]]
    return Tree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold,
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
        count=count[:n_nodes].copy(),
        gain=gain[:n_nodes].copy(),
    )


def fit_tree(X, y, depth: int = 6, min_leaf: int = 1, l2: float = 0.0) -> Tree:
    """Greedy variance-reduction tree with L2-shrunk leaf values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.size == 0 or len(y) == 0:
        raise RegressError("empty data")
    if len(y) < min_leaf:
        raise RegressError("fewer rows than min_leaf")
    binned, edges = bin_features(X)
    return _grow_tree(
        binned, edges, y, np.arange(len(y), dtype=np.int64), depth, min_leaf, l2
    )


@dataclass
class ForestModel:
    trees: list[Tree]
    mode: str

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)


def fit_forest(
    X,
    y,
    mode: str = "random_forest",
    n_trees: int = 100,
    depth: int = 8,
    min_leaf: int = 1,
    feature_frac: float = 1.0,
    seed: int = 0,
    bootstrap: bool | None = None,
) -> ForestModel:
    """Random forest (bootstrap rows, per-split feature subset) or extra
    trees (full rows, random thresholds)."""
    if n_trees < 1:
        raise RegressError("n_trees must be >= 1")
    if mode not in ("random_forest", "extra_trees"):
        raise RegressError(f"bad mode {mode!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    binned, edges = bin_features(X)
    rng = np.random.default_rng(seed)
    if bootstrap is None:
        bootstrap = mode == "random_forest"
    n_sub = max(1, round(feature_frac * m))
    kernel_mode = 1 if mode == "random_forest" else 2
    if mode == "random_forest" and n_sub >= m and not bootstrap:
        kernel_mode = 0  # degenerates to the exact single-tree fit
    trees = []
    for t in range(n_trees):
        if bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        trees.append(
            _grow_tree(
                binned,
                edges,
                y,
                rows.astype(np.int64),
                depth,
                min_leaf,
                0.0,
                mode=kernel_mode,
                n_sub_features=n_sub,
                rng_seed=int(rng.integers(0, 2**31 - 1)),
            )
        )
    return ForestModel(trees=trees, mode=mode)


@dataclass
class GbdtModel:
    """Additive tree ensemble with shrinkage and an early-stopping record.

    Prediction uses trees[:best_iteration] only.
    """

    base_score: float
    trees: list[Tree]
    learning_rate: float
    depth: int
    l2_leaf: float
    best_iteration: int
    validation_curve: list[float] = field(default_factory=list)
    train_mse_curve: list[float] = field(default_factory=list)

    def predict(self, X, n_trees: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        k = self.best_iteration if n_trees is None else n_trees
        acc = np.full(X.shape[0], self.base_score)
        for t in self.trees[:k]:
            acc += self.learning_rate * t.predict(X)
        return acc

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "gbdt",
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "depth": self.depth,
            "l2_leaf": self.l2_leaf,
            "best_iteration": self.best_iteration,
            "validation_curve": list(self.validation_curve),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_json(cls, d: dict) -> "GbdtModel":
        return cls(
            base_score=d["base_score"],
            trees=[Tree.from_dict(t) for t in d["trees"]],
            learning_rate=d["learning_rate"],
            depth=d["depth"],
            l2_leaf=d["l2_leaf"],
            best_iteration=d["best_iteration"],
            validation_curve=list(d["validation_curve"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path) -> "GbdtModel":
        with open(path) as f:
            return cls.from_json(json.load(f))


class EarlyStopper:
    """Iteration-type overfitting detector.

    Feed one validation score per round; ``update`` returns True when
    ``od_wait`` consecutive rounds have failed to improve on the best round.
    """

    def __init__(self, od_wait: int):
        self.od_wait = od_wait
        self.best_score = -np.inf
        self.best_round = 0
        self.round = 0

    def update(self, score: float) -> bool:
        self.round += 1
        if score > self.best_score:
            self.best_score = score
            self.best_round = self.round
            return False
        return self.od_wait > 0 and self.round - self.best_round >= self.od_wait


def fit_gbdt(
    X_train,
    y_train,
    X_val=None,
    y_val=None,
    n_rounds: int = 2000,
    depth: int = 7,
    l2_leaf: float = 0.6,
    learning_rate: float = 0.02,
    od_wait: int = 5,
    min_leaf: int = 1,
) -> GbdtModel:
    """Stagewise squared-error boosting with iteration-type early stopping.

    After each round the validation R-squared is recorded; training halts
    once ``od_wait`` consecutive rounds fail to improve on the best round,
    and ``best_iteration`` is the tree count at the optimum.
    """
    X_train = np.asarray(X_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    has_val = X_val is not None and y_val is not None and len(np.atleast_1d(y_val))
    if od_wait > 0 and not has_val:
        raise RegressError("early stopping requires validation data")
    if has_val:
        X_val = np.asarray(X_val, dtype=float)
        y_val = np.asarray(y_val, dtype=float)

    binned, edges = bin_features(X_train)
    n = len(y_train)
    base = float(y_train.mean())
    F = np.full(n, base)
    trees: list[Tree] = []
    val_curve: list[float] = []
    mse_curve: list[float] = []
    stopper = EarlyStopper(od_wait)
    if has_val:
        Fval = np.full(len(y_val), base)
        sst = float(((y_val - y_val.mean()) ** 2).sum())
    sample_idx = np.arange(n, dtype=np.int64)
    train_pred = np.zeros(n)
    for rnd in range(1, n_rounds + 1):
        grad = y_train - F
        tree = _grow_tree(
            binned,
            edges,
            grad,
            sample_idx,
            depth,
            min_leaf,
            l2_leaf,
            train_pred=train_pred,
        )
        trees.append(tree)
        F += learning_rate * train_pred
        mse_curve.append(float(((y_train - F) ** 2).mean()))
        if has_val:
            Fval += learning_rate * tree.predict(X_val)
            sse = float(((y_val - Fval) ** 2).sum())
            r2 = 1.0 - sse / sst if sst > 0 else 0.0
            val_curve.append(r2)
            if stopper.update(r2):
                break
    best_iter = stopper.best_round if has_val else len(trees)
    # a constant target produces zero-gain stumps: report best iteration 0
    if all(t.n_splits == 0 for t in trees):
        best_iter = 0
    return GbdtModel(
        base_score=base,
        trees=trees,
        learning_rate=learning_rate,
        depth=depth,
        l2_leaf=l2_leaf,
        best_iteration=best_iter,
        validation_curve=val_curve,
        train_mse_curve=mse_curve,
    )


def knn_regress(X_train, y_train, X_query, k: int) -> np.ndarray:
    """Mean target of the k nearest training rows (ties break by row index)."""
    X_train = np.asarray(X_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    X_query = np.asarray(X_query, dtype=float)
    if k < 1:
        raise RegressError("k must be >= 1")
    if k > len(y_train):
        raise RegressError("k exceeds training size")
    d2 = (
        (X_query**2).sum(axis=1)[:, None]
        + (X_train**2).sum(axis=1)[None, :]
        - 2.0 * X_query @ X_train.T
    )
    out = np.empty(X_query.shape[0])
    for i in range(X_query.shape[0]):
        nearest = np.argsort(d2[i], kind="stable")[:k]
        out[i] = y_train[nearest].mean()
    return out


# -- metrics ---------------------------------------------------------------


def r2_score(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if len(y) != len(yhat) or len(y) < 2:
        raise RegressError("need two equal-length vectors")
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0:
        raise RegressError("undefined R^2 for constant target")
    return 1.0 - float(((y - yhat) ** 2).sum()) / sst


def mape(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if (y == 0).any():
        raise RegressError("MAPE undefined for zero targets")
    return float(np.mean(np.abs(y - yhat) / np.abs(y))) * 100.0


# -- trainers, CV, grid search --------------------------------------------


@dataclass(frozen=True)
class TrainerSpec:
    """Named model recipe; ``fit`` returns an object with ``predict``."""

    kind: str  # decision_tree | random_forest | extra_trees | gbdt | knn
    params: tuple = ()  # sorted (key, value) pairs, hashable

    @classmethod
    def make(cls, kind: str, **params) -> "TrainerSpec":
        return cls(kind=kind, params=tuple(sorted(params.items())))

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def fit(self, X, y, seed: int = 0):
        p = self.param_dict
        if self.kind == "decision_tree":
            return fit_tree(X, y, **p)
        if self.kind in ("random_forest", "extra_trees"):
            return fit_forest(X, y, mode=self.kind, seed=seed, **p)
        if self.kind == "gbdt":
            val_frac = p.pop("val_frac", 0.15)
            rng = np.random.default_rng(seed)
            n = len(y)
            perm = rng.permutation(n)
            n_val = max(1, int(round(val_frac * n)))
            val, fit_rows = perm[:n_val], perm[n_val:]
            return fit_gbdt(X[fit_rows], y[fit_rows], X[val], y[val], **p)
        if self.kind == "knn":
            k = p.get("k", 5)
            Xt = np.asarray(X, dtype=float)
            yt = np.asarray(y, dtype=float)

            class _Knn:
                def predict(self, Xq):
                    return knn_regress(Xt, yt, Xq, k)

            return _Knn()
        raise RegressError(f"unknown trainer kind {self.kind!r}")


@dataclass
class CvReport:
    fold_scores: list[float]
    mean: float
    std: float
    test_r2: float | None = None
    test_predictions: np.ndarray | None = None
    y_test: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "fold_scores": list(self.fold_scores),
            "mean": self.mean,
            "std": self.std,
            "test_r2": self.test_r2,
        }


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle then contiguous folds of size n//k (+-1)."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds = []
    start = 0
    for s in sizes:
        folds.append(np.sort(perm[start : start + s]))
        start += s
    return folds


def kfold_cv(
    X,
    y,
    trainer: TrainerSpec,
    k: int = 5,
    seed: int = 0,
    X_test=None,
    y_test=None,
) -> CvReport:
    """k-fold CV plus an optional score on a held-out set never used in CV."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if k < 2:
        raise RegressError("k must be >= 2")
    if k > len(y):
        raise RegressError("k exceeds row count")
    scores = []
    for i, fold in enumerate(fold_indices(len(y), k, seed)):
        mask = np.ones(len(y), dtype=bool)
        mask[fold] = False
        model = trainer.fit(X[mask], y[mask], seed=seed + i)
        scores.append(r2_score(y[fold], model.predict(X[fold])))
    test_r2 = None
    test_pred = None
    if X_test is not None and y_test is not None:
        model = trainer.fit(X, y, seed=seed)
        test_pred = model.predict(np.asarray(X_test, dtype=float))
        test_r2 = r2_score(y_test, test_pred)
    scores_arr = np.array(scores)
    return CvReport(
        fold_scores=scores,
        mean=float(scores_arr.mean()),
        std=float(scores_arr.std()),
        test_r2=test_r2,
        test_predictions=test_pred,
        y_test=None if y_test is None else np.asarray(y_test, dtype=float),
    )


def grid_search(
    X,
    y,
    depth_grid,
    l2_grid,
    fixed_params: dict | None = None,
    k: int = 5,
    seed: int = 0,
):
    """Exhaustive GBDT grid over (depth, l2_leaf) scored by CV mean R-squared.

    Returns (best_params, score_rows); ties break toward smaller depth, then
    smaller l2.
    """
    depth_grid = list(depth_grid)
    l2_grid = list(l2_grid)
    if not depth_grid or not l2_grid:
        raise RegressError("empty grid")
    fixed = dict(fixed_params or {})
    rows = []
    best = None
    for depth in depth_grid:
        for l2 in l2_grid:
            spec = TrainerSpec.make(
                "gbdt", depth=int(depth), l2_leaf=float(l2), **fixed
            )
            rep = kfold_cv(X, y, spec, k=k, seed=seed)
            rows.append({"depth": depth, "l2_leaf": l2, "cv_mean_r2": rep.mean,
                         "cv_std_r2": rep.std})
            key = (-rep.mean, depth, l2)
            if best is None or key < best[0]:
                best = (key, {"depth": int(depth), "l2_leaf": float(l2)})
    return best[1], rows


def select_model(candidates: list[tuple[str, CvReport]], top_n: int = 3) -> str:
    """Pick the best candidate by held-out test R-squared.

    An averaging ensemble of the top candidates is also scored (when test
    predictions are available) and wins only if it strictly beats the best
    single model.  Ties break by name order.
    """
    if not candidates:
        raise RegressError("no candidates")
    scored = sorted(
        candidates, key=lambda c: (-(c[1].test_r2 if c[1].test_r2 is not None else -np.inf), c[0])
    )
    best_name, best_rep = scored[0]
    with_preds = [
        c for c in scored[:top_n]
        if c[1].test_predictions is not None and c[1].y_test is not None
    ]
    if len(with_preds) >= 2 and best_rep.test_r2 is not None:
        ens = np.mean([c[1].test_predictions for c in with_preds], axis=0)
        ens_r2 = r2_score(with_preds[0][1].y_test, ens)
        if ens_r2 > best_rep.test_r2:
            return "ensemble"
    return best_name
