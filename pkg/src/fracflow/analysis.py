"""Post-model analysis: gain importance, RFE curve, OVAT tornado, bootstrap CI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regress import (
    CvReport,
    ForestModel,
    GbdtModel,
    RegressError,
    TrainerSpec,
    Tree,
    r2_score,
)


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class TornadoEntry:
    feature: str
    baseline: float
    low: float   # prediction with the feature at (1 - delta) * mean
    high: float  # prediction with the feature at (1 + delta) * mean
    delta: float

    @property
    def swing(self) -> float:
        return max(abs(self.low - self.baseline), abs(self.high - self.baseline))


@dataclass(frozen=True)
class BootstrapCi:
    point_estimate: float
    lower: float
    upper: float
    level: float
    samples: tuple[float, ...]


def _model_trees(model) -> list[Tree]:
    if isinstance(model, GbdtModel):
        if not model.trees:
            raise AnalysisError("unfitted model")
        return model.trees[: model.best_iteration] or model.trees[:1]
    if isinstance(model, ForestModel):
        if not model.trees:
            raise AnalysisError("unfitted model")
        return model.trees
    if isinstance(model, Tree):
        return [model]
    raise AnalysisError(f"unsupported model type {type(model).__name__}")


def gain_importance(model, n_features: int) -> list[tuple[int, float]]:
    """Total split gain per feature, normalized to sum 1, descending.

    Ties break by feature index; all-zero when the model never splits.
    """
    totals = np.zeros(n_features)
    for tree in _model_trees(model):
        for i in range(tree.n_nodes):
            f = tree.feature[i]
            if f >= 0:
                totals[f] += tree.gain[i]
    s = totals.sum()
    if s > 0:
        totals = totals / s
    order = np.lexsort((np.arange(n_features), -totals))
    return [(int(f), float(totals[f])) for f in order]


def rfe_curve(
    X_train,
    y_train,
    X_test,
    y_test,
    importance_order,
    counts,
    trainer: TrainerSpec,
    seed: int = 0,
    plateau_tol: float = 0.005,
):
    """Held-out R-squared vs. number of retained top-importance features.

    Selected count = smallest n whose score is within ``plateau_tol`` of the
    curve maximum.
    """
    counts = sorted(set(int(c) for c in counts))
    if not counts:
        raise AnalysisError("empty feature-count grid")
    X_train = np.asarray(X_train, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    order = list(importance_order)
    if len(order) < X_train.shape[1]:
        raise AnalysisError("importance order must cover all features")
    curve = []
    for n in counts:
        keep = sorted(order[:n])
        model = trainer.fit(X_train[:, keep], np.asarray(y_train, dtype=float),
                            seed=seed)
        curve.append((n, r2_score(y_test, model.predict(X_test[:, keep]))))
    best = max(r for _, r in curve)
    selected = next(n for n, r in curve if r >= best - plateau_tol)
    return curve, selected


def ovat_tornado(
    model,
    X,
    feature_names,
    design_features,
    delta: float = 0.5,
) -> list[TornadoEntry]:
    """One-variable-at-a-time sensitivity around the all-means row.

    Each design feature is set to (1 +- delta) * its mean with every other
    feature pinned at its mean; entries are sorted by swing, descending.
    """
    if delta <= 0:
        raise AnalysisError("delta must be positive")
    X = np.asarray(X, dtype=float)
    names = list(feature_names)
    means = X.mean(axis=0)
    baseline = float(model.predict(means.reshape(1, -1))[0])
    entries = []
    for f in design_features:
        if f not in names:
            raise AnalysisError(f"unknown design feature {f!r}")
        j = names.index(f)
        lo_row = means.copy()
        lo_row[j] = (1.0 - delta) * means[j]
        hi_row = means.copy()
        hi_row[j] = (1.0 + delta) * means[j]
        entries.append(
            TornadoEntry(
                feature=f,
                baseline=baseline,
                low=float(model.predict(lo_row.reshape(1, -1))[0]),
                high=float(model.predict(hi_row.reshape(1, -1))[0]),
                delta=delta,
            )
        )
    entries.sort(key=lambda e: -e.swing)
    return entries


def bootstrap_r2_ci(
    X,
    y,
    trainer: TrainerSpec,
    iters: int = 100,
    frac: float = 0.75,
    level: float = 0.95,
    seed: int = 0,
    test_frac: float = 0.25,
) -> BootstrapCi:
    """Percentile bootstrap CI for the held-out R-squared of a trainer.

    Each iteration draws floor(frac * N) rows without replacement, splits
    them train/test, fits, and records the test R-squared.
    """
    if not 0.0 < frac <= 1.0:
        raise AnalysisError("frac must be in (0, 1]")
    if iters < 2:
        raise AnalysisError("need at least 2 iterations")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    m = int(np.floor(frac * n))
    n_test = max(1, int(round(test_frac * m)))
    if m - n_test < 2 or n_test < 2:
        raise AnalysisError("resample too small to split")
    rng = np.random.default_rng(seed)
    samples = []
    for it in range(iters):
        rows = rng.choice(n, size=m, replace=False)
        perm = rng.permutation(m)
        test = rows[perm[:n_test]]
        train = rows[perm[n_test:]]
        model = trainer.fit(X[train], y[train], seed=seed + it)
        samples.append(r2_score(y[test], model.predict(X[test])))
    # point estimate from one full-data split with the same generator
    rows = rng.permutation(n)
    n_pt = max(2, int(round(test_frac * n)))
    model = trainer.fit(X[rows[n_pt:]], y[rows[n_pt:]], seed=seed)
    point = r2_score(y[rows[:n_pt]], model.predict(X[rows[:n_pt]]))
    alpha = (1.0 - level) / 2.0
    lower = float(np.percentile(samples, 100 * alpha))
    upper = float(np.percentile(samples, 100 * (1 - alpha)))
    return BootstrapCi(
        point_estimate=float(point),
        lower=lower,
        upper=upper,
        level=level,
        samples=tuple(samples),
    )
