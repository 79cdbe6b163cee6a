"""Figure and CSV emission for the analysis outputs.

Every renderer takes plain data plus an output path and writes a PNG via the
Agg backend, so reports work headless; the companion ``write_*_csv`` helpers
emit the same numbers as delimited files next to the figures.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class ReportError(ValueError):
    pass


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# -- CSV emission -----------------------------------------------------------


def write_importance_csv(path, importances, feature_names) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["rank", "feature", "importance"])
        for rank, (j, imp) in enumerate(importances, 1):
            w.writerow([rank, feature_names[j], repr(imp)])


def write_tornado_csv(path, entries) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["feature", "baseline", "low", "high", "swing", "delta"])
        for e in entries:
            w.writerow([e.feature, repr(e.baseline), repr(e.low),
                        repr(e.high), repr(e.swing), repr(e.delta)])


def write_rfe_csv(path, curve, selected: int) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n_features", "r2", "selected"])
        for n, r2 in curve:
            w.writerow([n, repr(r2), int(n == selected)])


def write_grid_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["depth", "l2_leaf", "cv_mean_r2", "cv_std_r2"])
        for r in rows:
            w.writerow([r["depth"], repr(float(r["l2_leaf"])),
                        repr(r["cv_mean_r2"]), repr(r["cv_std_r2"])])


def write_labels_csv(path, keys, labels, scores=None) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = ["field_id", "well_id", "layer_id", "op_date", "cluster"]
        if scores is not None:
            header.append("anomaly_score")
        w.writerow(header)
        for i, key in enumerate(keys):
            row = [key[0], key[1], key[2], key[3], int(labels[i])]
            if scores is not None:
                row.append(repr(float(scores[i])))
            w.writerow(row)


def write_embedding_csv(path, Y, labels=None) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "cluster"])
        for i in range(len(Y)):
            lab = -1 if labels is None else int(labels[i])
            w.writerow([repr(float(Y[i, 0])), repr(float(Y[i, 1])), lab])


# -- figures ----------------------------------------------------------------


def plot_importance(importances, feature_names, path, top_n: int = 20) -> None:
    """Horizontal bar chart of the top gain importances."""
    top = importances[:top_n]
    names = [feature_names[j] for j, _ in top][::-1]
    vals = [imp for _, imp in top][::-1]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.3 * len(top))))
    ax.barh(range(len(vals)), vals, color="#3b6ea5")
    ax.set_yticks(range(len(vals)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xlabel("normalized gain importance")
    _finish(fig, path)


def plot_tornado(entries, path, top_n: int = 15) -> None:
    """Tornado chart: low/high prediction swings around the baseline."""
    top = entries[:top_n][::-1]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.35 * len(top))))
    for i, e in enumerate(top):
        lo, hi = sorted((e.low, e.high))
        ax.barh(i, hi - lo, left=lo, color="#a5633b")
    if top:
        ax.axvline(top[0].baseline, color="k", lw=1, ls="--")
    ax.set_yticks(range(len(top)))
    ax.set_yticklabels([e.feature for e in top], fontsize=7)
    ax.set_xlabel("prediction")
    _finish(fig, path)


def plot_rfe(curve, selected, path) -> None:
    ns = [n for n, _ in curve]
    rs = [r for _, r in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, rs, "o-", color="#3b6ea5")
    ax.axvline(selected, color="#a5633b", ls="--", label=f"selected: {selected}")
    ax.set_xlabel("retained features")
    ax.set_ylabel("held-out R2")
    ax.legend()
    _finish(fig, path)


def plot_bootstrap(ci, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ci.samples, bins=20, color="#3b6ea5", alpha=0.8)
    ax.axvline(ci.lower, color="#a5633b", ls="--")
    ax.axvline(ci.upper, color="#a5633b", ls="--")
    ax.axvline(ci.point_estimate, color="k", lw=1.5)
    ax.set_xlabel("held-out R2")
    ax.set_ylabel("count")
    ax.set_title(f"{int(ci.level * 100)}% CI [{ci.lower:.3f}, {ci.upper:.3f}]")
    _finish(fig, path)


def plot_embedding(Y, labels, path) -> None:
    Y = np.asarray(Y, dtype=float)
    labels = np.asarray(labels)
    fig, ax = plt.subplots(figsize=(6, 5))
    for lab in np.unique(labels):
        rows = labels == lab
        ax.scatter(Y[rows, 0], Y[rows, 1], s=8,
                   label="noise" if lab == -1 else f"cluster {lab}")
    ax.legend(fontsize=7)
    ax.set_xticks([])
    ax.set_yticks([])
    _finish(fig, path)


def plot_validation_curve(val_curve, best_iteration, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(val_curve) + 1), val_curve, color="#3b6ea5")
    ax.axvline(best_iteration, color="#a5633b", ls="--",
               label=f"best iteration: {best_iteration}")
    ax.set_xlabel("boosting round")
    ax.set_ylabel("validation R2")
    ax.legend()
    _finish(fig, path)
