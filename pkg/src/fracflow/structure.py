"""Structure discovery: density clustering, anomaly scoring, 2-D embedding.

All operations expect fully observed, caller-standardized matrices and are
deterministic: DBSCAN uses fixed tie rules (border points join the
lowest-index core neighbor, cluster ids follow first-core-index order), the
forest and the embedding are seeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray  # int, -1 = noise
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if (self.labels >= 0).any() else 0


@dataclass(frozen=True)
class AnomalyScores:
    scores: np.ndarray  # in (0, 1]
    n_trees: int
    subsample: int


def _pairwise_sq(points: np.ndarray) -> np.ndarray:
    sq = (points**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def dbscan(points, eps: float, min_pts: int) -> ClusterLabels:
    """Euclidean DBSCAN with deterministic labeling.

    A point is core iff at least ``min_pts`` points (itself included) lie
    within ``eps``.  Clusters are connected components of core points under
    eps-reachability; border points take the label of the lowest-index core
    point within eps; the rest is noise (-1).
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n == 0:
        raise StructureError("empty input")
    if eps <= 0 or min_pts < 1:
        raise StructureError("eps must be positive and min_pts >= 1")
    within = _pairwise_sq(points) <= eps * eps
    core = within.sum(axis=1) >= min_pts

    # union-find over core points
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    core_idx = np.nonzero(core)[0]
    for i in core_idx:
        for j in core_idx[core_idx > i]:
            if within[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    labels = np.full(n, -1, dtype=int)
    next_id = 0
    comp_id: dict[int, int] = {}
    for i in core_idx:  # ascending: ids in order of first core point index
        root = find(i)
        if root not in comp_id:
            comp_id[root] = next_id
            next_id += 1
        labels[i] = comp_id[root]
    for i in range(n):
        if core[i]:
            continue
        hits = core_idx[within[i, core_idx]]
        if len(hits):
            labels[i] = labels[hits[0]]  # lowest-index core neighbor
    return ClusterLabels(labels=labels, eps=float(eps), min_pts=int(min_pts))


def default_eps(points, min_pts: int, percentile: float = 95.0) -> float:
    """Heuristic eps: the 95th percentile of min_pts-nearest-neighbor distances."""
    points = np.asarray(points, dtype=float)
    d2 = _pairwise_sq(points)
    d = np.sqrt(np.sort(d2, axis=1))
    k = min(min_pts, points.shape[0] - 1)
    kth = d[:, k]  # column 0 is the point itself
    return float(np.percentile(kth, percentile))


def harmonic(n: int) -> float:
    """H(n); exact for n <= 1000, Euler-Mascheroni approximation beyond."""
    if n <= 0:
        return 0.0
    if n <= 1000:
        return float(sum(1.0 / k for k in range(1, n + 1)))
    return math.log(n) + 0.5772156649015329 + 1.0 / (2 * n)


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length c(n) of a binary tree."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


class _IsoNode:
    __slots__ = ("feature", "threshold", "left", "right", "size")

    def __init__(self, size, feature=-1, threshold=0.0, left=None, right=None):
        self.size = size
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


def _grow_iso(X, rows, depth, limit, rng):
    node = _IsoNode(size=len(rows))
    if depth >= limit or len(rows) <= 1:
        return node
    lo = X[rows].min(axis=0)
    hi = X[rows].max(axis=0)
    splittable = np.nonzero(hi > lo)[0]
    if len(splittable) == 0:
        return node
    f = int(rng.choice(splittable))
    t = float(rng.uniform(lo[f], hi[f]))
    left = rows[X[rows, f] < t]
    right = rows[X[rows, f] >= t]
    if len(left) == 0 or len(right) == 0:
        return node
    node.feature = f
    node.threshold = t
    node.left = _grow_iso(X, left, depth + 1, limit, rng)
    node.right = _grow_iso(X, right, depth + 1, limit, rng)
    return node


def _iso_path(node, x, depth=0):
    while node.feature >= 0:
        node = node.left if x[node.feature] < node.threshold else node.right
        depth += 1
    return depth + average_path_length(node.size)


def isolation_forest_scores(
    points, n_trees: int, subsample: int, seed: int = 0
) -> AnomalyScores:
    """Isolation-forest anomaly scores s(x) = 2^(-E[h(x)]/c(subsample))."""
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if n_trees < 1:
        raise StructureError("n_trees must be >= 1")
    if not 2 <= subsample <= n:
        raise StructureError("subsample must be in [2, N]")
    rng = np.random.default_rng(seed)
    limit = math.ceil(math.log2(subsample))
    paths = np.zeros(n)
    for _ in range(n_trees):
        rows = rng.choice(n, size=subsample, replace=False)
        root = _grow_iso(X, rows, 0, limit, rng)
        for i in range(n):
            paths[i] += _iso_path(root, X[i])
    mean_path = paths / n_trees
    scores = np.power(2.0, -mean_path / average_path_length(subsample))
    return AnomalyScores(scores=scores, n_trees=n_trees, subsample=subsample)


def kurtosis(values) -> float:
    """Excess kurtosis m4/m2^2 - 3 with population moments."""
    v = np.asarray(values, dtype=float)
    if len(v) < 4:
        raise StructureError("need at least 4 values")
    c = v - v.mean()
    m2 = (c**2).mean()
    if m2 == 0:
        raise StructureError("degenerate column")
    m4 = (c**4).mean()
    return float(m4 / m2**2 - 3.0)


# -- t-SNE -----------------------------------------------------------------


def _bisect_beta(d2_row: np.ndarray, target_perplexity: float, tol: float = 1e-7):
    """Find the Gaussian precision matching the target perplexity by bisection."""
    log_target = math.log(target_perplexity)
    beta, lo, hi = 1.0, 0.0, math.inf
    for _ in range(200):
        p = np.exp(-d2_row * beta)
        s = p.sum()
        if s <= 0:
            h = 0.0
        else:
            h = math.log(s) + beta * float((d2_row * p).sum()) / s
            p /= s
        diff = h - log_target
        if abs(diff) < tol:
            break
        if diff > 0:
            lo = beta
            beta = beta * 2.0 if hi == math.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = (lo + beta) / 2.0
    return p, beta


def tsne_perplexity_inputs(points, perplexity: float):
    """Symmetrized affinity matrix P and the fitted per-point precisions."""
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    d2 = _pairwise_sq(X)
    P = np.zeros((n, n))
    betas = np.zeros(n)
    for i in range(n):
        row = np.delete(d2[i], i)
        p, betas[i] = _bisect_beta(row, perplexity)
        P[i, np.arange(n) != i] = p
    P = (P + P.T) / (2.0 * n)
    np.maximum(P, 1e-12, out=P)
    return P, betas


def tsne_embed(
    points,
    perplexity: float = 30.0,
    learning_rate: float = 200.0,
    iters: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """Exact (quadratic) t-SNE to 2-D.

    Per-point bandwidths are bisected to the target perplexity; early
    exaggeration 12x for the first 250 iterations; momentum 0.5 switching to
    0.8 at iteration 250.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if n < 3:
        raise StructureError("need at least 3 points")
    if perplexity >= n:
        raise StructureError("perplexity must be below N")
    P, _ = tsne_perplexity_inputs(X, perplexity)
    rng = np.random.default_rng(seed)
    Y = rng.normal(scale=1e-4, size=(n, 2))
    inc = np.zeros_like(Y)
    gains = np.ones_like(Y)
    exaggeration = 12.0
    for it in range(iters):
        Peff = P * exaggeration if it < 250 else P
        d2 = _pairwise_sq(Y)
        inv = 1.0 / (1.0 + d2)
        np.fill_diagonal(inv, 0.0)
        Q = inv / max(inv.sum(), 1e-12)
        np.maximum(Q, 1e-12, out=Q)
        PQ = (Peff - Q) * inv
        grad = 4.0 * ((np.diag(PQ.sum(axis=1)) - PQ) @ Y)
        momentum = 0.5 if it < 250 else 0.8
        gains = np.where(np.sign(grad) != np.sign(inc), gains + 0.2, gains * 0.8)
        np.maximum(gains, 0.01, out=gains)
        inc = momentum * inc - learning_rate * gains * grad
        Y = Y + inc
        Y = Y - Y.mean(axis=0, keepdims=True)
    return Y


def perplexity_of(P_row: np.ndarray) -> float:
    """Shannon perplexity of one conditional distribution row."""
    p = P_row[P_row > 0]
    h = -(p * np.log(p)).sum()
    return float(math.exp(h))
