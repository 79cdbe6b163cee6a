"""Missing-value treatments: row dropping, mean fills, and low-rank completion.

The factorization methods treat the well-by-feature matrix as a partially
observed low-rank matrix: NNMF runs masked multiplicative updates, TSVD
iterates truncated-SVD projection with observed cells held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .table_core import FieldTable, TableError, missing_fraction

METHODS = ("drop_rows", "column_mean", "group_mean", "nnmf", "tsvd")


class ImputeError(ValueError):
    pass


@dataclass(frozen=True)
class CompletedTable:
    table: FieldTable
    imputed: np.ndarray  # bool, True where a numeric cell was filled
    method: str
    iterations: int = 0
    final_objective: float = 0.0
    objective_trace: tuple = ()

    def __post_init__(self):
        if self.table.num_mask.any():
            raise ImputeError("completed table still has missing numeric cells")
        if self.method not in METHODS:
            raise ImputeError(f"unknown method {self.method!r}")


def drop_sparse_rows(table: FieldTable, max_missing_frac: float) -> FieldTable:
    """Drop rows whose missing fraction exceeds the threshold."""
    if not 0.0 <= max_missing_frac <= 1.0:
        raise ImputeError("threshold must be in [0,1]")
    frac = missing_fraction(table, "per_row")
    keep = np.nonzero(frac <= max_missing_frac)[0]
    if len(keep) == 0:
        raise ImputeError("empty result")
    return table.take_rows(keep)


def drop_rows_by_count(table: FieldTable, max_missing: int) -> FieldTable:
    """Absolute-count variant: drop rows with more than ``max_missing`` NaNs."""
    counts = np.hstack([table.num_mask, table.cat_mask]).sum(axis=1)
    keep = np.nonzero(counts <= max_missing)[0]
    if len(keep) == 0:
        raise ImputeError("empty result")
    return table.take_rows(keep)


def _column_means(table: FieldTable) -> np.ndarray:
    means = np.empty(table.num.shape[1])
    for j in range(table.num.shape[1]):
        obs = ~table.num_mask[:, j]
        if not obs.any():
            raise ImputeError(
                f"column {table.numeric_names[j]!r} has no observed values"
            )
        means[j] = table.num[obs, j].mean()
    return means


def _completed(table: FieldTable, filled: np.ndarray, method: str,
               iterations: int = 0, objective: float = 0.0,
               trace: tuple = ()) -> CompletedTable:
    imputed = table.num_mask.copy()
    new = replace(
        table, num=filled, num_mask=np.zeros_like(table.num_mask)
    )
    return CompletedTable(
        table=new,
        imputed=imputed,
        method=method,
        iterations=iterations,
        final_objective=objective,
        objective_trace=trace,
    )


def fill_column_means(table: FieldTable) -> CompletedTable:
    means = _column_means(table)
    filled = np.where(table.num_mask, means[None, :], table.num)
    return _completed(table, filled, "column_mean")


def fill_group_means(table: FieldTable, groups) -> CompletedTable:
    """Fill each missing cell with its group's column mean, falling back to
    the global column mean for groups with no observed value."""
    groups = np.asarray(groups)
    if len(groups) != table.n_rows:
        raise ImputeError("group labels must cover all rows")
    global_means = _column_means(table)
    filled = table.num.copy()
    for g in np.unique(groups):
        rows = np.nonzero(groups == g)[0]
        for j in range(table.num.shape[1]):
            miss = rows[table.num_mask[rows, j]]
            if len(miss) == 0:
                continue
            obs = rows[~table.num_mask[rows, j]]
            fill = table.num[obs, j].mean() if len(obs) else global_means[j]
            filled[miss, j] = fill
    return _completed(table, filled, "group_mean")


def split_signed_column(table: FieldTable, column: str) -> FieldTable:
    """Replace a signed column by |value| plus an is_negative flag column."""
    from .table_core import ColumnMeta, NUMERIC

    j = table.numeric_index(column)
    meta = table.meta(column)
    num = table.num.copy()
    mask = table.num_mask[:, j]
    flags = np.where(~mask & (num[:, j] < 0), 1.0, 0.0)
    num[:, j] = np.abs(num[:, j])
    new_num = np.hstack([num, flags.reshape(-1, 1)])
    new_mask = np.hstack([table.num_mask, mask.reshape(-1, 1)])
    flag_meta = ColumnMeta(
        name=f"is_negative_{column}", kind=NUMERIC, group=meta.group
    )
    # keep numeric block order aligned with schema order of numeric columns
    schema = tuple(table.schema) + (flag_meta,)
    return FieldTable(
        schema=schema,
        num=new_num,
        num_mask=new_mask,
        cat=table.cat,
        cat_mask=table.cat_mask,
        keys=table.keys,
    )


def _column_scales(table: FieldTable) -> np.ndarray:
    """Per-column observed ranges, used as pure (rank-preserving) scalings."""
    scales = np.empty(table.num.shape[1])
    for j in range(table.num.shape[1]):
        obs = ~table.num_mask[:, j]
        if not obs.any():
            raise ImputeError(
                f"column {table.numeric_names[j]!r} has no observed values"
            )
        v = table.num[obs, j]
        scales[j] = v.max() - v.min()
        if scales[j] == 0.0:
            scales[j] = 1.0  # constant column: unit scale
    return scales


def nnmf_objective(X, W, H, obs) -> float:
    return float(((X - W @ H) ** 2 * obs).sum())


def nnmf_impute(
    table: FieldTable,
    rank: int,
    max_iters: int = 500,
    tol: float = 1e-6,
    seed: int = 0,
) -> CompletedTable:
    """Masked non-negative factorization; missing cells get the W@H entries.

    Columns are divided by their observed range internally (features span
    orders of magnitude; a pure scaling preserves rank and nonnegativity)
    and rescaled on output.  Multiplicative updates keep the factors
    nonnegative and the masked Frobenius objective non-increasing.
    """
    n, m = table.num.shape
    if not 1 <= rank <= min(n, m):
        raise ImputeError("rank out of range")
    obs = (~table.num_mask).astype(float)
    if (table.num[~table.num_mask] < 0).any():
        raise ImputeError("negative input to NNMF")
    scales = _column_scales(table)
    X = table.num / scales[None, :]
    X = np.where(table.num_mask, 0.0, X)

    rng = np.random.default_rng(seed)
    W = rng.uniform(0.1, 1.1, size=(n, rank))
    H = rng.uniform(0.1, 1.1, size=(rank, m))
    eps = 1e-12
    obj = nnmf_objective(X, W, H, obs)
    trace = [obj]
    it = 0
    for it in range(1, max_iters + 1):
        WH = W @ H
        W *= ((obs * X) @ H.T) / ((obs * WH) @ H.T + eps)
        WH = W @ H
        H *= (W.T @ (obs * X)) / (W.T @ (obs * WH) + eps)
        new_obj = nnmf_objective(X, W, H, obs)
        trace.append(new_obj)
        if obj > 0 and (obj - new_obj) / obj < tol:
            obj = new_obj
            break
        obj = new_obj
    recon = (W @ H) * scales[None, :]
    filled = np.where(table.num_mask, recon, table.num)
    return _completed(
        table, filled, "nnmf", iterations=it, objective=obj, trace=tuple(trace)
    )


def tsvd_impute(
    table: FieldTable,
    rank: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> CompletedTable:
    """Iterative SVD completion: project to rank k, overwrite missing only.

    Columns are divided by their observed range internally (as in NNMF) so
    large-unit columns do not dominate the truncation; a pure scaling keeps
    the rank of the underlying matrix intact.
    """
    n, m = table.num.shape
    if not 1 <= rank <= min(n, m):
        raise ImputeError("rank out of range")
    scales = _column_scales(table)
    scaled = table.num / scales[None, :]
    means = np.empty(m)
    for j in range(m):
        obs = ~table.num_mask[:, j]
        means[j] = scaled[obs, j].mean()
    X = np.where(table.num_mask, means[None, :], scaled)
    miss = table.num_mask
    it = 0
    obj = 0.0
    for it in range(1, max_iters + 1):
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        approx = (U[:, :rank] * s[:rank]) @ Vt[:rank]
        obj = float(((X - approx) ** 2).sum())
        if not miss.any():
            break
        old = X[miss]
        X = np.where(miss, approx, X)
        new = X[miss]
        denom = float(np.abs(old).sum())
        change = float(np.abs(new - old).sum()) / (denom + 1e-300)
        if change < tol:
            break
    filled = np.where(miss, X * scales[None, :], table.num)
    return _completed(table, filled, "tsvd", iterations=it, objective=obj)


def select_rank(table: FieldTable, explained: float = 0.90, cap: int = 10) -> int:
    """Smallest rank explaining the given share of observed variance, capped.

    Computed on the column-mean-completed, range-scaled matrix.
    """
    scales = _column_scales(table)
    means = _column_means(table)
    X = np.where(table.num_mask, means[None, :], table.num)
    X = X / scales[None, :]
    Xc = X - X.mean(axis=0, keepdims=True)
    s = np.linalg.svd(Xc, compute_uv=False)
    energy = np.cumsum(s**2) / max((s**2).sum(), 1e-300)
    k = int(np.searchsorted(energy, explained) + 1)
    return min(max(k, 1), cap, min(table.num.shape))
