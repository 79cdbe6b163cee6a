"""Column-typed tables with explicit missingness masks.

The whole pipeline runs on :class:`FieldTable`: numeric cells live in a float
matrix paired with a boolean mask (True = missing), categorical cells in an
object matrix with its own mask.  A masked cell's stored value is never read;
all statistics are computed over observed cells only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

GROUPS = ("formation", "well", "design", "production", "key")

KEY_FIELDS = ("field_id", "well_id", "layer_id", "op_date")

SCHEMA_VERSION = 1


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str  # numeric | categorical
    group: str  # formation | well | design | production | key
    unit: str = ""
    is_target: bool = False

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise TableError(f"bad column kind {self.kind!r}")
        if self.group not in GROUPS:
            raise TableError(f"bad column group {self.group!r}")


@dataclass(frozen=True)
class FieldTable:
    """Immutable table: numeric block + categorical block + row keys.

    ``num`` is N x Mn float64, ``num_mask`` True where the cell is missing.
    ``cat`` is N x Mc object (str), ``cat_mask`` likewise.  Row keys are
    (field_id, well_id, layer_id, op_date) tuples with op_date stored as
    days since epoch.
    """

    schema: tuple[ColumnMeta, ...]
    num: np.ndarray
    num_mask: np.ndarray
    cat: np.ndarray
    cat_mask: np.ndarray
    keys: tuple[tuple, ...] = field(default=())

    def __post_init__(self):
        if self.num.shape != self.num_mask.shape:
            raise TableError("numeric mask shape mismatch")
        if self.cat.shape != self.cat_mask.shape:
            raise TableError("categorical mask shape mismatch")
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise TableError("duplicate column names")
        n_num = sum(1 for c in self.schema if c.kind == NUMERIC)
        n_cat = len(self.schema) - n_num
        if self.num.shape[1] != n_num or self.cat.shape[1] != n_cat:
            raise TableError("schema does not match data width")
        if self.keys:
            if len(self.keys) != self.n_rows:
                raise TableError("row key count mismatch")
            if len(set(self.keys)) != len(self.keys):
                raise TableError("row keys not unique")

    # -- shape / lookup ----------------------------------------------------

    @property
    def n_rows(self) -> int:
        return self.num.shape[0]

    @property
    def numeric_names(self) -> list[str]:
        return [c.name for c in self.schema if c.kind == NUMERIC]

    @property
    def categorical_names(self) -> list[str]:
        return [c.name for c in self.schema if c.kind == CATEGORICAL]

    @property
    def target_name(self) -> str:
        targets = [c.name for c in self.schema if c.is_target]
        if len(targets) != 1:
            raise TableError(f"expected exactly one target column, got {targets}")
        return targets[0]

    def meta(self, name: str) -> ColumnMeta:
        for c in self.schema:
            if c.name == name:
                return c
        raise TableError(f"no such column {name!r}")

    def numeric_index(self, name: str) -> int:
        try:
            return self.numeric_names.index(name)
        except ValueError:
            raise TableError(f"no such numeric column {name!r}") from None

    def categorical_index(self, name: str) -> int:
        try:
            return self.categorical_names.index(name)
        except ValueError:
            raise TableError(f"no such categorical column {name!r}") from None

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Return (values, missing-mask) for one column."""
        meta = self.meta(name)
        if meta.kind == NUMERIC:
            j = self.numeric_index(name)
            return self.num[:, j], self.num_mask[:, j]
        j = self.categorical_index(name)
        return self.cat[:, j], self.cat_mask[:, j]

    def take_rows(self, idx) -> "FieldTable":
        idx = np.asarray(idx)
        keys = tuple(self.keys[i] for i in idx) if self.keys else ()
        return replace(
            self,
            num=self.num[idx].copy(),
            num_mask=self.num_mask[idx].copy(),
            cat=self.cat[idx].copy(),
            cat_mask=self.cat_mask[idx].copy(),
            keys=keys,
        )

    def observed(self, name: str) -> np.ndarray:
        vals, mask = self.column(name)
        return vals[~mask]


def make_numeric_table(schema, num, num_mask=None, keys=()) -> FieldTable:
    """Convenience constructor for tables with no categorical columns."""
    num = np.asarray(num, dtype=float)
    if num_mask is None:
        num_mask = np.zeros(num.shape, dtype=bool)
    cat = np.empty((num.shape[0], 0), dtype=object)
    return FieldTable(
        schema=tuple(schema),
        num=num,
        num_mask=np.asarray(num_mask, dtype=bool),
        cat=cat,
        cat_mask=np.zeros(cat.shape, dtype=bool),
        keys=tuple(keys),
    )


@dataclass(frozen=True)
class SplitPair:
    train: FieldTable
    test: FieldTable
    bin_edges: tuple[float, ...]


# -- operations ------------------------------------------------------------


def missing_fraction(table: FieldTable, axis: str) -> np.ndarray:
    """Fraction of missing cells per row or per column (numeric + categorical)."""
    full = np.hstack([table.num_mask, table.cat_mask])
    if full.size == 0:
        raise TableError("empty input")
    if axis == "per_row":
        return full.mean(axis=1)
    if axis == "per_column":
        return full.mean(axis=0)
    raise TableError(f"bad axis {axis!r}")


def standardize(table: FieldTable) -> tuple[FieldTable, np.ndarray, np.ndarray]:
    """Center/scale numeric columns by observed-cell mean and population std.

    Zero-variance columns map to 0 (their std is returned as 0, so the
    inverse x*std + mean still reproduces the original constant).
    """
    if not table.numeric_names:
        raise TableError("no numeric columns")
    num = table.num.copy()
    means = np.zeros(num.shape[1])
    stds = np.zeros(num.shape[1])
    for j in range(num.shape[1]):
        obs = ~table.num_mask[:, j]
        if not obs.any():
            continue
        v = num[obs, j]
        means[j] = v.mean()
        stds[j] = v.std()  # population (1/N)
        if stds[j] == 0.0:
            num[obs, j] = 0.0
        else:
            num[obs, j] = (v - means[j]) / stds[j]
    return replace(table, num=num), means, stds


def unstandardize(table: FieldTable, means, stds) -> FieldTable:
    num = table.num.copy()
    for j in range(num.shape[1]):
        obs = ~table.num_mask[:, j]
        num[obs, j] = num[obs, j] * stds[j] + means[j]
    return replace(table, num=num)


def stratified_split(
    table: FieldTable,
    target: str,
    test_frac: float,
    n_bins: int,
    seed: int,
) -> SplitPair:
    """Seeded split with similar target distributions in train and test.

    Rows are ranked by target (ties broken by row index) and cut into
    ``n_bins`` contiguous quantile bins; within each bin round(test_frac *
    bin size) rows go to test.
    """
    if not 0.0 < test_frac < 1.0:
        raise TableError("test_frac must be in (0,1)")
    n = table.n_rows
    if n_bins > n:
        raise TableError("n_bins exceeds row count")
    y, mask = table.column(target)
    if mask.any():
        raise TableError("target must be fully observed for splitting")
    order = np.lexsort((np.arange(n), y))
    bounds = [round(i * n / n_bins) for i in range(n_bins + 1)]
    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    edges = []
    for b in range(n_bins):
        bin_rows = order[bounds[b] : bounds[b + 1]]
        if b > 0 and len(bin_rows):
            lo = y[order[bounds[b] - 1]]
            hi = y[bin_rows[0]]
            edges.append((lo + hi) / 2.0)  # inclusive midpoint convention
        k = round(test_frac * len(bin_rows))
        chosen = rng.choice(len(bin_rows), size=k, replace=False)
        test_idx.extend(bin_rows[chosen])
    test_set = set(test_idx)
    train_idx = [i for i in range(n) if i not in test_set]
    test_idx = sorted(test_idx)
    return SplitPair(
        train=table.take_rows(train_idx),
        test=table.take_rows(test_idx),
        bin_edges=tuple(edges),
    )


# -- CSV / JSON serialization ---------------------------------------------


def schema_to_json(schema) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "columns": [
            {
                "name": c.name,
                "kind": c.kind,
                "group": c.group,
                "unit": c.unit,
                "is_target": c.is_target,
            }
            for c in schema
        ],
    }


def schema_from_json(doc) -> tuple[ColumnMeta, ...]:
    return tuple(
        ColumnMeta(
            name=c["name"],
            kind=c["kind"],
            group=c["group"],
            unit=c.get("unit", ""),
            is_target=c.get("is_target", False),
        )
        for c in doc["columns"]
    )


def _fmt_num(x: float) -> str:
    return repr(float(x))


def write_table(table: FieldTable, csv_path, schema_path) -> None:
    """Write table CSV (keys as four leading columns, missing as empty string)
    plus the sidecar schema JSON."""
    names = [c.name for c in table.schema]
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(list(KEY_FIELDS) + names)
        keys = table.keys or tuple(("", "", "", "") for _ in range(table.n_rows))
        num_names = table.numeric_names
        cat_names = table.categorical_names
        for i in range(table.n_rows):
            row = [str(k) for k in keys[i]]
            for c in table.schema:
                if c.kind == NUMERIC:
                    j = num_names.index(c.name)
                    row.append("" if table.num_mask[i, j] else _fmt_num(table.num[i, j]))
                else:
                    j = cat_names.index(c.name)
                    row.append("" if table.cat_mask[i, j] else str(table.cat[i, j]))
            w.writerow(row)
    with open(schema_path, "w") as f:
        json.dump(schema_to_json(table.schema), f, indent=2, sort_keys=True)
        f.write("\n")


def read_table(csv_path, schema_path) -> FieldTable:
    with open(schema_path) as f:
        schema = schema_from_json(json.load(f))
    num_names = [c.name for c in schema if c.kind == NUMERIC]
    cat_names = [c.name for c in schema if c.kind == CATEGORICAL]
    with open(csv_path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        expected = list(KEY_FIELDS) + [c.name for c in schema]
        if header != expected:
            raise TableError("CSV header does not match schema")
        keys = []
        num_rows, cat_rows = [], []
        num_mask_rows, cat_mask_rows = [], []
        for row in r:
            f_id, w_id, l_id, d = row[:4]
            keys.append((f_id, w_id, l_id, int(d) if d else 0))
            nrow, nmask, crow, cmask = [], [], [], []
            for c, cell in zip(schema, row[4:]):
                if c.kind == NUMERIC:
                    if cell == "":
                        nrow.append(0.0)
                        nmask.append(True)
                    else:
                        nrow.append(float(cell))
                        nmask.append(False)
                else:
                    crow.append(cell)
                    cmask.append(cell == "")
            num_rows.append(nrow)
            num_mask_rows.append(nmask)
            cat_rows.append(crow)
            cat_mask_rows.append(cmask)
    n = len(keys)
    num = np.array(num_rows, dtype=float).reshape(n, len(num_names))
    num_mask = np.array(num_mask_rows, dtype=bool).reshape(n, len(num_names))
    cat = np.empty((n, len(cat_names)), dtype=object)
    for i, row in enumerate(cat_rows):
        cat[i, :] = row
    cat_mask = np.array(cat_mask_rows, dtype=bool).reshape(n, len(cat_names))
    return FieldTable(
        schema=schema,
        num=num,
        num_mask=num_mask,
        cat=cat,
        cat_mask=cat_mask,
        keys=tuple(keys),
    )
