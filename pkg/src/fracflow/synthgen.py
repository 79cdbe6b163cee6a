"""Synthetic field-database generator with planted structure.

The generator is the test oracle for the whole pipeline: numeric features
are a nonnegative low-rank product plus per-cluster offsets and small noise,
the target is a documented smooth function of ten named features, and every
injected corruption (missing cell, categorical typo, outlier shift) is
recorded in a ledger that can be replayed in reverse to recover the clean
table.

Target function, on per-column standardized features z0..z9 (the first ten
feature columns):

    linear       3.0*z0 + 1.5*z7 + 1.0*z8 + 0.5*z9
    interaction  2.0*z1*z2  and  1.5*z3*z4
    saturating   3.0*tanh(z5)
    threshold    2.0*[z6 > 0]

scaled to a positive production-like range, plus Gaussian noise with std =
``noise_std`` times the std of the clean signal.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, asdict

import numpy as np

from .structure import ClusterLabels
from .table_core import ColumnMeta, FieldTable, NUMERIC, CATEGORICAL

TARGET_COLUMN = "cum_oil_3m"

MANUFACTURERS = ("acme", "borline", "carbonex", "sintex")
MESHES = ("12/18", "34/56", "79/90")  # pairwise edit distance 4
PROPPANT_VOCABULARY = tuple(f"{m}-{mesh}" for m in MANUFACTURERS for mesh in MESHES)

_TYPO_ALPHABET = string.ascii_lowercase + string.digits + "-/"


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_wells: int = 5000
    n_fields: int = 23
    n_numeric: int = 50
    latent_rank: int = 5
    n_clusters: int = 3
    missing_fraction: float = 0.2
    typo_rate: float = 0.1
    outlier_rate: float = 0.01
    noise_std: float = 0.3  # fraction of the clean-target std
    feature_noise: float = 0.05  # fraction of each feature column's std
    seed: int = 0

    def validate(self) -> None:
        for name in ("missing_fraction", "typo_rate", "outlier_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthError(f"{name} must be in [0,1], got {v}")
        if self.latent_rank > self.n_numeric:
            raise SynthError("latent_rank exceeds n_numeric")
        if self.n_wells < 1 or self.n_fields < 1 or self.n_clusters < 1:
            raise SynthError("counts must be positive")
        if self.noise_std < 0 or self.feature_noise < 0:
            raise SynthError("noise levels must be nonnegative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SynthConfig":
        return cls(**d)


@dataclass
class GroundTruth:
    latent_rows: np.ndarray  # (N, rank)
    latent_cols: np.ndarray  # (rank, M)
    clean_numeric: np.ndarray  # feature matrix before corruption
    true_target: np.ndarray  # noiseless target
    cluster_assignment: np.ndarray
    # ledger entries: (row, column name, kind, original value)
    ledger: list[tuple] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "cluster_assignment": self.cluster_assignment.tolist(),
            "true_target": self.true_target.tolist(),
            "ledger": [
                [int(r), c, k, v if isinstance(v, str) else float(v)]
                for r, c, k, v in self.ledger
            ],
        }


def _feature_groups(n_numeric: int) -> list[str]:
    # roughly the paper-scale mix: formation-heavy, then well, then design
    groups = []
    for j in range(n_numeric):
        if j % 5 == 3:
            groups.append("well")
        elif j % 5 == 4:
            groups.append("design")
        else:
            groups.append("formation")
    return groups


def target_features(config: SynthConfig) -> list[int]:
    if config.n_numeric < 10:
        raise SynthError("need at least 10 numeric features")
    return list(range(10))


def _clean_target(X: np.ndarray) -> np.ndarray:
    mu = X[:, :10].mean(axis=0)
    sd = X[:, :10].std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    Z = (X[:, :10] - mu) / sd
    return (
        3.0 * Z[:, 0]
        + 1.5 * Z[:, 7]
        + 1.0 * Z[:, 8]
        + 0.5 * Z[:, 9]
        + 2.0 * Z[:, 1] * Z[:, 2]
        + 1.5 * Z[:, 3] * Z[:, 4]
        + 3.0 * np.tanh(Z[:, 5])
        + 2.0 * (Z[:, 6] > 0)
    )


def _apply_typo(token: str, n_edits: int, rng) -> str:
    chars = list(token)
    for _ in range(n_edits):
        op = rng.integers(0, 3)
        pos = int(rng.integers(0, len(chars))) if chars else 0
        c = _TYPO_ALPHABET[int(rng.integers(0, len(_TYPO_ALPHABET)))]
        if op == 0 and len(chars) > 1:  # delete
            del chars[pos]
        elif op == 1:  # insert
            chars.insert(pos, c)
        else:  # substitute
            chars[pos] = c
    return "".join(chars)


def generate_synth_db(config: SynthConfig) -> tuple[FieldTable, GroundTruth]:
    """Deterministically generate the corrupted table and its ground truth."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n, m, k = config.n_wells, config.n_numeric, config.latent_rank

    A = rng.uniform(0.2, 1.0, size=(n, k))
    B = rng.uniform(0.2, 1.0, size=(k, m))
    X = A @ B
    scale = np.exp(rng.uniform(0.0, 5.0, size=m))  # units span orders of magnitude
    X *= scale[None, :]

    clusters = rng.integers(0, config.n_clusters, size=n)
    # offsets on a column subset, large in units of the column spread
    offset_cols = np.arange(0, m, 3)
    col_spread = X.std(axis=0)
    for c in range(config.n_clusters):
        rows = clusters == c
        X[np.ix_(rows, offset_cols)] += 6.0 * c * col_spread[offset_cols]

    if config.feature_noise > 0:
        X += rng.normal(scale=config.feature_noise * X.std(axis=0), size=(n, m))
    X = np.abs(X)  # keep the matrix nonnegative for NNMF

    y_true = _clean_target(X)
    y_scale = 120.0
    y_offset = 1500.0
    y_true = y_offset + y_scale * y_true
    sigma = config.noise_std * (y_true.std() if y_true.std() > 0 else 1.0)
    y = y_true + rng.normal(scale=sigma, size=n)

    # categorical proppant names (object dtype: typos may change length)
    proppant = rng.choice(PROPPANT_VOCABULARY, size=n).astype(object)

    feature_names = [f"feat_{j:02d}" for j in range(m)]
    groups = _feature_groups(m)
    num = np.column_stack([X, y])
    num_mask = np.zeros(num.shape, dtype=bool)
    ledger: list[tuple] = []

    # missing cells: column rates Beta-shaped, scaled to the configured mean
    if config.missing_fraction > 0:
        w = rng.beta(2.0, 5.0, size=m)
        rates = np.clip(config.missing_fraction * w / w.mean(), 0.0, 0.95)
        u = rng.random(size=(n, m))
        miss = u < rates[None, :]
        for i, j in zip(*np.nonzero(miss)):
            ledger.append((int(i), feature_names[j], "missing", float(num[i, j])))
        num_mask[:, :m] = miss

    # outlier rows: 10-sigma shifts on three columns
    n_out = int(round(config.outlier_rate * n))
    if n_out:
        out_rows = rng.choice(n, size=n_out, replace=False)
        sds = X.std(axis=0)
        for i in out_rows:
            cols = rng.choice(m, size=min(3, m), replace=False)
            for j in cols:
                if num_mask[i, j]:
                    continue
                ledger.append((int(i), feature_names[j], "outlier", float(num[i, j])))
                num[i, j] += 10.0 * sds[j]

    # typos in proppant names
    if config.typo_rate > 0:
        flips = rng.random(n) < config.typo_rate
        for i in np.nonzero(flips)[0]:
            original = str(proppant[i])
            n_edits = 1 if rng.random() < 0.7 else 2
            corrupted = _apply_typo(original, n_edits, rng)
            if corrupted != original:
                ledger.append((int(i), "proppant_name", "typo", original))
                proppant[i] = corrupted

    num = np.where(num_mask, 0.0, num)  # masked cells carry no payload

    schema = [
        ColumnMeta(name=nm, kind=NUMERIC, group=g)
        for nm, g in zip(feature_names, groups)
    ]
    schema.append(
        ColumnMeta(name=TARGET_COLUMN, kind=NUMERIC, group="production", is_target=True)
    )
    schema.append(ColumnMeta(name="proppant_name", kind=CATEGORICAL, group="design"))

    field_ids = rng.integers(0, config.n_fields, size=n)
    keys = tuple(
        (f"F{field_ids[i]:02d}", f"W{i:05d}", "L1", 18000 + int(rng.integers(0, 2000)))
        for i in range(n)
    )
    cat = np.empty((n, 1), dtype=object)
    cat[:, 0] = proppant
    table = FieldTable(
        schema=tuple(schema),
        num=num,
        num_mask=num_mask,
        cat=cat,
        cat_mask=np.zeros((n, 1), dtype=bool),
        keys=keys,
    )
    gt = GroundTruth(
        latent_rows=A,
        latent_cols=B,
        clean_numeric=np.column_stack([X, y]),
        true_target=y_true,
        cluster_assignment=clusters,
        ledger=ledger,
    )
    return table, gt


def true_target(gt: GroundTruth, row: int) -> float:
    if not 0 <= row < len(gt.true_target):
        raise SynthError("row index out of range")
    return float(gt.true_target[row])


def replay_ledger(table: FieldTable, gt: GroundTruth) -> FieldTable:
    """Undo every ledger entry (in reverse), recovering the clean table."""
    from dataclasses import replace

    num = table.num.copy()
    num_mask = table.num_mask.copy()
    cat = table.cat.copy()
    for row, col, kind, original in reversed(gt.ledger):
        if kind == "typo":
            cat[row, table.categorical_index(col)] = original
        else:
            j = table.numeric_index(col)
            num[row, j] = original
            num_mask[row, j] = False
    return replace(table, num=num, num_mask=num_mask, cat=cat)


def proppant_dictionary(max_distance: int = 2):
    from .ingest import CategoryDictionary

    return CategoryDictionary(canonical=PROPPANT_VOCABULARY, max_distance=max_distance)


# -- source-document export -------------------------------------------------

_AUX_SEED_OFFSET = 1000003  # auxiliary-doc rng: independent of the table rng


def write_source_docs(table: FieldTable, config: SynthConfig, out_dir) -> dict:
    """Write the seven raw source CSVs that re-assemble into ``table``.

    The generated table is split by column group: design columns (plus the
    proppant name) go to the frac list as two identical stage rows per
    operation, well columns to the operating-practice document, formation
    columns to the layer-intersection document, and the target is unrolled
    into three equal monthly-production rows.  Geomechanics, PVT and well-log
    documents carry independently seeded per-field/per-well values so every
    source kind is exercised.  Returns {kind: path}.
    """
    import csv
    import os

    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(config.seed + _AUX_SEED_OFFSET)
    num_names = table.numeric_names
    by_group = {g: [] for g in ("design", "well", "formation")}
    for c in table.schema:
        if c.kind == NUMERIC and not c.is_target and c.group in by_group:
            by_group[c.group].append(c.name)
    paths = {}

    def cell(i, name):
        vals, mask = table.column(name)
        return "" if mask[i] else repr(float(vals[i]))

    frac_month = 6
    perf_top, perf_bottom = 2500.0, 2512.0
    prop_j = table.categorical_index("proppant_name")

    path = os.path.join(out_dir, "frac_list.csv")
    paths["frac_list"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["field_id", "well_id", "layer_id", "op_date", "stage", "frac_month",
             "perf_top", "perf_bottom", "proppant_name"] + by_group["design"]
        )
        for i, key in enumerate(table.keys):
            base = [key[0], key[1], key[2], key[3]]
            tail = [str(table.cat[i, prop_j])] + [
                cell(i, nm) for nm in by_group["design"]
            ]
            for stage in (1, 2):
                w.writerow(base + [stage, frac_month, perf_top, perf_bottom] + tail)

    path = os.path.join(out_dir, "operating_practice.csv")
    paths["operating_practice"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "well_id"] + by_group["well"])
        for i, key in enumerate(table.keys):
            w.writerow([key[0], key[1]] + [cell(i, nm) for nm in by_group["well"]])

    path = os.path.join(out_dir, "layer_intersection.csv")
    paths["layer_intersection"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "well_id", "layer_id"] + by_group["formation"])
        for i, key in enumerate(table.keys):
            w.writerow(
                [key[0], key[1], key[2]]
                + [cell(i, nm) for nm in by_group["formation"]]
            )

    target_j = table.numeric_index(TARGET_COLUMN)
    path = os.path.join(out_dir, "monthly_production.csv")
    paths["monthly_production"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "well_id", "layer_id", "month",
                    "oil", "fluid", "gas", "watercut", "hours"])
        for i, key in enumerate(table.keys):
            oil = float(table.num[i, target_j]) / 3.0
            for month in range(frac_month + 1, frac_month + 4):
                w.writerow([key[0], key[1], key[2], month,
                            repr(oil), repr(2.0 * oil), repr(0.1 * oil),
                            "0.35", "720"])

    fields = sorted({key[0] for key in table.keys})
    path = os.path.join(out_dir, "geomechanics.csv")
    paths["geomechanics"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "layer_id", "young_modulus", "poisson_ratio"])
        for fid in fields:
            w.writerow([fid, "L1", repr(float(rng.uniform(15.0, 40.0))),
                        repr(float(rng.uniform(0.2, 0.35)))])

    path = os.path.join(out_dir, "pvt.csv")
    paths["pvt"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "layer_id", "oil_viscosity", "bubble_point"])
        for fid in fields:
            w.writerow([fid, "L1", repr(float(rng.uniform(0.5, 20.0))),
                        repr(float(rng.uniform(80.0, 220.0)))])

    path = os.path.join(out_dir, "well_log.csv")
    paths["well_log"] = path
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field_id", "well_id", "top", "bottom", "porosity",
                    "permeability", "clay", "oil_saturation", "pay"])
        for key in table.keys:
            tops = (2500.0, 2504.0, 2508.0)
            pays = (1, 0, 1)
            for top, pay in zip(tops, pays):
                w.writerow([key[0], key[1], repr(top), repr(top + 4.0),
                            repr(float(rng.uniform(0.05, 0.25))),
                            repr(float(rng.uniform(1.0, 200.0))),
                            repr(float(rng.uniform(0.0, 0.4))),
                            repr(float(rng.uniform(0.3, 0.8))),
                            pay])
    return paths


def write_dictionaries(out_path, max_distance: int = 2) -> None:
    """Write the category-dictionary JSON understood by the ingest reader."""
    import json

    doc = {
        "proppant_name": {
            "canonical": list(PROPPANT_VOCABULARY),
            "max_distance": max_distance,
        }
    }
    with open(out_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


# -- oracles ---------------------------------------------------------------


def best_rank_k_error(X, k: int) -> float:
    """Frobenius error of the optimal rank-k approximation (exact SVD)."""
    X = np.asarray(X, dtype=float)
    if not 1 <= k <= min(X.shape):
        raise SynthError("k out of range")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    approx = (U[:, :k] * s[:k]) @ Vt[:k]
    return float(np.sqrt(((X - approx) ** 2).sum()))


def brute_force_dbscan(points, eps: float, min_pts: int) -> ClusterLabels:
    """O(N^3) reference: explicit transitive closure of core reachability."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n > 1000:
        raise SynthError("oracle limited to N <= 1000")
    d2 = (
        (points**2).sum(axis=1)[:, None]
        + (points**2).sum(axis=1)[None, :]
        - 2.0 * points @ points.T
    )
    np.maximum(d2, 0.0, out=d2)
    within = d2 <= eps * eps
    core = within.sum(axis=1) >= min_pts
    reach = within & core[:, None] & core[None, :]
    np.fill_diagonal(reach, True)
    # Floyd-Warshall style closure over core points
    closure = reach.copy()
    for mid in range(n):
        if not core[mid]:
            continue
        closure |= closure[:, mid][:, None] & closure[mid][None, :]
    labels = np.full(n, -1, dtype=int)
    next_id = 0
    for i in range(n):
        if core[i] and labels[i] == -1:
            members = np.nonzero(closure[i] & core)[0]
            labels[members] = next_id
            next_id += 1
    for i in range(n):
        if core[i] or not within[i].any():
            continue
        cores_near = np.nonzero(within[i] & core)[0]
        if len(cores_near):
            labels[i] = labels[cores_near[0]]
    return ClusterLabels(labels=labels, eps=float(eps), min_pts=int(min_pts))
