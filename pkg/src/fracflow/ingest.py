"""Parsing and merging of the heterogeneous source documents.

Seven source kinds feed the merged table: the frac list (per-stage design
rows, the key source), monthly production reports, operating practices,
geomechanics, PVT, layer intersection data and well-log interpretation.
Category tokens are normalized against per-column dictionaries by edit
distance before joining.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .table_core import (
    CATEGORICAL,
    NUMERIC,
    ColumnMeta,
    FieldTable,
    TableError,
)

SOURCE_KINDS = (
    "frac_list",
    "monthly_production",
    "operating_practice",
    "geomechanics",
    "pvt",
    "layer_intersection",
    "well_log",
)

# key columns each auxiliary source joins on
JOIN_KEYS = {
    "frac_list": ("field_id", "well_id", "layer_id", "op_date"),
    "monthly_production": ("field_id", "well_id", "layer_id"),
    "operating_practice": ("field_id", "well_id"),
    "geomechanics": ("field_id", "layer_id"),
    "pvt": ("field_id", "layer_id"),
    "layer_intersection": ("field_id", "well_id", "layer_id"),
    "well_log": ("field_id", "well_id"),
}

# design fields summed (not averaged) when consolidating stages
SUMMED_FIELDS = re.compile(
    r"(fluid_volume|proppant_mass|breaker_\d+_amount|pad_volume"
    r"|fracture_width|fracture_length|fracture_height)"
)


class IngestError(ValueError):
    pass


@dataclass
class SourceDoc:
    kind: str
    header: list[str]
    records: list[dict]

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise IngestError(f"unknown source kind {self.kind!r}")


@dataclass(frozen=True)
class CategoryDictionary:
    canonical: tuple[str, ...]
    max_distance: int

    def __post_init__(self):
        toks = self.canonical
        for i in range(len(toks)):
            for j in range(i + 1, len(toks)):
                if levenshtein(toks[i], toks[j]) <= self.max_distance:
                    raise IngestError(
                        f"ambiguous dictionary: {toks[i]!r} and {toks[j]!r} "
                        f"within distance {self.max_distance}"
                    )


@dataclass(frozen=True)
class LogInterval:
    top: float
    bottom: float
    porosity: float | None = None
    permeability: float | None = None
    clay: float | None = None
    oil_saturation: float | None = None
    pay: bool = False

    def __post_init__(self):
        if not self.bottom > self.top:
            raise IngestError("interval bottom must exceed top")

    @property
    def length(self) -> float:
        return self.bottom - self.top


@dataclass
class MergeLog:
    unmatched: dict = field(default_factory=dict)  # kind -> dropped record count
    normalized: int = 0
    unnormalized: int = 0
    duplicate_keys: int = 0


def levenshtein(a: str, b: str) -> int:
    """Edit distance: single-character insertions, deletions, substitutions."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize_category(token: str, dictionary: CategoryDictionary) -> tuple[str, bool]:
    """Map a raw token to its canonical form by brute-force edit distance.

    Returns (canonical, True) for the unique canonical token within
    max_distance of the lowercased, trimmed input, else (token, False).
    """
    if not dictionary.canonical:
        raise IngestError("empty dictionary")
    folded = token.strip().lower()
    best, best_d, tie = None, None, False
    for cand in dictionary.canonical:
        d = levenshtein(folded, cand)
        if best_d is None or d < best_d:
            best, best_d, tie = cand, d, False
        elif d == best_d:
            tie = True
    if best_d is not None and best_d <= dictionary.max_distance:
        if tie:
            raise IngestError(f"ambiguous dictionary match for {token!r}")
        return best, True
    return token, False


_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_RANGE_RE = re.compile(
    r"^(\d+\.?\d*|\.\d+)\s*-\s*(\d+\.?\d*|\.\d+)$"
)


def parse_cell(text: str) -> float | None:
    """Parse one numeric cell; ranges "A-B" become the midpoint, noise None."""
    s = text.strip()
    if _NUM_RE.match(s):
        return float(s)
    m = _RANGE_RE.match(s)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a < b:
            return (a + b) / 2.0
    return None


def _weighted_mean(pairs):
    # pairs: (value, weight); None values excluded
    vals = [(v, w) for v, w in pairs if v is not None and w > 0]
    if not vals:
        return None
    tot = sum(w for _, w in vals)
    return sum(v * w for v, w in vals) / tot


def _weighted_median(pairs):
    vals = sorted((v, w) for v, w in pairs if v is not None and w > 0)
    if not vals:
        return None
    tot = sum(w for _, w in vals)
    acc = 0.0
    for v, w in vals:
        acc += w
        if acc >= tot / 2.0:
            return v
    return vals[-1][0]


def aggregate_well_logs(
    intervals: list[LogInterval], perf_top: float, perf_bottom: float
) -> dict:
    """Length-weighted aggregation of log intervals per perforation and layer.

    Produces, per property, mean and median at both scopes, plus kh, NTG and
    the stratification factor (count of maximal contiguous non-pay runs).
    Perforation-scoped outputs are None when the window misses every interval.
    """
    if not intervals:
        raise IngestError("no intervals")
    if not perf_bottom > perf_top:
        raise IngestError("bad perforation window")
    intervals = sorted(intervals, key=lambda iv: iv.top)

    def overlap(iv):
        return max(0.0, min(iv.bottom, perf_bottom) - max(iv.top, perf_top))

    out: dict = {}
    props = ("porosity", "permeability", "clay", "oil_saturation")
    for scope, weights in (
        ("perf", [overlap(iv) for iv in intervals]),
        ("layer", [iv.length for iv in intervals]),
    ):
        pairs_by_prop = {
            p: [(getattr(iv, p), w) for iv, w in zip(intervals, weights)]
            for p in props
        }
        for p in props:
            out[f"{p}_mean_{scope}"] = _weighted_mean(pairs_by_prop[p])
            out[f"{p}_median_{scope}"] = _weighted_median(pairs_by_prop[p])
        kh_pairs = [
            (None if iv.permeability is None else iv.permeability * iv.length, w)
            for iv, w in zip(intervals, weights)
        ]
        out[f"kh_median_{scope}"] = _weighted_median(kh_pairs)
        total = sum(weights)
        pay = sum(w for iv, w in zip(intervals, weights) if iv.pay)
        out[f"ntg_{scope}"] = None if total == 0 else pay / total
        # stratification factor: maximal contiguous runs of non-pay intervals
        runs, in_run = 0, False
        for iv, w in zip(intervals, weights):
            if w <= 0:
                in_run = False
                continue
            if not iv.pay:
                if not in_run:
                    runs += 1
                in_run = True
            else:
                in_run = False
        out[f"stratification_{scope}"] = None if total == 0 else runs
    return out


def consolidate_stages(stage_rows: list[dict]) -> dict:
    """Collapse per-stage design rows of one operation into a single record.

    Fluid/proppant/breaker amounts and fracture dimensions are summed, every
    other numeric field is averaged over observed stage values, and
    ``n_stages`` is set to the stage count.  Non-numeric fields keep the first
    observed value.
    """
    if not stage_rows:
        raise IngestError("no stage rows")
    keys = {
        tuple(r.get(k) for k in JOIN_KEYS["frac_list"]) for r in stage_rows
    }
    if len(keys) != 1:
        raise IngestError("inconsistent stage group")
    out: dict = {}
    fields = []
    for r in stage_rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    for k in fields:
        vals = [r[k] for r in stage_rows if r.get(k) is not None]
        if not vals:
            out[k] = None
        elif all(isinstance(v, (int, float)) for v in vals):
            out[k] = sum(vals) if SUMMED_FIELDS.search(k) else sum(vals) / len(vals)
        else:
            out[k] = vals[0]
    out["n_stages"] = len(stage_rows)
    return out


def compute_production_targets(monthly: list[tuple], frac_month: int) -> dict:
    """Cumulative production slices over the 3/6/12 months after the frac.

    ``monthly`` rows are (month_index, oil, fluid, gas, watercut, hours),
    sorted by month.  A window's cumulative values are None unless every one
    of its months is present.  Pre-frac rates are the means over up to three
    months before the frac month, when any exist.
    """
    months = [m[0] for m in monthly]
    if months != sorted(months):
        raise IngestError("monthly records not sorted")
    by_month = {m[0]: m for m in monthly}
    out: dict = {}
    for w in (3, 6, 12):
        window = [by_month.get(frac_month + i) for i in range(1, w + 1)]
        if any(r is None for r in window):
            out[f"cum_oil_{w}m"] = None
            out[f"cum_fluid_{w}m"] = None
            out[f"cum_gas_{w}m"] = None
            out[f"watercut_mean_{w}m"] = None
            out[f"hours_{w}m"] = None
        else:
            out[f"cum_oil_{w}m"] = sum(r[1] for r in window)
            out[f"cum_fluid_{w}m"] = sum(r[2] for r in window)
            out[f"cum_gas_{w}m"] = sum(r[3] for r in window)
            out[f"watercut_mean_{w}m"] = sum(r[4] for r in window) / w
            out[f"hours_{w}m"] = sum(r[5] for r in window)
    pre = [by_month[m] for m in range(frac_month - 3, frac_month) if m in by_month]
    if pre:
        out["oil_rate_pre"] = sum(r[1] for r in pre) / len(pre)
        out["fluid_rate_pre"] = sum(r[2] for r in pre) / len(pre)
        out["watercut_pre"] = sum(r[4] for r in pre) / len(pre)
    else:
        out["oil_rate_pre"] = None
        out["fluid_rate_pre"] = None
        out["watercut_pre"] = None
    return out


def _record_missing_count(rec: dict) -> int:
    return sum(1 for k, v in rec.items() if v is None)


def _dedupe(records: list[dict], key_fields) -> tuple[dict, int]:
    """Keep, per key, the record with fewer missing cells (ties: first seen)."""
    best: dict = {}
    dupes = 0
    for rec in records:
        key = tuple(rec.get(k) for k in key_fields)
        if key in best:
            dupes += 1
            if _record_missing_count(rec) < _record_missing_count(best[key]):
                best[key] = rec
        else:
            best[key] = rec
    return best, dupes


GROUP_BY_KIND = {
    "frac_list": "design",
    "monthly_production": "production",
    "operating_practice": "well",
    "geomechanics": "formation",
    "pvt": "formation",
    "layer_intersection": "formation",
    "well_log": "formation",
}


def merge_sources(
    docs: list[SourceDoc],
    dictionaries: dict[str, CategoryDictionary] | None = None,
    log: MergeLog | None = None,
) -> FieldTable:
    """Merge the source documents into one row per frac-list operation key.

    The frac list drives the row set (stage rows consolidated per key);
    auxiliary sources left-join on their key subsets after category
    normalization.  Unmatched auxiliary records are dropped and counted.
    """
    dictionaries = dictionaries or {}
    log = log if log is not None else MergeLog()
    by_kind: dict[str, list[SourceDoc]] = {}
    for d in docs:
        by_kind.setdefault(d.kind, []).append(d)
    if "frac_list" not in by_kind:
        raise IngestError("missing key source")

    def normalize_record(rec: dict) -> dict:
        out = dict(rec)
        for col, dic in dictionaries.items():
            if col in out and isinstance(out[col], str) and out[col]:
                canon, ok = normalize_category(out[col], dic)
                out[col] = canon
                if ok:
                    log.normalized += 1
                else:
                    log.unnormalized += 1
        return out

    frac_rows = [
        normalize_record(r) for d in by_kind["frac_list"] for r in d.records
    ]
    stage_groups: dict[tuple, list[dict]] = {}
    key_order: list[tuple] = []
    for r in frac_rows:
        key = tuple(r.get(k) for k in JOIN_KEYS["frac_list"])
        if key not in stage_groups:
            stage_groups[key] = []
            key_order.append(key)
        stage_groups[key].append(r)

    aux: dict[str, dict] = {}
    for kind in SOURCE_KINDS:
        if kind in ("frac_list", "well_log", "monthly_production"):
            continue
        records = [
            normalize_record(r) for d in by_kind.get(kind, []) for r in d.records
        ]
        deduped, dupes = _dedupe(records, JOIN_KEYS[kind])
        log.duplicate_keys += dupes
        aux[kind] = deduped

    # well logs: group intervals by well
    logs_by_well: dict[tuple, list[LogInterval]] = {}
    for d in by_kind.get("well_log", []):
        for r in d.records:
            key = tuple(r.get(k) for k in JOIN_KEYS["well_log"])
            logs_by_well.setdefault(key, []).append(
                LogInterval(
                    top=r["top"],
                    bottom=r["bottom"],
                    porosity=r.get("porosity"),
                    permeability=r.get("permeability"),
                    clay=r.get("clay"),
                    oil_saturation=r.get("oil_saturation"),
                    pay=bool(r.get("pay")),
                )
            )

    # monthly production: group by key
    prod_by_key: dict[tuple, list[tuple]] = {}
    for d in by_kind.get("monthly_production", []):
        for r in d.records:
            key = tuple(r.get(k) for k in JOIN_KEYS["monthly_production"])
            prod_by_key.setdefault(key, []).append(
                (
                    r["month"],
                    r.get("oil", 0.0),
                    r.get("fluid", 0.0),
                    r.get("gas", 0.0),
                    r.get("watercut", 0.0),
                    r.get("hours", 0.0),
                )
            )
    for key in prod_by_key:
        prod_by_key[key].sort(key=lambda t: t[0])

    merged_rows: list[dict] = []
    groups: dict[str, str] = {}
    matched: dict[str, set] = {k: set() for k in aux}
    matched_logs: set = set()
    matched_prod: set = set()
    for key in key_order:
        rec = consolidate_stages(stage_groups[key])
        for f in rec:
            groups.setdefault(f, "design")
        for kind, table in aux.items():
            sub = tuple(rec.get(k) for k in JOIN_KEYS[kind])
            if sub in table:
                matched[kind].add(sub)
                for f, v in table[sub].items():
                    if f in JOIN_KEYS[kind]:
                        continue
                    rec.setdefault(f, v)
                    groups.setdefault(f, GROUP_BY_KIND[kind])
        wkey = tuple(rec.get(k) for k in JOIN_KEYS["well_log"])
        if wkey in logs_by_well:
            matched_logs.add(wkey)
            perf_top = rec.get("perf_top")
            perf_bottom = rec.get("perf_bottom")
            if perf_top is not None and perf_bottom is not None:
                feats = aggregate_well_logs(logs_by_well[wkey], perf_top, perf_bottom)
                for f, v in feats.items():
                    rec.setdefault(f, v)
                    groups.setdefault(f, "formation")
        pkey = tuple(rec.get(k) for k in JOIN_KEYS["monthly_production"])
        if pkey in prod_by_key:
            matched_prod.add(pkey)
            frac_month = rec.get("frac_month")
            if frac_month is not None:
                prod = compute_production_targets(prod_by_key[pkey], int(frac_month))
                for f, v in prod.items():
                    rec[f] = v
                    groups.setdefault(f, "production")
        merged_rows.append(rec)

    for kind, table in aux.items():
        log.unmatched[kind] = len(table) - len(matched[kind])
    log.unmatched["well_log"] = len(logs_by_well) - len(matched_logs)
    log.unmatched["monthly_production"] = len(prod_by_key) - len(matched_prod)

    return _rows_to_table(merged_rows, groups, key_order)


def _rows_to_table(rows: list[dict], groups: dict, keys: list[tuple]) -> FieldTable:
    skip = set(JOIN_KEYS["frac_list"])
    fields: list[str] = []
    for r in rows:
        for f in r:
            if f not in skip and f not in fields:
                fields.append(f)
    kinds = {}
    for f in fields:
        vals = [r.get(f) for r in rows if r.get(f) is not None]
        numeric = bool(vals) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
        )
        kinds[f] = NUMERIC if numeric else CATEGORICAL
    schema = []
    for f in fields:
        group = groups.get(f, "design")
        schema.append(
            ColumnMeta(
                name=f,
                kind=kinds[f],
                group=group if group in ("formation", "well", "design", "production") else "design",
                is_target=(f == "cum_oil_3m"),
            )
        )
    num_names = [c.name for c in schema if c.kind == NUMERIC]
    cat_names = [c.name for c in schema if c.kind == CATEGORICAL]
    n = len(rows)
    num = np.zeros((n, len(num_names)))
    num_mask = np.ones((n, len(num_names)), dtype=bool)
    cat = np.empty((n, len(cat_names)), dtype=object)
    cat.fill("")
    cat_mask = np.ones((n, len(cat_names)), dtype=bool)
    for i, r in enumerate(rows):
        for j, f in enumerate(num_names):
            v = r.get(f)
            if v is not None:
                num[i, j] = float(v)
                num_mask[i, j] = False
        for j, f in enumerate(cat_names):
            v = r.get(f)
            if v is not None:
                cat[i, j] = str(v)
                cat_mask[i, j] = False
    norm_keys = tuple(
        (str(k[0]), str(k[1]), str(k[2]), int(k[3]) if k[3] is not None else 0)
        for k in keys
    )
    return FieldTable(
        schema=tuple(schema),
        num=num,
        num_mask=num_mask,
        cat=cat,
        cat_mask=cat_mask,
        keys=norm_keys,
    )


_PREFIX_DELIMS = re.compile(r"[ \-/]")


def manufacturer_prefix(token: str) -> str:
    """Token up to the first space, hyphen or slash, lowercased."""
    return _PREFIX_DELIMS.split(token.strip().lower(), maxsplit=1)[0]


def encode_categories(table: FieldTable, policy: str = "full_one_hot") -> FieldTable:
    """One-hot encode categorical columns.

    ``reduced`` first maps proppant-name columns (names starting with
    "proppant") to the manufacturer prefix, which collapses mesh-size
    variants into one level per manufacturer.  Missing categorical cells
    become an explicit "unknown" level.
    """
    if policy not in ("full_one_hot", "reduced"):
        raise IngestError(f"bad policy {policy!r}")
    if not table.categorical_names:
        return table
    schema = [c for c in table.schema if c.kind == NUMERIC]
    cols = [table.num]
    masks = [table.num_mask]
    for name in table.categorical_names:
        meta = table.meta(name)
        vals, mask = table.column(name)
        tokens = []
        for v, m in zip(vals, mask):
            if m:
                tokens.append("unknown")
            elif policy == "reduced" and name.startswith("proppant"):
                tokens.append(manufacturer_prefix(str(v)))
            else:
                tokens.append(str(v))
        for level in sorted(set(tokens)):
            col = np.array([1.0 if t == level else 0.0 for t in tokens])
            schema.append(
                ColumnMeta(name=f"{name}={level}", kind=NUMERIC, group=meta.group)
            )
            cols.append(col.reshape(-1, 1))
            masks.append(np.zeros((len(tokens), 1), dtype=bool))
    num = np.hstack(cols)
    num_mask = np.hstack(masks)
    cat = np.empty((table.n_rows, 0), dtype=object)
    return FieldTable(
        schema=tuple(schema),
        num=num,
        num_mask=num_mask,
        cat=cat,
        cat_mask=np.zeros(cat.shape, dtype=bool),
        keys=table.keys,
    )


# -- CSV loading of source docs -------------------------------------------

INT_FIELDS = {"month", "frac_month", "stage", "op_date", "pay"}
TEXT_FIELDS = {"field_id", "well_id", "layer_id", "proppant_name", "fluid_type",
               "polymer_type", "crosslinker_type"}


def read_source_csv(path, kind: str) -> SourceDoc:
    """Read one source document; cells go through :func:`parse_cell` except
    id/text fields, so range values and noise strings follow the cleanup rules."""
    records = []
    with open(path, newline="") as f:
        r = csv.DictReader(f)
        header = list(r.fieldnames or [])
        for row in r:
            rec: dict = {}
            for k, v in row.items():
                if v is None or v == "":
                    rec[k] = None
                elif k in TEXT_FIELDS or k.startswith("proppant_name"):
                    rec[k] = v
                elif k in INT_FIELDS:
                    rec[k] = int(float(v))
                else:
                    rec[k] = parse_cell(v)
            records.append(rec)
    return SourceDoc(kind=kind, header=header, records=records)


def read_dictionaries(path) -> dict[str, CategoryDictionary]:
    """Load dictionaries JSON: column -> {canonical: [...], max_distance: k}."""
    import json

    with open(path) as f:
        doc = json.load(f)
    return {
        col: CategoryDictionary(
            canonical=tuple(spec["canonical"]), max_distance=int(spec["max_distance"])
        )
        for col, spec in doc.items()
    }
