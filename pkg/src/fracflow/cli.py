"""Pipeline orchestrator.

Subcommands: synth | ingest | impute | cluster | train | analyze | report.
Each stage reads table directories (table.csv + schema.json), writes its
artifacts plus a ``manifest.json`` recording the config snapshot, seeds,
input/artifact digests and stage timings, and is byte-deterministic given
the same inputs and root seed.

Seed discipline: every stage derives its working seed from the root ``--seed``
as ``root_seed * 8 + offset`` with a fixed per-stage offset, so stages are
decorrelated but individually reproducible.

Exit codes: 0 success, 2 usage/validation error, 1 internal error.  Logging
verbosity comes from the ``FRACFLOW_LOG`` env var (error|info|debug).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np

from . import analysis, impute, ingest, regress, report, structure, synthgen
from . import table_core

log = logging.getLogger("fracflow")

MANIFEST_SCHEMA_VERSION = 1

STAGE_SEED_OFFSETS = {
    "synth": 0,
    "ingest": 1,
    "impute": 2,
    "cluster": 3,
    "train": 4,
    "analyze": 5,
    "report": 6,
}

USAGE_ERRORS = (
    table_core.TableError,
    ingest.IngestError,
    impute.ImputeError,
    structure.StructureError,
    regress.RegressError,
    analysis.AnalysisError,
    synthgen.SynthError,
    report.ReportError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def stage_seed(root_seed: int, stage: str) -> int:
    return root_seed * 8 + STAGE_SEED_OFFSETS[stage]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_map(paths) -> dict:
    return {os.path.basename(p): _sha256(p) for p in sorted(paths)}


def write_manifest(out_dir, command, config, seeds, inputs, artifacts, timings):
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seeds": seeds,
        "input_digests": _digest_map(inputs),
        "artifact_digests": _digest_map(artifacts),
        "artifacts": sorted(os.path.basename(p) for p in artifacts),
        "timings_s": timings,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _read_table_dir(path) -> table_core.FieldTable:
    return table_core.read_table(
        os.path.join(path, "table.csv"), os.path.join(path, "schema.json")
    )


def _write_table_dir(table, out_dir) -> list:
    csv_path = os.path.join(out_dir, "table.csv")
    schema_path = os.path.join(out_dir, "schema.json")
    table_core.write_table(table, csv_path, schema_path)
    return [csv_path, schema_path]


def _feature_columns(table) -> list:
    """Model features: numeric, non-target, outside the production group."""
    return [
        c.name
        for c in table.schema
        if c.kind == table_core.NUMERIC
        and not c.is_target
        and c.group != "production"
    ]


def _encode(table):
    """One-hot encode once on the full table so row subsets stay aligned."""
    encoded = ingest.encode_categories(table, policy="reduced")
    return encoded, _feature_columns(encoded)


def _matrix(encoded, names):
    cols = [encoded.numeric_index(n) for n in names]
    X = encoded.num[:, cols]
    y, y_mask = encoded.column(encoded.target_name)
    if encoded.num_mask[:, cols].any():
        raise impute.ImputeError("features contain missing cells; run impute first")
    return X, y, y_mask


# -- synth -------------------------------------------------------------------


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    cfg_doc = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg_doc["seed"] = stage_seed(args.seed, "synth")
    config = synthgen.SynthConfig.from_json(cfg_doc)
    config.validate()
    os.makedirs(args.out, exist_ok=True)
    table, gt = synthgen.generate_synth_db(config)
    artifacts = _write_table_dir(table, args.out)
    gt_path = os.path.join(args.out, "ground_truth.json")
    with open(gt_path, "w") as f:
        json.dump(gt.to_json(), f)
        f.write("\n")
    artifacts.append(gt_path)
    src_dir = os.path.join(args.out, "sources")
    artifacts.extend(synthgen.write_source_docs(table, config, src_dir).values())
    dict_path = os.path.join(args.out, "dictionaries.json")
    synthgen.write_dictionaries(dict_path)
    artifacts.append(dict_path)
    write_manifest(
        args.out, "synth", config.to_json(), {"stage": config.seed},
        [args.config] if args.config else [], artifacts,
        {"synth": round(time.perf_counter() - t0, 3)},
    )
    log.info("synth: %d rows, %d ledger entries", table.n_rows, len(gt.ledger))
    return 0


# -- ingest ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    t0 = time.perf_counter()
    frac_path = os.path.join(args.sources, "frac_list.csv")
    if not os.path.exists(frac_path):
        raise ingest.IngestError(f"missing key source {frac_path}")
    docs = []
    inputs = []
    for kind in ingest.SOURCE_KINDS:
        path = os.path.join(args.sources, f"{kind}.csv")
        if os.path.exists(path):
            docs.append(ingest.read_source_csv(path, kind))
            inputs.append(path)
    dictionaries = {}
    if args.dicts:
        dictionaries = ingest.read_dictionaries(args.dicts)
        inputs.append(args.dicts)
    merge_log = ingest.MergeLog()
    table = ingest.merge_sources(docs, dictionaries, merge_log)
    os.makedirs(args.out, exist_ok=True)
    artifacts = _write_table_dir(table, args.out)
    log_path = os.path.join(args.out, "merge_log.json")
    with open(log_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "unmatched": merge_log.unmatched,
                "normalized": merge_log.normalized,
                "unnormalized": merge_log.unnormalized,
                "duplicate_keys": merge_log.duplicate_keys,
                "n_rows": table.n_rows,
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    artifacts.append(log_path)
    write_manifest(
        args.out, "ingest", {"sources": args.sources, "dicts": args.dicts},
        {}, inputs, artifacts,
        {"ingest": round(time.perf_counter() - t0, 3)},
    )
    log.info("ingest: %d rows, %d tokens normalized", table.n_rows,
             merge_log.normalized)
    return 0


# -- impute ------------------------------------------------------------------

IMPUTE_METHODS = ("drop", "mean", "pad_mean", "cluster_mean", "nnmf", "tsvd")


def _read_labels_csv(path) -> np.ndarray:
    with open(path, newline="") as f:
        r = csv.DictReader(f)
        return np.array([int(row["cluster"]) for row in r])


def cmd_impute(args) -> int:
    t0 = time.perf_counter()
    if args.method not in IMPUTE_METHODS:
        raise impute.ImputeError(f"unknown method {args.method!r}")
    table = _read_table_dir(args.table)
    # rows without an observed target cannot serve any downstream stage
    _, y_mask = table.column(table.target_name)
    if y_mask.any():
        table = table.take_rows(np.nonzero(~y_mask)[0])
    seed = stage_seed(args.seed if args.seed is not None else 0, "impute")

    if args.method == "drop":
        table = impute.drop_sparse_rows(table, args.threshold)
        completed = impute.fill_column_means(table)
    elif args.method == "mean":
        completed = impute.fill_column_means(table)
    elif args.method == "pad_mean":
        groups = [k[0] for k in table.keys]  # field id
        completed = impute.fill_group_means(table, groups)
    elif args.method == "cluster_mean":
        if not args.labels:
            raise impute.ImputeError("cluster_mean requires --labels")
        labels = _read_labels_csv(args.labels)
        completed = impute.fill_group_means(table, labels)
    else:
        rank = args.rank or impute.select_rank(table)
        if args.method == "nnmf":
            completed = impute.nnmf_impute(table, rank, seed=seed)
        else:
            completed = impute.tsvd_impute(table, rank)

    os.makedirs(args.out, exist_ok=True)
    artifacts = _write_table_dir(completed.table, args.out)
    log_path = os.path.join(args.out, "impute_log.json")
    with open(log_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "method": completed.method,
                "iterations": completed.iterations,
                "final_objective": completed.final_objective,
                "objective_trace": list(completed.objective_trace),
                "n_imputed": int(completed.imputed.sum()),
                "n_rows": completed.table.n_rows,
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    artifacts.append(log_path)
    write_manifest(
        args.out, "impute",
        {"method": args.method, "rank": args.rank, "threshold": args.threshold},
        {"stage": seed},
        [os.path.join(args.table, "table.csv")], artifacts,
        {"impute": round(time.perf_counter() - t0, 3)},
    )
    log.info("impute[%s]: filled %d cells", args.method,
             int(completed.imputed.sum()))
    return 0


# -- cluster -----------------------------------------------------------------


def _column_kurtosis(Z, names) -> dict:
    """Excess kurtosis per column, skipping (near-)constant columns."""
    out = {}
    for j, name in enumerate(names):
        try:
            out[name] = structure.kurtosis(Z[:, j])
        except structure.StructureError:
            continue
    return out


def cmd_cluster(args) -> int:
    t0 = time.perf_counter()
    table = _read_table_dir(args.table)
    encoded, names = _encode(table)
    X, _, _ = _matrix(encoded, names)
    std, _, stds = table_core.standardize(
        table_core.make_numeric_table(
            [encoded.meta(n) for n in names], X, keys=table.keys
        )
    )
    Z = std.num
    seed = stage_seed(args.seed if args.seed is not None else 0, "cluster")
    eps = args.eps if args.eps else structure.default_eps(Z, args.min_pts)
    labels = structure.dbscan(Z, eps, args.min_pts)
    scores = structure.isolation_forest_scores(
        Z, n_trees=100, subsample=min(256, Z.shape[0]), seed=seed
    )
    os.makedirs(args.out, exist_ok=True)
    labels_path = os.path.join(args.out, "labels.csv")
    report.write_labels_csv(labels_path, table.keys, labels.labels, scores.scores)
    artifacts = [labels_path]
    # exact t-SNE is quadratic; embed a seeded subsample when N is large
    rng = np.random.default_rng(seed)
    n = Z.shape[0]
    rows = (
        np.sort(rng.choice(n, size=args.embed_max, replace=False))
        if n > args.embed_max
        else np.arange(n)
    )
    if len(rows) >= 3:
        perp = min(30.0, (len(rows) - 1) / 3.0)
        Y = structure.tsne_embed(Z[rows], perplexity=perp, seed=seed)
        emb_path = os.path.join(args.out, "embedding.csv")
        report.write_embedding_csv(emb_path, Y, labels.labels[rows])
        artifacts.append(emb_path)
    summary_path = os.path.join(args.out, "cluster_summary.json")
    with open(summary_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "eps": labels.eps,
                "min_pts": labels.min_pts,
                "n_clusters": labels.n_clusters,
                "n_noise": int((labels.labels == -1).sum()),
                "kurtosis": _column_kurtosis(Z, names),
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    artifacts.append(summary_path)
    write_manifest(
        args.out, "cluster",
        {"eps": labels.eps, "min_pts": args.min_pts, "embed_max": args.embed_max},
        {"stage": seed},
        [os.path.join(args.table, "table.csv")], artifacts,
        {"cluster": round(time.perf_counter() - t0, 3)},
    )
    log.info("cluster: %d clusters, %d noise", labels.n_clusters,
             int((labels.labels == -1).sum()))
    return 0


# -- train -------------------------------------------------------------------

DEFAULT_GRID = {
    "depth_grid": [4, 6],
    "l2_grid": [0.5],
    "learning_rate": 0.1,
    "n_rounds": 150,
    "od_wait": 5,
    "min_leaf": 20,
    "k_folds": 3,
}


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    table = _read_table_dir(args.table)
    grid_doc = dict(DEFAULT_GRID)
    inputs = [os.path.join(args.table, "table.csv")]
    if args.grid:
        grid_doc.update(_load_json(args.grid))
        inputs.append(args.grid)
    encoded, names = _encode(table)
    _, _, y_mask = _matrix(encoded, names)
    if y_mask.any():
        raise regress.RegressError("target column has missing values")
    seed = stage_seed(args.seed if args.seed is not None else 0, "train")

    split = table_core.stratified_split(
        encoded, encoded.target_name, test_frac=0.2, n_bins=10, seed=seed
    )
    Xtr, ytr, _ = _matrix(split.train, names)
    Xte, yte, _ = _matrix(split.test, names)

    fixed = {
        "learning_rate": grid_doc["learning_rate"],
        "n_rounds": grid_doc["n_rounds"],
        "od_wait": grid_doc["od_wait"],
        "min_leaf": grid_doc["min_leaf"],
    }
    best, rows = regress.grid_search(
        Xtr, ytr, grid_doc["depth_grid"], grid_doc["l2_grid"],
        fixed_params=fixed, k=grid_doc["k_folds"], seed=seed,
    )
    spec = regress.TrainerSpec.make("gbdt", **best, **fixed)
    model = spec.fit(Xtr, ytr, seed=seed)
    test_r2 = regress.r2_score(yte, model.predict(Xte))
    result = {"best_params": best, "test_r2": test_r2}
    if args.log_target:
        if (ytr <= -1).any():
            raise regress.RegressError("log-target requires targets > -1")
        log_model = spec.fit(Xtr, np.log1p(ytr), seed=seed)
        result["test_r2_log_target"] = regress.r2_score(
            yte, np.expm1(log_model.predict(Xte))
        )

    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    model.save(model_path)
    grid_path = os.path.join(args.out, "grid.csv")
    report.write_grid_csv(grid_path, rows)
    meta_path = os.path.join(args.out, "train_meta.json")
    with open(meta_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "feature_names": names,
                "target": table.target_name,
                "seed": seed,
                **result,
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    artifacts = [model_path, grid_path, meta_path]
    write_manifest(
        args.out, "train", grid_doc, {"stage": seed}, inputs, artifacts,
        {"train": round(time.perf_counter() - t0, 3)},
    )
    log.info("train: best %s, test R2 %.4f", best, test_r2)
    return 0


# -- analyze -----------------------------------------------------------------


def cmd_analyze(args) -> int:
    t0 = time.perf_counter()
    table = _read_table_dir(args.table)
    model = regress.GbdtModel.load(args.model)
    meta = _load_json(os.path.join(os.path.dirname(args.model), "train_meta.json"))
    names = meta["feature_names"]
    encoded, table_names = _encode(table)
    X, y, y_mask = _matrix(encoded, table_names)
    if y_mask.any():
        raise regress.RegressError("target column has missing values")
    if table_names != names:
        raise analysis.AnalysisError(
            "feature mismatch between the model and the table"
        )
    seed = stage_seed(args.seed if args.seed is not None else 0, "analyze")

    importances = analysis.gain_importance(model, len(names))
    split = table_core.stratified_split(
        encoded, encoded.target_name, test_frac=0.2, n_bins=10, seed=seed
    )
    Xtr, ytr, _ = _matrix(split.train, names)
    Xte, yte, _ = _matrix(split.test, names)
    spec = regress.TrainerSpec.make(
        "gbdt", depth=model.depth, l2_leaf=model.l2_leaf,
        learning_rate=0.1, n_rounds=100, od_wait=5, min_leaf=20,
    )
    order = [j for j, _ in importances]
    counts = sorted({c for c in (5, 10, 15, 20, 30, len(names)) if c <= len(names)})
    curve, selected = analysis.rfe_curve(
        Xtr, ytr, Xte, yte, order, counts, spec, seed=seed
    )
    design = [
        n for n in names
        if "=" not in n and encoded.meta(n).group == "design"
    ] or [names[j] for j, _ in importances[:10]]
    tornado = analysis.ovat_tornado(model, X, names, design, delta=0.5)
    ci = analysis.bootstrap_r2_ci(
        X, y, spec, iters=args.boot_iters, frac=0.75, seed=seed
    )

    os.makedirs(args.out, exist_ok=True)
    imp_path = os.path.join(args.out, "importance.csv")
    report.write_importance_csv(imp_path, importances, names)
    rfe_path = os.path.join(args.out, "rfe.csv")
    report.write_rfe_csv(rfe_path, curve, selected)
    tor_path = os.path.join(args.out, "tornado.csv")
    report.write_tornado_csv(tor_path, tornado)
    boot_path = os.path.join(args.out, "bootstrap.json")
    with open(boot_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "point_estimate": ci.point_estimate,
                "lower": ci.lower,
                "upper": ci.upper,
                "level": ci.level,
                "samples": list(ci.samples),
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    summary_path = os.path.join(args.out, "analysis.json")
    with open(summary_path, "w") as f:
        json.dump(
            {
                "schema_version": 1,
                "selected_feature_count": selected,
                "rfe_curve": [[n, r] for n, r in curve],
                "top_features": [names[j] for j, _ in importances[:10]],
                "bootstrap_ci": [ci.lower, ci.upper],
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    artifacts = [imp_path, rfe_path, tor_path, boot_path, summary_path]
    write_manifest(
        args.out, "analyze", {"boot_iters": args.boot_iters},
        {"stage": seed},
        [args.model, os.path.join(args.table, "table.csv")], artifacts,
        {"analyze": round(time.perf_counter() - t0, 3)},
    )
    log.info("analyze: CI [%.3f, %.3f], selected %d features",
             ci.lower, ci.upper, selected)
    return 0


# -- report ------------------------------------------------------------------


def cmd_report(args) -> int:
    t0 = time.perf_counter()
    src = args.table
    os.makedirs(args.out, exist_ok=True)
    artifacts = []
    inputs = []

    imp_csv = os.path.join(src, "importance.csv")
    if os.path.exists(imp_csv):
        with open(imp_csv, newline="") as f:
            rows = list(csv.DictReader(f))
        names = [r["feature"] for r in rows]
        imps = [(i, float(r["importance"])) for i, r in enumerate(rows)]
        path = os.path.join(args.out, "importance.png")
        report.plot_importance(imps, names, path)
        artifacts.append(path)
        inputs.append(imp_csv)

    tor_csv = os.path.join(src, "tornado.csv")
    if os.path.exists(tor_csv):
        with open(tor_csv, newline="") as f:
            entries = [
                analysis.TornadoEntry(
                    feature=r["feature"], baseline=float(r["baseline"]),
                    low=float(r["low"]), high=float(r["high"]),
                    delta=float(r["delta"]),
                )
                for r in csv.DictReader(f)
            ]
        path = os.path.join(args.out, "tornado.png")
        report.plot_tornado(entries, path)
        artifacts.append(path)
        inputs.append(tor_csv)

    rfe_csv = os.path.join(src, "rfe.csv")
    if os.path.exists(rfe_csv):
        with open(rfe_csv, newline="") as f:
            rows = list(csv.DictReader(f))
        curve = [(int(r["n_features"]), float(r["r2"])) for r in rows]
        selected = next(
            (int(r["n_features"]) for r in rows if r["selected"] == "1"),
            curve[-1][0],
        )
        path = os.path.join(args.out, "rfe.png")
        report.plot_rfe(curve, selected, path)
        artifacts.append(path)
        inputs.append(rfe_csv)

    boot_json = os.path.join(src, "bootstrap.json")
    if os.path.exists(boot_json):
        doc = _load_json(boot_json)
        ci = analysis.BootstrapCi(
            point_estimate=doc["point_estimate"], lower=doc["lower"],
            upper=doc["upper"], level=doc["level"],
            samples=tuple(doc["samples"]),
        )
        path = os.path.join(args.out, "bootstrap.png")
        report.plot_bootstrap(ci, path)
        artifacts.append(path)
        inputs.append(boot_json)

    emb_csv = os.path.join(src, "embedding.csv")
    if os.path.exists(emb_csv):
        with open(emb_csv, newline="") as f:
            rows = list(csv.DictReader(f))
        Y = np.array([[float(r["x"]), float(r["y"])] for r in rows])
        labels = np.array([int(r["cluster"]) for r in rows])
        path = os.path.join(args.out, "embedding.png")
        report.plot_embedding(Y, labels, path)
        artifacts.append(path)
        inputs.append(emb_csv)

    model_json = os.path.join(src, "model.json")
    if os.path.exists(model_json):
        model = regress.GbdtModel.load(model_json)
        if model.validation_curve:
            path = os.path.join(args.out, "validation_curve.png")
            report.plot_validation_curve(
                model.validation_curve, model.best_iteration, path
            )
            artifacts.append(path)
            inputs.append(model_json)

    if not artifacts:
        raise report.ReportError(f"no renderable artifacts found in {src}")
    write_manifest(
        args.out, "report", {"source": src}, {}, inputs, artifacts,
        {"report": round(time.perf_counter() - t0, 3)},
    )
    log.info("report: rendered %d figures", len(artifacts))
    return 0


# -- entry point -------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="root seed")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker bound (outputs are identical for any value)")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracflow",
        description="Fracturing-response forecasting pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic field database")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="merge raw source documents")
    _add_common(p)
    p.add_argument("--sources", required=True, help="directory of source CSVs")
    p.add_argument("--dicts", default=None, help="category dictionaries JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("impute", help="complete missing numeric cells")
    _add_common(p)
    p.add_argument("--table", required=True, help="input table directory")
    p.add_argument("--method", required=True,
                   help="|".join(IMPUTE_METHODS))
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.65,
                   help="max per-row missing fraction for method=drop")
    p.add_argument("--labels", default=None,
                   help="labels.csv for method=cluster_mean")
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("cluster", help="density clustering + anomaly scores")
    _add_common(p)
    p.add_argument("--table", required=True, help="completed table directory")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--embed-max", type=int, default=500,
                   help="subsample size for the 2-D embedding")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train", help="grid-searched boosted-tree regression")
    _add_common(p)
    p.add_argument("--table", required=True, help="completed table directory")
    p.add_argument("--grid", default=None, help="grid JSON")
    p.add_argument("--log-target", action="store_true",
                   help="also score a log-transformed-target model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="importance, RFE, tornado, bootstrap CI")
    _add_common(p)
    p.add_argument("--table", required=True, help="completed table directory")
    p.add_argument("--model", required=True, help="model.json path")
    p.add_argument("--boot-iters", type=int, default=100)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render figures from stage outputs")
    _add_common(p)
    p.add_argument("--table", required=True,
                   help="directory holding analyze/cluster/train outputs")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FRACFLOW_LOG", "error").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"fracflow {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        log.exception("internal error")
        print(f"fracflow {args.command}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
