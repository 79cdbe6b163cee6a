"""Production-forecasting pipeline for hydraulically fractured wells.

Library layout mirrors the pipeline stages: :mod:`table_core` (masked
tables), :mod:`ingest` (source merging and record linkage), :mod:`impute`
(missing-value completion), :mod:`structure` (clustering, anomaly scores,
embedding), :mod:`regress` (tree-ensemble regression), :mod:`analysis`
(importance, RFE, tornado, bootstrap CI), :mod:`synthgen` (benchmark
generator with planted ground truth), :mod:`report` (figures) and
:mod:`cli` (orchestrator).
"""

from .table_core import (
    ColumnMeta,
    FieldTable,
    make_numeric_table,
    missing_fraction,
    read_table,
    standardize,
    stratified_split,
    write_table,
)
from .ingest import (
    CategoryDictionary,
    SourceDoc,
    levenshtein,
    merge_sources,
    normalize_category,
)
from .impute import (
    CompletedTable,
    drop_sparse_rows,
    fill_column_means,
    fill_group_means,
    nnmf_impute,
    select_rank,
    tsvd_impute,
)
from .structure import (
    dbscan,
    default_eps,
    isolation_forest_scores,
    kurtosis,
    tsne_embed,
)
from .regress import (
    GbdtModel,
    TrainerSpec,
    fit_forest,
    fit_gbdt,
    fit_tree,
    grid_search,
    kfold_cv,
    knn_regress,
    mape,
    r2_score,
)
from .analysis import (
    bootstrap_r2_ci,
    gain_importance,
    ovat_tornado,
    rfe_curve,
)
from .synthgen import (
    SynthConfig,
    generate_synth_db,
    replay_ledger,
    true_target,
)

__version__ = "1.0.0"
