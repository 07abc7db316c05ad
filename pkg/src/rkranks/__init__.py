"""Approximate reverse k-ranks search over inner-product embeddings.

Given user vectors U and item vectors P, a reverse k-ranks query returns
the k users for whom a query item ranks best by inner product. This package
answers the c-approximate variant with a sampled rank-table index built
offline and an online algorithm whose per-query cost is one inner product
per user, plus an exact brute-force oracle for validation and metrics.
"""

from .evaluation import (
    EvalReport,
    QueryEval,
    accuracy,
    overall_ratio,
    run_benchmark,
    write_reports_csv,
    write_reports_json,
)
from .oracle import (
    ExactRankList,
    ExactRankOracle,
    exact_rank,
    exact_reverse_k_ranks,
    load_rank_list,
    rank_for_all_users,
    save_rank_list,
    validate_c_approx,
)
from .query import (
    QueryResult,
    RankBounds,
    ResultEntry,
    interpolate_rank,
    kth_smallest,
    query,
    rank_bounds,
)
from .ranktable import (
    BuildParams,
    Partitioning,
    RankTableIndex,
    ThresholdRow,
    build_index,
    compute_threshold_row,
    draw_samples,
    estimate_row,
    index_file_size,
    load_index,
    save_index,
    sort_and_partition,
)
from .vecdata import (
    NormTable,
    VectorSet,
    compute_norms,
    generate_synthetic,
    inner_product,
    load_vectors,
    row_inner_products,
    save_vectors,
)

__version__ = "0.1.0"

__all__ = [
    "BuildParams",
    "EvalReport",
    "ExactRankList",
    "ExactRankOracle",
    "NormTable",
    "Partitioning",
    "QueryEval",
    "QueryResult",
    "RankBounds",
    "RankTableIndex",
    "ResultEntry",
    "ThresholdRow",
    "VectorSet",
    "accuracy",
    "build_index",
    "compute_norms",
    "compute_threshold_row",
    "draw_samples",
    "estimate_row",
    "exact_rank",
    "exact_reverse_k_ranks",
    "generate_synthetic",
    "index_file_size",
    "inner_product",
    "interpolate_rank",
    "kth_smallest",
    "load_index",
    "load_rank_list",
    "load_vectors",
    "overall_ratio",
    "query",
    "rank_bounds",
    "rank_for_all_users",
    "row_inner_products",
    "run_benchmark",
    "save_index",
    "save_rank_list",
    "save_vectors",
    "sort_and_partition",
    "validate_c_approx",
    "write_reports_csv",
    "write_reports_json",
]
