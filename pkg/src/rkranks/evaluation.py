"""Accuracy and rank-ratio metrics against the exact oracle, plus sweeps.

The benchmark draws queries from the item set, answers them through the
index, recomputes the returned users' exact ranks by brute force and scores
the result position-wise against the exact reverse k-ranks answer.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .oracle import ExactRankOracle, rank_order
from .query import query
from .ranktable import BuildParams, build_index
from .vecdata import VectorSet

CSV_COLUMNS = [
    "query_id",
    "k",
    "c",
    "tau",
    "omega",
    "s",
    "range_mode",
    "seed",
    "accuracy",
    "overall_ratio",
    "query_millis",
    "inner_products",
]


@dataclass(frozen=True)
class QueryEval:
    query_id: int
    accuracy: float
    overall_ratio: float
    query_millis: float
    inner_products: int


@dataclass
class EvalReport:
    """Per-query metrics and their means for one (k, c) configuration."""

    config: dict
    per_query: list[QueryEval]
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "aggregates": self.aggregates,
            "per_query": [vars(row) for row in self.per_query],
        }


def accuracy(candidate_ranks, truth_ranks, c: float) -> float:
    """Fraction of positions where the candidate rank is within c times truth."""
    cand = np.asarray(candidate_ranks, dtype=np.float64)
    truth = np.asarray(truth_ranks, dtype=np.float64)
    if cand.ndim != 1 or cand.shape != truth.shape:
        raise ValueError(f"length mismatch: {cand.shape} vs {truth.shape}")
    return float(np.mean(cand <= c * truth))


def overall_ratio(candidate_ranks, truth_ranks) -> float:
    """Mean position-wise candidate/truth rank ratio; 1.0 means exact profile."""
    cand = np.asarray(candidate_ranks, dtype=np.float64)
    truth = np.asarray(truth_ranks, dtype=np.float64)
    if cand.ndim != 1 or cand.shape != truth.shape:
        raise ValueError(f"length mismatch: {cand.shape} vs {truth.shape}")
    return float(np.mean(cand / truth))


def run_benchmark(
    users: VectorSet,
    items: VectorSet,
    index_params: BuildParams,
    query_count: int,
    k_list,
    c_list,
    seed: int,
    threads: int = 1,
    users_label: str | None = None,
    items_label: str | None = None,
) -> list[EvalReport]:
    """Index the data once and sweep (k, c) over seeded item queries.

    Returns one report per (k, c) pair. Exact ranks for each query are
    computed once and shared across the sweep; a warm-up query is run and
    discarded before any timing. Timing covers query processing only and is
    taken from a monotonic clock.
    """
    k_list = [int(k) for k in k_list]
    c_list = [float(c) for c in c_list]
    if not k_list or not c_list:
        raise ValueError("k_list and c_list must be nonempty")
    if not 1 <= query_count <= items.count:
        raise ValueError(f"query_count={query_count} out of range: need 1 <= q <= m={items.count}")
    for k in k_list:
        if not 1 <= k <= users.count:
            raise ValueError(f"k={k} out of range: need 1 <= k <= n={users.count}")
    for c in c_list:
        if c < 1:
            raise ValueError(f"c must be >= 1, got {c}")

    index = build_index(users, items, index_params, threads=threads)
    oracle = ExactRankOracle(users, items)
    rng = np.random.default_rng(seed)
    query_rows = rng.choice(items.count, size=query_count, replace=False)

    base_config = {
        "tau": index_params.tau,
        "omega": index_params.omega,
        "s": index_params.s,
        "range_mode": index_params.range_mode,
        "seed": seed,
        "build_seed": index_params.seed,
        "n": users.count,
        "m": items.count,
        "dim": users.dim,
        "query_count": query_count,
        "users": users_label or f"{users.role}:{users.count}x{users.dim}",
        "items": items_label or f"{items.role}:{items.count}x{items.dim}",
        "build_millis": index.build_stats.build_millis,
        "build_inner_products": index.build_stats.inner_products,
    }

    query(index, users, items.data[int(query_rows[0])], k_list[0], c_list[0])  # warm-up

    rows_by_config: dict[tuple[int, float], list[QueryEval]] = {
        (k, c): [] for k in k_list for c in c_list
    }
    for q_row in query_rows:
        q_row = int(q_row)
        q_vec = items.data[q_row]
        q_id = int(items.ids[q_row])
        ranks_all = oracle.ranks_for_item(q_row)
        truth_sorted = ranks_all[rank_order(ranks_all, users.ids)]
        for k in k_list:
            truth_k = truth_sorted[:k]
            for c in c_list:
                t0 = time.perf_counter()
                result = query(index, users, q_vec, k, c, query_id=q_id)
                millis = (time.perf_counter() - t0) * 1000.0
                cand_rows = oracle.user_rows(e.user_id for e in result.entries)
                cand_ranks = np.sort(ranks_all[cand_rows])
                rows_by_config[(k, c)].append(
                    QueryEval(
                        query_id=q_id,
                        accuracy=accuracy(cand_ranks, truth_k, c),
                        overall_ratio=overall_ratio(cand_ranks, truth_k),
                        query_millis=millis,
                        inner_products=result.stats.inner_products,
                    )
                )

    reports = []
    for k in k_list:
        for c in c_list:
            per_query = rows_by_config[(k, c)]
            aggregates = {
                "accuracy": float(np.mean([r.accuracy for r in per_query])),
                "overall_ratio": float(np.mean([r.overall_ratio for r in per_query])),
                "query_millis": float(np.mean([r.query_millis for r in per_query])),
                "inner_products": float(np.mean([r.inner_products for r in per_query])),
            }
            config = dict(base_config, k=k, c=c)
            reports.append(EvalReport(config=config, per_query=per_query, aggregates=aggregates))
    return reports


def write_reports_json(reports: list[EvalReport], path) -> None:
    with open(Path(path), "w", encoding="ascii") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
        fh.write("\n")


def write_reports_csv(reports: list[EvalReport], path) -> None:
    """One flat row per query and configuration, ready for external plotting."""
    with open(Path(path), "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            cfg = report.config
            for row in report.per_query:
                writer.writerow(
                    [
                        row.query_id,
                        cfg["k"],
                        cfg["c"],
                        cfg["tau"],
                        cfg["omega"],
                        cfg["s"],
                        cfg["range_mode"],
                        cfg["seed"],
                        repr(row.accuracy),
                        repr(row.overall_ratio),
                        repr(row.query_millis),
                        row.inner_products,
                    ]
                )
