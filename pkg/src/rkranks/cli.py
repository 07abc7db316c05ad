"""Command-line entry point: gen, build, query, bench and inspect workflows.

JSON goes to stdout for machine consumption; human-readable summaries go to
stderr. Every error path exits nonzero with a single-line diagnostic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .evaluation import run_benchmark, write_reports_csv, write_reports_json
from .oracle import rank_for_all_users, rank_order
from .query import query as run_query
from .ranktable import (
    RANGE_CAUCHY_SCHWARZ,
    RANGE_MODES,
    BuildParams,
    build_index,
    load_index,
    save_index,
)
from .vecdata import (
    FORMAT_BINARY,
    FORMAT_CSV,
    PROFILE_GAUSSIAN,
    PROFILES,
    ROLE_ITEMS,
    ROLE_USERS,
    ROLES,
    compute_norms,
    generate_synthetic,
    load_vectors,
    save_vectors,
)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _tau_value(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("tau must be >= 2")
    return value


def _c_value(text: str) -> float:
    value = float(text)
    if value < 1:
        raise argparse.ArgumentTypeError("c must be >= 1")
    return value


def _int_list(text: str) -> list[int]:
    values = [int(part) for part in text.split(",") if part.strip() != ""]
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("expected a comma-separated list of positive integers")
    return values


def _c_list(text: str) -> list[float]:
    values = [float(part) for part in text.split(",") if part.strip() != ""]
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("expected a comma-separated list of values >= 1")
    return values


def _default_threads() -> int:
    env = os.environ.get("RKRANKS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _vector_format(path: str) -> str:
    return FORMAT_CSV if str(path).endswith(".csv") else FORMAT_BINARY


def _load_role(path: str, role: str):
    return load_vectors(path, fmt=_vector_format(path), role=role)


def _cmd_gen(args) -> int:
    vs = generate_synthetic(args.count, args.dim, args.seed, args.profile, role=args.role)
    save_vectors(vs, args.out, args.format)
    norms = compute_norms(vs).norms
    print(f"wrote {vs.count} {vs.role} vectors (dim {vs.dim}) to {args.out}", file=sys.stderr)
    print(
        "norms: min={:.6g} mean={:.6g} max={:.6g} stddev={:.6g}".format(
            norms.min(), norms.mean(), norms.max(), norms.std()
        ),
        file=sys.stderr,
    )
    return 0


def _cmd_build(args) -> int:
    users = _load_role(args.users, ROLE_USERS)
    items = _load_role(args.items, ROLE_ITEMS)
    params = BuildParams(
        tau=args.tau, omega=args.omega, s=args.samples, seed=args.seed, range_mode=args.range_mode
    )
    index = build_index(users, items, params, threads=args.threads)
    save_index(index, args.out)
    size = os.path.getsize(args.out)
    print(
        json.dumps(
            {
                "n": index.n,
                "m": index.m,
                "dim": users.dim,
                "tau": params.tau,
                "omega": params.omega,
                "s": params.s,
                "seed": params.seed,
                "range_mode": params.range_mode,
                "inner_products": index.build_stats.inner_products,
                "build_millis": index.build_stats.build_millis,
                "index_bytes": size,
                "index_path": str(args.out),
            }
        )
    )
    print(
        f"built rank table (n={index.n}, m={index.m}, tau={params.tau}) in "
        f"{index.build_stats.build_millis} ms, {index.build_stats.inner_products} inner products",
        file=sys.stderr,
    )
    return 0


def _resolve_query_vector(args, users):
    if args.item_id is not None:
        if not args.items:
            raise ValueError("--item-id requires --items")
        items = _load_role(args.items, ROLE_ITEMS)
        rows = np.flatnonzero(items.ids == np.uint64(args.item_id))
        if rows.size == 0:
            raise ValueError(f"item id {args.item_id} not found in {args.items}")
        return items.data[int(rows[0])], int(args.item_id), items
    vec = np.array([float(x) for x in args.vector.split(",")], dtype=np.float32)
    if vec.shape[0] != users.dim:
        raise ValueError(f"--vector has {vec.shape[0]} components, expected {users.dim}")
    items = _load_role(args.items, ROLE_ITEMS) if args.items else None
    return vec, None, items


def _cmd_query(args) -> int:
    index = load_index(args.index)
    users = _load_role(args.users, ROLE_USERS)
    q_vec, q_id, items = _resolve_query_vector(args, users)
    result = run_query(index, users, q_vec, args.k, args.c, query_id=q_id)
    out = result.to_dict()
    if args.verify:
        if items is None:
            raise ValueError("--verify requires --items")
        ranks_all = rank_for_all_users(q_vec, users, items)
        truth = ranks_all[rank_order(ranks_all, users.ids)][: args.k]
        row_of_id = {int(uid): i for i, uid in enumerate(users.ids)}
        cand = np.sort(ranks_all[[row_of_id[e.user_id] for e in result.entries]])
        valid = cand.astype(np.float64) <= args.c * truth.astype(np.float64)
        out["verify"] = {
            "candidate_ranks": [int(r) for r in cand],
            "truth_ranks": [int(r) for r in truth],
            "valid": [bool(v) for v in valid],
            "all_valid": bool(valid.all()),
        }
    text = json.dumps(out)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    for e in result.entries:
        print(f"user {e.user_id:>12}  est_rank {e.est_rank:>12.2f}  via {e.admitted_by}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    users = _load_role(args.users, ROLE_USERS)
    items = _load_role(args.items, ROLE_ITEMS)
    params = BuildParams(
        tau=args.tau, omega=args.omega, s=args.samples, seed=args.seed, range_mode=args.range_mode
    )
    reports = run_benchmark(
        users,
        items,
        params,
        args.queries,
        args.k,
        args.c,
        args.seed,
        threads=args.threads,
        users_label=str(args.users),
        items_label=str(args.items),
    )
    write_reports_json(reports, args.out_json)
    write_reports_csv(reports, args.out_csv)
    print(json.dumps([{"config": r.config, "aggregates": r.aggregates} for r in reports]))
    print(f"{'k':>6} {'c':>6} {'accuracy':>10} {'ratio':>8} {'ms':>10}", file=sys.stderr)
    for r in reports:
        agg = r.aggregates
        print(
            f"{r.config['k']:>6} {r.config['c']:>6g} {agg['accuracy']:>10.4f} "
            f"{agg['overall_ratio']:>8.4f} {agg['query_millis']:>10.3f}",
            file=sys.stderr,
        )
    print(f"wrote {args.out_json} and {args.out_csv}", file=sys.stderr)
    return 0


def _cmd_inspect(args) -> int:
    index = load_index(args.index)
    print(
        json.dumps(
            {
                "n": index.n,
                "m": index.m,
                "tau": index.tau,
                "omega": index.params.omega,
                "s": index.params.s,
                "seed": index.params.seed,
                "range_mode": index.params.range_mode,
                "inner_products": index.build_stats.inner_products,
                "build_millis": index.build_stats.build_millis,
                "index_bytes": os.path.getsize(args.index),
            }
        )
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rkranks",
        description="Approximate reverse k-ranks search over inner-product embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic vector file")
    gen.add_argument("--role", choices=ROLES, required=True)
    gen.add_argument("--count", type=_positive_int, required=True)
    gen.add_argument("--dim", type=_positive_int, required=True)
    gen.add_argument("--seed", type=_nonneg_int, default=0)
    gen.add_argument("--profile", choices=PROFILES, default=PROFILE_GAUSSIAN)
    gen.add_argument("--format", choices=(FORMAT_BINARY, FORMAT_CSV), default=FORMAT_BINARY)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    build = sub.add_parser("build", help="build a rank-table index from vector files")
    build.add_argument("--users", required=True)
    build.add_argument("--items", required=True)
    build.add_argument("--tau", type=_tau_value, required=True)
    build.add_argument("--omega", type=_positive_int, required=True)
    build.add_argument("--samples", type=_positive_int, required=True)
    build.add_argument("--seed", type=_nonneg_int, default=0)
    build.add_argument("--range-mode", choices=RANGE_MODES, default=RANGE_CAUCHY_SCHWARZ)
    build.add_argument("--threads", type=_positive_int, default=_default_threads())
    build.add_argument("--out", required=True)
    build.set_defaults(func=_cmd_build)

    qry = sub.add_parser("query", help="answer one query against a built index")
    qry.add_argument("--index", required=True)
    qry.add_argument("--users", required=True)
    qry.add_argument("--items")
    source = qry.add_mutually_exclusive_group(required=True)
    source.add_argument("--item-id", type=_nonneg_int)
    source.add_argument("--vector", help="inline comma-separated components")
    qry.add_argument("--k", type=_positive_int, required=True)
    qry.add_argument("--c", type=_c_value, required=True)
    qry.add_argument("--verify", action="store_true", help="check the answer against the oracle")
    qry.add_argument("--out", help="also write the JSON result to this path")
    qry.set_defaults(func=_cmd_query)

    bench = sub.add_parser("bench", help="run a seeded benchmark sweep over k and c")
    bench.add_argument("--users", required=True)
    bench.add_argument("--items", required=True)
    bench.add_argument("--tau", type=_tau_value, required=True)
    bench.add_argument("--omega", type=_positive_int, required=True)
    bench.add_argument("--samples", type=_positive_int, required=True)
    bench.add_argument("--seed", type=_nonneg_int, default=0)
    bench.add_argument("--range-mode", choices=RANGE_MODES, default=RANGE_CAUCHY_SCHWARZ)
    bench.add_argument("--queries", type=_positive_int, required=True)
    bench.add_argument("--k", type=_int_list, required=True, help="comma-separated k values")
    bench.add_argument("--c", type=_c_list, required=True, help="comma-separated c values")
    bench.add_argument("--threads", type=_positive_int, default=_default_threads())
    bench.add_argument("--out-json", default="bench_report.json")
    bench.add_argument("--out-csv", default="bench_report.csv")
    bench.set_defaults(func=_cmd_bench)

    inspect = sub.add_parser("inspect", help="dump an index header and build stats")
    inspect.add_argument("--index", required=True)
    inspect.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
