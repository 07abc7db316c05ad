"""Exact brute-force reverse k-ranks answering: the ground-truth rank source.

Deliberately unindexed: every operation here is a full scan so it can serve
as the oracle that the sampled index and its metrics are checked against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .vecdata import VectorSet, inner_product, row_inner_products


@dataclass
class ExactRankList:
    """Users paired with exact ranks, ascending by (rank, user_id)."""

    query_id: int | None
    user_ids: np.ndarray  # uint64
    ranks: np.ndarray  # int64, non-decreasing

    def __len__(self) -> int:
        return len(self.ranks)

    def entries(self) -> list[tuple[int, int]]:
        return [(int(u), int(r)) for u, r in zip(self.user_ids, self.ranks)]


def _item_matrix(items) -> np.ndarray:
    if isinstance(items, VectorSet):
        return items.data
    mat = np.asarray(items, dtype=np.float32)
    if mat.ndim != 2:
        raise ValueError("items must be a VectorSet or a 2-D array")
    return mat


def exact_rank(q, u, items) -> int:
    """Rank of q for user u: one plus the items scoring strictly higher.

    Ties with u.q do not count, so the result lies in [1, m+1]. ``items``
    may be a plain (m, d) array, including m = 0.
    """
    mat = _item_matrix(items)
    u64 = np.asarray(u, dtype=np.float64)
    uq = inner_product(u64, q)
    if mat.shape[0] == 0:
        return 1
    ups = row_inner_products(mat, u64)
    return 1 + int(np.count_nonzero(ups > uq))


def rank_for_all_users(q, users: VectorSet, items) -> np.ndarray:
    """Exact rank of q for every user, by full scan (n.m inner products)."""
    mat = _item_matrix(items)
    q64 = np.asarray(q, dtype=np.float64)
    ranks = np.empty(users.count, dtype=np.int64)
    for i in range(users.count):
        u = users.data[i]
        uq = inner_product(u, q64)
        if mat.shape[0] == 0:
            ranks[i] = 1
        else:
            ranks[i] = 1 + np.count_nonzero(row_inner_products(mat, u) > uq)
    return ranks


def rank_order(ranks: np.ndarray, user_ids: np.ndarray) -> np.ndarray:
    """Row order sorting ranks ascending, ties broken by ascending user id."""
    return np.lexsort((user_ids, ranks))


def exact_reverse_k_ranks(q, k: int, users: VectorSet, items) -> ExactRankList:
    """The k users for whom q ranks best, with their exact ranks.

    Full-scan baseline, O(n.m.d). Ties at the rank boundary are broken by
    ascending user id, making the result deterministic and prefix-consistent
    across values of k.
    """
    n = users.count
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range: need 1 <= k <= n={n}")
    ranks = rank_for_all_users(q, users, items)
    sel = rank_order(ranks, users.ids)[:k]
    return ExactRankList(query_id=None, user_ids=users.ids[sel].copy(), ranks=ranks[sel].copy())


def validate_c_approx(candidate: ExactRankList, truth: ExactRankList, c: float) -> np.ndarray:
    """Position-wise approximation check: candidate rank <= c * truth rank."""
    if len(candidate) != len(truth):
        raise ValueError(f"length mismatch: {len(candidate)} vs {len(truth)}")
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    return candidate.ranks.astype(np.float64) <= c * truth.ranks.astype(np.float64)


class ExactRankOracle:
    """Brute-force rank source with a cached user-item score matrix.

    Pays n.m.d once; afterwards the ranks of any query cost n.m comparisons.
    Intended for benchmark harnesses that push many queries against the same
    user and item sets. Read-only after construction.
    """

    def __init__(self, users: VectorSet, items: VectorSet):
        if users.dim != items.dim:
            raise ValueError(f"dimension mismatch: users d={users.dim}, items d={items.dim}")
        self.users = users
        self.items = items
        products = np.empty((users.count, items.count), dtype=np.float64)
        for i in range(users.count):
            products[i] = row_inner_products(items.data, users.data[i])
        self._products = products
        self._row_of_id = {int(uid): i for i, uid in enumerate(users.ids)}

    def ranks_for_item(self, item_row: int) -> np.ndarray:
        """Exact ranks of the item at row ``item_row``, for every user."""
        uq = self._products[:, item_row]
        return 1 + np.count_nonzero(self._products > uq[:, None], axis=1)

    def ranks_for_vector(self, q) -> np.ndarray:
        """Exact ranks of an arbitrary query vector, for every user."""
        uq = row_inner_products(self.users.data, q)
        return 1 + np.count_nonzero(self._products > uq[:, None], axis=1)

    def user_rows(self, user_ids) -> np.ndarray:
        """Map user ids back to row positions in the user set."""
        return np.array([self._row_of_id[int(uid)] for uid in user_ids], dtype=np.int64)

    def reverse_k_ranks(self, ranks: np.ndarray, k: int, query_id: int | None = None) -> ExactRankList:
        """Truth list for precomputed ranks (see :func:`exact_reverse_k_ranks`)."""
        n = self.users.count
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range: need 1 <= k <= n={n}")
        sel = rank_order(ranks, self.users.ids)[:k]
        return ExactRankList(
            query_id=query_id, user_ids=self.users.ids[sel].copy(), ranks=ranks[sel].copy()
        )


def save_rank_list(rl: ExactRankList, path) -> None:
    """CSV serialization: query_id, user_id, exact_rank per row."""
    with open(Path(path), "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "user_id", "exact_rank"])
        qid = "" if rl.query_id is None else int(rl.query_id)
        for uid, rank in zip(rl.user_ids, rl.ranks):
            writer.writerow([qid, int(uid), int(rank)])


def load_rank_list(path) -> ExactRankList:
    with open(Path(path), "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["query_id", "user_id", "exact_rank"]:
            raise ValueError(f"{path}: unexpected header {header}")
        qid: int | None = None
        user_ids: list[int] = []
        ranks: list[int] = []
        for row in reader:
            if not row:
                continue
            qid = int(row[0]) if row[0] != "" else None
            user_ids.append(int(row[1]))
            ranks.append(int(row[2]))
    return ExactRankList(
        query_id=qid,
        user_ids=np.array(user_ids, dtype=np.uint64),
        ranks=np.array(ranks, dtype=np.int64),
    )
