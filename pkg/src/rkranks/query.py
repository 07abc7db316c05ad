"""Online c-approximate reverse k-ranks query processing.

A query costs exactly n d-dimensional inner products (one per user) plus
O(n) bound lookups, admissions and interpolations; nothing online touches
the item set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ranktable import RankTableIndex, ThresholdRow
from .vecdata import VectorSet, row_inner_products

REGION_IN = "in_range"
REGION_BELOW = "below_range"
REGION_ABOVE = "above_range"
_REGIONS = (REGION_IN, REGION_BELOW, REGION_ABOVE)

ADMITTED_BOUND = "bound"
ADMITTED_INTERPOLATION = "interpolation"


@dataclass(frozen=True)
class RankBounds:
    """Lower and upper rank bounds for one user against one query score.

    ``bracket`` is the 0-based left column of the threshold pair enclosing
    the score, or None when the score falls outside the grid (see region).
    """

    lower: float
    upper: float
    bracket: int | None
    region: str
    ip: float


@dataclass(frozen=True)
class ResultEntry:
    user_id: int
    est_rank: float
    admitted_by: str


@dataclass(frozen=True)
class QueryStats:
    inner_products: int
    users_filtered: int
    users_interpolated: int


@dataclass
class QueryResult:
    """Ordered k-user answer with estimated ranks and admission provenance."""

    k: int
    c: float
    entries: list[ResultEntry]
    r_down_k: float
    r_up_k: float
    stats: QueryStats
    query_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "k": self.k,
            "c": self.c,
            "entries": [
                {"user_id": e.user_id, "est_rank": e.est_rank, "admitted_by": e.admitted_by}
                for e in self.entries
            ],
            "thresholds": {"r_down_k": self.r_down_k, "r_up_k": self.r_up_k},
            "stats": {
                "inner_products": self.stats.inner_products,
                "users_filtered": self.stats.users_filtered,
                "users_interpolated": self.stats.users_interpolated,
            },
        }


def _bounds_arrays(index: RankTableIndex, ips: np.ndarray, rows: np.ndarray):
    """Vectorized bound lookup for the given user rows.

    Returns (lower, upper, bracket, region) arrays; region codes are
    0 = in range, 1 = below the grid, 2 = above. The bracket is located by
    O(1) grid arithmetic with a one-cell fixup guarding against quotient
    rounding at column edges, so t[j] <= ip <= t[j+1] always holds in range.
    """
    t_min = index.t_min[rows].astype(np.float64)
    step = index.step[rows].astype(np.float64)
    cells = index.cells[rows]
    tau = index.tau
    ips = np.asarray(ips, dtype=np.float64)
    t_last = t_min + (tau - 1) * step
    below = ips < t_min
    above = ips > t_last
    j = np.zeros(len(rows), dtype=np.int64)
    active = ~(below | above) & (step > 0)
    if active.any():
        quot = (ips[active] - t_min[active]) / step[active]
        jj = np.clip(np.floor(quot).astype(np.int64), 0, tau - 2)
        tj = t_min[active] + jj * step[active]
        jj = np.where((ips[active] < tj) & (jj > 0), jj - 1, jj)
        tj1 = t_min[active] + (jj + 1) * step[active]
        jj = np.where((ips[active] > tj1) & (jj < tau - 2), jj + 1, jj)
        j[active] = jj
    pick = np.arange(len(rows))
    lower = cells[pick, j + 1].astype(np.float64)
    upper = cells[pick, j].astype(np.float64)
    boundary_top = float(index.m + 1)
    lower = np.where(below, cells[:, 0].astype(np.float64), lower)
    upper = np.where(below, boundary_top, upper)
    lower = np.where(above, 1.0, lower)
    upper = np.where(above, cells[:, tau - 1].astype(np.float64), upper)
    region = np.zeros(len(rows), dtype=np.int8)
    region[below] = 1
    region[above] = 2
    return lower, upper, j, region


def _interpolate_arrays(index, ips, lower, upper, j, region, rows) -> np.ndarray:
    """Vectorized twin of interpolate_rank, same formula and operation order."""
    t_min = index.t_min[rows].astype(np.float64)
    step = index.step[rows].astype(np.float64)
    ips = np.asarray(ips, dtype=np.float64)
    est = np.empty(len(rows), dtype=np.float64)
    degenerate = step == 0
    est[degenerate] = lower[degenerate]
    boundary = (region != 0) & ~degenerate
    est[boundary] = (lower[boundary] + upper[boundary]) / 2.0
    inside = (region == 0) & ~degenerate
    if inside.any():
        tj = t_min[inside] + j[inside] * step[inside]
        frac = np.clip((ips[inside] - tj) / step[inside], 0.0, 1.0)
        est[inside] = upper[inside] + frac * (lower[inside] - upper[inside])
    return est


def rank_bounds(index: RankTableIndex, user_row: int, ip: float) -> RankBounds:
    """Rank bounds for one user from the two cells around its query score.

    Scores above the top threshold bound the rank by (1, cells[tau-1]);
    scores below the bottom threshold by (cells[0], m+1).
    """
    if not 0 <= user_row < index.n:
        raise ValueError(f"user row {user_row} out of range [0, {index.n})")
    rows = np.array([user_row], dtype=np.int64)
    lower, upper, j, region = _bounds_arrays(index, np.array([ip], dtype=np.float64), rows)
    reg = _REGIONS[region[0]]
    return RankBounds(
        lower=float(lower[0]),
        upper=float(upper[0]),
        bracket=int(j[0]) if reg == REGION_IN else None,
        region=reg,
        ip=float(ip),
    )


def kth_smallest(values, k: int) -> float:
    """k-th order statistic via linear-time selection."""
    arr = np.asarray(values, dtype=np.float64)
    if not 1 <= k <= arr.size:
        raise ValueError(f"k={k} out of range: need 1 <= k <= {arr.size}")
    return float(np.partition(arr, k - 1)[k - 1])


def interpolate_rank(bounds: RankBounds, row: ThresholdRow) -> float:
    """Rank estimate between the two bounding cells, linear in the score.

    Maps ip = t[j] to the upper bound and ip = t[j+1] to the lower bound
    (rank falls as the score rises). Out-of-grid scores get the midpoint;
    a degenerate zero-step row returns the lower bound.
    """
    if row.step == 0:
        return float(bounds.lower)
    if bounds.region != REGION_IN:
        return (bounds.lower + bounds.upper) / 2.0
    tj = row.t_min + bounds.bracket * row.step
    frac = min(max((bounds.ip - tj) / row.step, 0.0), 1.0)
    return float(bounds.upper + frac * (bounds.lower - bounds.upper))


def query(
    index: RankTableIndex,
    users: VectorSet,
    q,
    k: int,
    c: float,
    query_id: int | None = None,
) -> QueryResult:
    """Answer one c-approximate reverse k-ranks query.

    Step 1 scores q against every user (the only d-dependent work) and reads
    rank bounds from the table. Step 2 admits users whose upper bound is at
    most c times the k-th smallest lower bound and drops users whose lower
    bound exceeds the k-th smallest upper bound; when the two k-th bounds
    already satisfy the inequality the k smallest upper bounds are the
    answer outright. Step 3 fills any remainder from the surviving pool by
    smallest interpolated rank.
    """
    if index.n != users.count:
        raise ValueError(f"index built for n={index.n} users, got a set of {users.count}")
    q64 = np.asarray(q, dtype=np.float64)
    if q64.ndim != 1 or q64.shape[0] != users.dim:
        raise ValueError(f"query vector must have dim {users.dim}")
    n = index.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range: need 1 <= k <= n={n}")
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")

    ips = row_inner_products(users.data, q64)  # exactly n inner products
    rows = np.arange(n, dtype=np.int64)
    lower, upper, j, region = _bounds_arrays(index, ips, rows)
    r_down_k = kth_smallest(lower, k)
    r_up_k = kth_smallest(upper, k)
    est_interp = _interpolate_arrays(index, ips, lower, upper, j, region, rows)
    ids = users.ids

    if c * r_down_k >= r_up_k:
        # At least k users already satisfy the approximation inequality.
        order = np.lexsort((ids, est_interp, upper))
        chosen = order[:k]
        entries = [ResultEntry(int(ids[i]), float(upper[i]), ADMITTED_BOUND) for i in chosen]
        filtered = 0
        interpolated = 0
    else:
        admitted_mask = upper <= c * r_down_k
        discard_mask = lower > r_up_k
        admitted = np.flatnonzero(admitted_mask)
        if admitted.size > k:
            order = np.lexsort((ids[admitted], est_interp[admitted], upper[admitted]))
            admitted = admitted[order[:k]]
        entries = [ResultEntry(int(ids[i]), float(upper[i]), ADMITTED_BOUND) for i in admitted]
        interpolated = 0
        if len(entries) < k:
            pool = np.flatnonzero(~admitted_mask & ~discard_mask)
            order = np.lexsort((ids[pool], est_interp[pool]))
            take = pool[order[: k - len(entries)]]
            entries.extend(
                ResultEntry(int(ids[i]), float(est_interp[i]), ADMITTED_INTERPOLATION)
                for i in take
            )
            interpolated = len(take)
        filtered = int(discard_mask.sum())

    if len(entries) != k:  # cannot happen: survivors always number >= k
        raise RuntimeError(f"internal error: assembled {len(entries)} entries for k={k}")
    entries.sort(key=lambda e: (e.est_rank, e.user_id))
    return QueryResult(
        k=k,
        c=float(c),
        entries=entries,
        r_down_k=r_down_k,
        r_up_k=r_up_k,
        stats=QueryStats(
            inner_products=n, users_filtered=filtered, users_interpolated=interpolated
        ),
        query_id=query_id,
    )
