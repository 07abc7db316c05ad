"""Offline rank-table construction: threshold grids plus sampled rank cells.

The index stores, per user, a uniform grid of inner-product thresholds and
the estimated rank an item would have at each threshold. Estimation uses
stratified sampling over the items sorted by descending norm, so the few
high-norm items that dominate top ranks are never undersampled.
"""

from __future__ import annotations

import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .vecdata import NormTable, VectorSet, compute_norms, inner_product, row_inner_products

RANGE_CAUCHY_SCHWARZ = "cauchy_schwarz"
RANGE_EXACT = "exact"
RANGE_MODES = (RANGE_CAUCHY_SCHWARZ, RANGE_EXACT)

_RANGE_CODES = {RANGE_CAUCHY_SCHWARZ: 0, RANGE_EXACT: 1}
_CODE_RANGES = {code: mode for mode, code in _RANGE_CODES.items()}

_INDEX_MAGIC = b"RKT1"
_INDEX_VERSION = 1
_INDEX_HEADER = struct.Struct("<4sHQQIIIQB")
_INDEX_TRAILER = struct.Struct("<QQ")


@dataclass(frozen=True)
class BuildParams:
    """Knobs for one index build.

    tau is the number of threshold columns, omega the number of norm strata,
    s the sample size per stratum. Sampling is without replacement, so s may
    not exceed the smallest stratum.
    """

    tau: int
    omega: int
    s: int
    seed: int
    range_mode: str = RANGE_CAUCHY_SCHWARZ

    def __post_init__(self) -> None:
        if self.tau < 2:
            raise ValueError(f"tau must be >= 2, got {self.tau}")
        if self.omega < 1:
            raise ValueError(f"omega must be >= 1, got {self.omega}")
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.range_mode not in RANGE_MODES:
            raise ValueError(f"unknown range mode {self.range_mode!r}, expected one of {RANGE_MODES}")


@dataclass
class Partitioning:
    """Norm-descending item order cut into contiguous strata, plus samples."""

    norm_table: NormTable
    boundaries: np.ndarray  # int64 offsets into the sorted order, length omega+1
    samples: list[np.ndarray] | None = None  # per stratum, item row indices
    _sample_matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def omega(self) -> int:
        return len(self.boundaries) - 1

    @property
    def stratum_sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def sample_count(self) -> int:
        if self.samples is None:
            raise ValueError("partitioning has no samples; call draw_samples first")
        return len(self.samples[0])

    def sample_matrix(self, items: VectorSet) -> np.ndarray:
        """All sampled item vectors, strata concatenated in order (omega*s, d)."""
        if self.samples is None:
            raise ValueError("partitioning has no samples; call draw_samples first")
        if self._sample_matrix is None:
            self._sample_matrix = items.data[np.concatenate(self.samples)]
        return self._sample_matrix


@dataclass(frozen=True)
class ThresholdRow:
    """Uniform threshold grid for one user, stored as float32 base and step.

    Column j (0-based) sits at t_min + j*step; step is zero only in the
    degenerate case where the score range collapses to a point.
    """

    t_min: float
    step: float
    tau: int

    def thresholds(self) -> np.ndarray:
        return self.t_min + np.arange(self.tau, dtype=np.float64) * self.step


@dataclass
class BuildStats:
    inner_products: int
    build_millis: int


@dataclass(eq=False)
class RankTableIndex:
    """Per-user threshold rows and the n x tau matrix of estimated ranks."""

    n: int
    m: int
    tau: int
    t_min: np.ndarray  # float32, (n,)
    step: np.ndarray  # float32, (n,)
    cells: np.ndarray  # float32, (n, tau), non-increasing along each row
    params: BuildParams
    build_stats: BuildStats

    def row(self, i: int) -> ThresholdRow:
        if not 0 <= i < self.n:
            raise ValueError(f"user row {i} out of range [0, {self.n})")
        return ThresholdRow(t_min=float(self.t_min[i]), step=float(self.step[i]), tau=self.tau)


def sort_and_partition(items: VectorSet, omega: int) -> Partitioning:
    """Order items by descending norm and cut into omega contiguous strata.

    Sizes differ by at most one; when omega does not divide m the extra
    items go to the leading (largest-norm) strata.
    """
    m = items.count
    if not 1 <= omega <= m:
        raise ValueError(f"omega={omega} out of range: need 1 <= omega <= m={m}")
    norm_table = compute_norms(items)
    base, extra = divmod(m, omega)
    sizes = np.full(omega, base, dtype=np.int64)
    sizes[:extra] += 1
    boundaries = np.concatenate(([0], np.cumsum(sizes)))
    return Partitioning(norm_table=norm_table, boundaries=boundaries)


def draw_samples(partitioning: Partitioning, s: int, seed: int) -> Partitioning:
    """Sample s item rows per stratum, uniformly without replacement.

    Deterministic for a given seed; the samples are shared by every user row
    built from this partitioning.
    """
    sizes = partitioning.stratum_sizes
    smallest = int(sizes.min())
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if s > smallest:
        raise ValueError(f"s={s} too large: smallest stratum holds {smallest} items")
    rng = np.random.default_rng(seed)
    order = partitioning.norm_table.order
    samples = []
    for l in range(partitioning.omega):
        lo = int(partitioning.boundaries[l])
        positions = lo + rng.choice(int(sizes[l]), size=s, replace=False)
        samples.append(order[positions])
    return Partitioning(
        norm_table=partitioning.norm_table,
        boundaries=partitioning.boundaries,
        samples=samples,
    )


def compute_threshold_row(
    u,
    items: VectorSet,
    tau: int,
    range_mode: str = RANGE_CAUCHY_SCHWARZ,
    max_item_norm: float | None = None,
) -> ThresholdRow:
    """Threshold grid endpoints for one user.

    exact scans every item for the true score extrema (m inner products per
    user); cauchy_schwarz bounds them by ||u|| times the largest item norm,
    which needs no scan and always covers the exact range. Endpoints are
    rounded to float32 up front so the grid used during the build is the
    same one reconstructed after save/load.
    """
    if tau < 2:
        raise ValueError(f"tau must be >= 2, got {tau}")
    u64 = np.asarray(u, dtype=np.float64)
    if range_mode == RANGE_EXACT:
        products = row_inner_products(items.data, u64)
        f_max = float(products.max())
        f_min = float(products.min())
    elif range_mode == RANGE_CAUCHY_SCHWARZ:
        if max_item_norm is None:
            max_item_norm = float(compute_norms(items).norms.max())
        f_max = math.sqrt(inner_product(u64, u64)) * float(max_item_norm)
        f_min = -f_max
    else:
        raise ValueError(f"unknown range mode {range_mode!r}, expected one of {RANGE_MODES}")
    step = (f_max - f_min) / (tau - 1)
    return ThresholdRow(t_min=float(np.float32(f_min)), step=float(np.float32(step)), tau=int(tau))


def estimate_row(u, row: ThresholdRow, partitioning: Partitioning, items: VectorSet) -> np.ndarray:
    """Estimated rank cells for one user (length tau, float64).

    Per stratum, counts the sampled items scoring strictly above each
    threshold and scales the count by stratum_size / s. Costs omega*s inner
    products. With exhaustive samples the scaling is exactly 1, so the cells
    equal the definition-level counts.
    """
    t = row.thresholds()
    sizes = partitioning.stratum_sizes
    s = partitioning.sample_count
    u64 = np.asarray(u, dtype=np.float64)
    products = row_inner_products(partitioning.sample_matrix(items), u64)
    products = products.reshape(partitioning.omega, s)
    counts = (products[:, :, np.newaxis] > t[np.newaxis, np.newaxis, :]).sum(axis=1)
    cells = np.ones(row.tau, dtype=np.float64)
    for l in range(partitioning.omega):
        cells += counts[l].astype(np.float64) * float(sizes[l]) / float(s)
    return cells


def build_index(
    users: VectorSet, items: VectorSet, params: BuildParams, threads: int = 1
) -> RankTableIndex:
    """Run the full offline pipeline: norms, strata, samples, per-user rows.

    Deterministic given params.seed regardless of thread count (rows are
    independent and all shared state is read-only). The inner-product
    counter covers the m item norms, the n*omega*s sampled scores and, in
    exact range mode, the additional n*m extrema scan.
    """
    if users.dim != items.dim:
        raise ValueError(f"dimension mismatch: users d={users.dim}, items d={items.dim}")
    n, m = users.count, items.count
    start = time.perf_counter()
    partitioning = sort_and_partition(items, params.omega)
    partitioning = draw_samples(partitioning, params.s, params.seed)
    partitioning.sample_matrix(items)  # prime the cache before any worker threads run
    max_norm = float(partitioning.norm_table.norms.max())
    t_min = np.empty(n, dtype=np.float32)
    step = np.empty(n, dtype=np.float32)
    cells = np.empty((n, params.tau), dtype=np.float32)

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            u = users.data[i]
            row = compute_threshold_row(
                u, items, params.tau, params.range_mode, max_item_norm=max_norm
            )
            t_min[i] = row.t_min
            step[i] = row.step
            cells[i] = estimate_row(u, row, partitioning, items)

    workers = max(1, int(threads)) if threads else 1
    if workers == 1 or n < 2 * workers:
        fill(0, n)
    else:
        chunk = -(-n // workers)
        bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: fill(*b), bounds))

    inner_products = m + n * params.omega * params.s
    if params.range_mode == RANGE_EXACT:
        inner_products += n * m
    build_millis = int((time.perf_counter() - start) * 1000)
    return RankTableIndex(
        n=n,
        m=m,
        tau=params.tau,
        t_min=t_min,
        step=step,
        cells=cells,
        params=params,
        build_stats=BuildStats(inner_products=inner_products, build_millis=build_millis),
    )


def index_file_size(n: int, tau: int) -> int:
    """Exact on-disk size: fixed header and trailer plus n*(8 + 4*tau) bytes."""
    return _INDEX_HEADER.size + n * (2 + tau) * 4 + _INDEX_TRAILER.size


def save_index(index: RankTableIndex, path) -> None:
    """Write the index; the format round-trips bitwise via load_index."""
    records = np.empty((index.n, 2 + index.tau), dtype="<f4")
    records[:, 0] = index.t_min
    records[:, 1] = index.step
    records[:, 2:] = index.cells
    header = _INDEX_HEADER.pack(
        _INDEX_MAGIC,
        _INDEX_VERSION,
        index.n,
        index.m,
        index.tau,
        index.params.omega,
        index.params.s,
        index.params.seed,
        _RANGE_CODES[index.params.range_mode],
    )
    trailer = _INDEX_TRAILER.pack(
        index.build_stats.inner_products, index.build_stats.build_millis
    )
    with open(Path(path), "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())
        fh.write(trailer)


def load_index(path) -> RankTableIndex:
    """Read an index written by save_index; short or corrupt files raise."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _INDEX_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, m, tau, omega, s, seed, range_code = _INDEX_HEADER.unpack_from(raw)
    if magic != _INDEX_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, not a rank-table index")
    if version != _INDEX_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if range_code not in _CODE_RANGES:
        raise ValueError(f"{path}: unknown range mode code {range_code}")
    expected = index_file_size(n, tau)
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    records = np.frombuffer(
        raw, dtype="<f4", count=n * (2 + tau), offset=_INDEX_HEADER.size
    ).reshape(n, 2 + tau)
    inner_products, build_millis = _INDEX_TRAILER.unpack_from(raw, expected - _INDEX_TRAILER.size)
    params = BuildParams(tau=tau, omega=omega, s=s, seed=seed, range_mode=_CODE_RANGES[range_code])
    return RankTableIndex(
        n=n,
        m=m,
        tau=tau,
        t_min=records[:, 0].copy(),
        step=records[:, 1].copy(),
        cells=records[:, 2:].copy(),
        params=params,
        build_stats=BuildStats(inner_products=inner_products, build_millis=build_millis),
    )
