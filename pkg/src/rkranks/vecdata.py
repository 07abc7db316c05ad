"""Vector storage, ingestion, synthetic generation, norms, and inner products."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROLE_USERS = "users"
ROLE_ITEMS = "items"
ROLES = (ROLE_USERS, ROLE_ITEMS)

PROFILE_GAUSSIAN = "gaussian"
PROFILE_UNIFORM = "uniform"
PROFILES = (PROFILE_GAUSSIAN, PROFILE_UNIFORM)

FORMAT_BINARY = "binary"
FORMAT_CSV = "csv"
FORMATS = (FORMAT_BINARY, FORMAT_CSV)

_MAGIC = b"RKV1"
_ROLE_CODES = {ROLE_USERS: 0, ROLE_ITEMS: 1}
_CODE_ROLES = {code: role for role, code in _ROLE_CODES.items()}
_HEADER = struct.Struct("<4sBQI")


@dataclass
class VectorSet:
    """Dense float32 vectors with unique 64-bit ids.

    ``data`` is a row-major (count, dim) matrix; every row must be finite
    and ids must be unique. Instances are treated as immutable after
    construction, which makes them safe for concurrent reads.
    """

    role: str
    data: np.ndarray
    ids: np.ndarray

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}, expected one of {ROLES}")
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError("data must be a 2-D (count, dim) matrix")
        count, dim = data.shape
        if count < 1 or dim < 1:
            raise ValueError(f"need count >= 1 and dim >= 1, got {count}x{dim}")
        finite = np.isfinite(data).all(axis=1)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise ValueError(f"row {bad} contains a non-finite value")
        ids = np.ascontiguousarray(self.ids, dtype=np.uint64)
        if ids.shape != (count,):
            raise ValueError(f"ids must be a flat array of length {count}")
        if np.unique(ids).size != count:
            raise ValueError("ids must be unique within the set")
        self.data = data
        self.ids = ids

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class NormTable:
    """Euclidean norms plus the permutation sorting them in descending order."""

    norms: np.ndarray  # float64, length count
    order: np.ndarray  # int64 permutation of [0, count)


def row_inner_products(rows: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Inner product of each row with ``vec``, accumulated in float64.

    Every rank comparison in this package funnels through this one routine:
    einsum's per-row accumulation order depends only on the vector length,
    so the same (row, vec) pair yields the same float no matter which batch
    it was evaluated in. Strict-inequality counts therefore agree exactly
    between the brute-force scan and the sampled estimator.
    """
    r = np.ascontiguousarray(rows, dtype=np.float64)
    v = np.ascontiguousarray(vec, dtype=np.float64)
    if r.ndim != 2 or v.ndim != 1:
        raise ValueError("expected a (count, dim) matrix and a (dim,) vector")
    if r.shape[1] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: rows have dim {r.shape[1]}, vector has dim {v.shape[0]}"
        )
    return np.einsum("ij,j->i", r, v)


def inner_product(u, p) -> float:
    """Inner product of two equal-length vectors, accumulated in float64."""
    u = np.asarray(u, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if u.ndim != 1 or p.ndim != 1 or u.shape != p.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {p.shape}")
    return float(row_inner_products(u[np.newaxis, :], p)[0])


def compute_norms(vs: VectorSet) -> NormTable:
    """Per-row Euclidean norms and the descending-norm permutation.

    The sort is stable with ties broken by ascending id, so repeated builds
    on the same data always see the same item order.
    """
    data = vs.data.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", data, data))
    order = np.lexsort((vs.ids, -norms)).astype(np.int64)
    return NormTable(norms=norms, order=order)


def generate_synthetic(
    count: int,
    dim: int,
    seed: int,
    norm_profile: str = PROFILE_GAUSSIAN,
    role: str = ROLE_ITEMS,
) -> VectorSet:
    """Seeded synthetic vectors with ids 0..count-1.

    The gaussian profile draws components i.i.d. standard normal, which
    concentrates the norm distribution the way trained embeddings tend to;
    uniform draws components i.i.d. on [-1, 1].
    """
    if count < 1 or dim < 1:
        raise ValueError(f"need count >= 1 and dim >= 1, got {count}x{dim}")
    rng = np.random.default_rng(seed)
    if norm_profile == PROFILE_GAUSSIAN:
        data = rng.standard_normal((count, dim), dtype=np.float32)
    elif norm_profile == PROFILE_UNIFORM:
        data = rng.random((count, dim), dtype=np.float32) * np.float32(2) - np.float32(1)
    else:
        raise ValueError(f"unknown norm profile {norm_profile!r}, expected one of {PROFILES}")
    ids = np.arange(count, dtype=np.uint64)
    return VectorSet(role=role, data=data, ids=ids)


def save_vectors(vs: VectorSet, path, fmt: str = FORMAT_BINARY) -> None:
    """Write a vector set; the binary format round-trips bitwise."""
    path = Path(path)
    if fmt == FORMAT_BINARY:
        header = _HEADER.pack(_MAGIC, _ROLE_CODES[vs.role], vs.count, vs.dim)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(vs.ids.astype("<u8", copy=False).tobytes())
            fh.write(vs.data.astype("<f4", copy=False).tobytes())
    elif fmt == FORMAT_CSV:
        with open(path, "w", encoding="ascii") as fh:
            for uid, row in zip(vs.ids, vs.data):
                fh.write(str(int(uid)))
                fh.write(",")
                fh.write(",".join(repr(float(x)) for x in row))
                fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")


def load_vectors(path, fmt: str = FORMAT_BINARY, role: str | None = None) -> VectorSet:
    """Read a vector set written by :func:`save_vectors`.

    For the binary format the role is stored in the file; passing ``role``
    asserts it matches. CSV carries no role, so ``role`` is required there.
    Malformed headers, short files, row-length mismatches and non-finite
    values all raise with the offending row named where applicable.
    """
    path = Path(path)
    if fmt == FORMAT_BINARY:
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, role_code, count, dim = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, not a vector file")
        if role_code not in _CODE_ROLES:
            raise ValueError(f"{path}: unknown role code {role_code}")
        file_role = _CODE_ROLES[role_code]
        if role is not None and role != file_role:
            raise ValueError(f"{path}: file holds {file_role} vectors, expected {role}")
        expected = _HEADER.size + 8 * count + 4 * count * dim
        if len(raw) != expected:
            raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
        ids = np.frombuffer(raw, dtype="<u8", count=count, offset=_HEADER.size)
        data = np.frombuffer(
            raw, dtype="<f4", count=count * dim, offset=_HEADER.size + 8 * count
        ).reshape(count, dim)
        return VectorSet(role=file_role, data=data.copy(), ids=ids.copy())
    if fmt == FORMAT_CSV:
        if role is None:
            raise ValueError("role is required when loading csv vectors")
        ids: list[int] = []
        rows: list[list[float]] = []
        dim = None
        with open(path, "r", encoding="ascii") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                fields = line.split(",")
                if dim is None:
                    dim = len(fields) - 1
                    if dim < 1:
                        raise ValueError(f"{path}: row 0 has no vector components")
                if len(fields) != dim + 1:
                    raise ValueError(
                        f"{path}: row {i} has {len(fields) - 1} values, expected {dim}"
                    )
                try:
                    ids.append(int(fields[0]))
                    rows.append([float(x) for x in fields[1:]])
                except ValueError as exc:
                    raise ValueError(f"{path}: row {i}: {exc}") from None
        if not rows:
            raise ValueError(f"{path}: no vectors found")
        data = np.array(rows, dtype=np.float32)
        finite = np.isfinite(data).all(axis=1)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise ValueError(f"{path}: row {bad} contains a non-finite value")
        return VectorSet(role=role, data=data, ids=np.array(ids, dtype=np.uint64))
    raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
