"""Shared helpers for the test suite."""

import numpy as np
import pytest

from rkranks import VectorSet, row_inner_products


def make_set(rows, role="items", ids=None):
    """VectorSet from a plain list of rows, ids defaulting to 0..count-1."""
    data = np.array(rows, dtype=np.float32)
    if ids is None:
        ids = np.arange(data.shape[0], dtype=np.uint64)
    return VectorSet(role=role, data=data, ids=np.asarray(ids, dtype=np.uint64))


def definition_rank_table(users, items, index):
    """Rank table computed straight from the definition, no sampling machinery.

    For every user row and threshold column: one plus the number of items
    whose score strictly exceeds the threshold. Serves as the independent
    oracle for the sampled estimator.
    """
    table = np.empty((users.count, index.tau), dtype=np.float64)
    for i in range(users.count):
        thresholds = index.row(i).thresholds()
        products = row_inner_products(items.data, users.data[i])
        table[i] = 1 + (products[:, None] > thresholds[None, :]).sum(axis=0)
    return table


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
