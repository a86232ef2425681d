"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from emdkit.multiset import WeightedPointSet


def lp_transport_cost(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> float:
    """Independent transport LP oracle (HiGHS).

    Solves the inequality-constrained program directly: row sums <= supply,
    column sums <= demand, total flow = min(sum supply, sum demand).
    """
    n, m = cost.shape
    nv = n * m
    cols = np.arange(nv)
    rows_i = np.repeat(np.arange(n), m)
    a_row = sp.csr_matrix((np.ones(nv), (rows_i, cols)), shape=(n, nv))
    rows_j = np.tile(np.arange(m), n)
    a_col = sp.csr_matrix((np.ones(nv), (rows_j, cols)), shape=(m, nv))
    a_ub = sp.vstack([a_row, a_col])
    b_ub = np.concatenate([supply, demand])
    a_eq = sp.csr_matrix(np.ones((1, nv)))
    b_eq = np.array([min(supply.sum(), demand.sum())])
    res = linprog(cost.ravel(), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def lp_emd(a: WeightedPointSet, b: WeightedPointSet, distance) -> float:
    """LP oracle on two multisets with any pairwise ground distance."""
    if len(a) == 0 or len(b) == 0:
        return 0.0
    from emdkit.transport import _cost_matrix

    return lp_transport_cost(a.masses, b.masses, _cost_matrix(a, b, distance))


def random_multiset(rng: np.random.Generator, dim: int = 1, max_points: int = 8,
                    integer_masses: bool = False, coords: np.ndarray | None = None,
                    min_points: int = 1) -> WeightedPointSet:
    n = int(rng.integers(min_points, max_points + 1))
    if coords is not None:
        idx = rng.choice(len(coords), size=min(n, len(coords)), replace=False)
        pts = np.atleast_2d(np.asarray(coords, dtype=float))[idx]
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
    else:
        pts = rng.normal(size=(n, dim))
    if integer_masses:
        masses = rng.integers(1, 6, size=pts.shape[0]).astype(float)
    else:
        masses = rng.random(pts.shape[0]) + 0.05
    return WeightedPointSet(pts, masses)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_psd_gram(rng: np.random.Generator, n: int, unit_diagonal: bool = False) -> np.ndarray:
    f = rng.normal(size=(n, n + 2))
    g = f @ f.T
    if unit_diagonal:
        d = np.sqrt(np.diag(g))
        g = g / np.outer(d, d)
        # keep off-diagonals away from 1 so nested-transform bounds stay uniform
        g = 0.95 * g + 0.05 * np.eye(n)
    return g
