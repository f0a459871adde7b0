"""Independent randomized rounding of a fractional assignment.

Each item is drawn independently: bidder ``i`` gets it with probability
``X[i, k]`` and it stays unassigned with the leftover mass. The draw is an
inverse-CDF lookup over bidders in index order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._random import make_rng
from .lp import FEAS_TOL, FractionalSolution

UNASSIGNED = -1
LOG_SPACE_THRESHOLD = 64


@dataclass(frozen=True, eq=False)
class Allocation:
    """Owner of each item (``-1`` for unassigned)."""

    assignment: np.ndarray
    n_bidders: int

    def __post_init__(self):
        a = np.array(self.assignment, dtype=int)
        if a.ndim != 1:
            raise ValueError("assignment must be 1-d")
        if np.any((a < UNASSIGNED) | (a >= self.n_bidders)):
            raise ValueError("assignment refers to an unknown bidder")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @classmethod
    def empty(cls, n_items, n_bidders):
        return cls(np.full(n_items, UNASSIGNED), n_bidders)

    @classmethod
    def from_sets(cls, datasets, n_items):
        """Build from one collection of item indices per bidder; overlaps are rejected."""
        datasets = list(datasets)
        a = np.full(n_items, UNASSIGNED)
        for i, ds in enumerate(datasets):
            for k in ds:
                k = int(k)
                if not 0 <= k < n_items:
                    raise ValueError(f"item index {k} out of range")
                if a[k] != UNASSIGNED:
                    raise ValueError(f"item {k} is assigned to bidders {a[k]} and {i}")
                a[k] = i
        return cls(a, len(datasets))

    def dataset(self, i) -> np.ndarray:
        return np.flatnonzero(self.assignment == i)

    def datasets(self) -> list:
        return [self.dataset(i) for i in range(self.n_bidders)]

    def burn(self, keep) -> "Allocation":
        """Return a copy where bidders with ``keep[i] == False`` lose everything."""
        a = np.array(self.assignment)
        owned = a >= 0
        drop = owned.copy()
        drop[owned] = ~np.asarray(keep, dtype=bool)[a[owned]]
        a[drop] = UNASSIGNED
        return Allocation(a, self.n_bidders)


def _check_probabilities(X):
    col = X.sum(axis=0)
    if np.any(X < 0) or np.any(col > 1 + FEAS_TOL):
        raise ValueError("fractional assignment is not a valid probability table")


def sample_assignments(X, rng, trials: int) -> np.ndarray:
    """Draw ``trials`` independent roundings; returns a ``trials x n_items`` int array."""
    X = np.asarray(X, dtype=float)
    _check_probabilities(X)
    m, n = X.shape
    cum = np.cumsum(X, axis=0)  # m x n
    u = rng.random((trials, n))
    owner = np.zeros((trials, n), dtype=np.int64)
    for i in range(m):
        owner += u >= cum[i]
    owner[owner == m] = UNASSIGNED
    return owner


def round_allocation(sol: FractionalSolution, rng_seed: int) -> Allocation:
    """One rounding of ``sol.X``; deterministic given the seed."""
    rng = make_rng(rng_seed, "rounding")
    return Allocation(sample_assignments(sol.X, rng, 1)[0], sol.m)


def expected_coverage_matrix(sol: FractionalSolution, neighborhoods) -> np.ndarray:
    """``E[C_ij] = 1 - prod_{k in N_i(j)} (1 - X_ik)`` for every bidder and element."""
    m = sol.m
    out = np.zeros(sol.C.shape)
    for i in range(m):
        mat = neighborhoods[i]
        sizes = np.diff(mat.indptr)
        miss = 1.0 - sol.X[i][mat.indices]
        nonempty = sizes > 0
        starts = mat.indptr[:-1][nonempty]
        prod = np.ones(mat.shape[0])
        if miss.size:
            direct = np.multiply.reduceat(miss, starts)
            with np.errstate(divide="ignore"):
                logs = np.add.reduceat(np.log(miss), starts)
            big = sizes[nonempty] > LOG_SPACE_THRESHOLD
            vals = np.where(big, np.exp(logs), direct)
            prod[nonempty] = vals
        out[i] = 1.0 - prod
    return np.clip(out, 0.0, 1.0)


def expected_point_coverage(sol: FractionalSolution, i: int, j: int, neighborhoods) -> float:
    mat = neighborhoods[i]
    nbrs = mat.indices[mat.indptr[j]:mat.indptr[j + 1]]
    miss = 1.0 - sol.X[i][nbrs]
    if nbrs.size > LOG_SPACE_THRESHOLD:
        with np.errstate(divide="ignore"):
            return float(1.0 - np.exp(np.log(miss).sum()))
    return float(1.0 - np.prod(miss))


def expected_bidder_coverage(sol: FractionalSolution, i: int, neighborhoods) -> float:
    return float(expected_bidder_coverages(sol, neighborhoods)[i])


def expected_bidder_coverages(sol: FractionalSolution, neighborhoods) -> np.ndarray:
    """Closed-form expected coverage of every bidder under independent rounding."""
    return np.einsum("ij,ij->i", sol.weights, expected_coverage_matrix(sol, neighborhoods))


def realized_coverages(owners: np.ndarray, weights, neighborhoods) -> np.ndarray:
    """Coverage of each bidder for a batch of assignments (``trials x items``) -> ``trials x m``."""
    owners = np.atleast_2d(owners)
    m = weights.shape[0]
    out = np.empty((owners.shape[0], m))
    for i in range(m):
        held = (owners == i).astype(np.float64)
        hits = (neighborhoods[i] @ held.T) > 0  # elements x trials
        out[:, i] = weights[i] @ hits
    return out
