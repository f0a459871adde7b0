"""Database, bidder parameters and the coverage valuation.

Bidders are indexed ``0..m-1`` and points ``0..n-1`` throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

METRICS = ("euclidean", "cosine")


class ValuationError(ValueError):
    """Raised for malformed inputs to the valuation model."""


def normalize_weights(raw_weights) -> np.ndarray:
    """Rescale non-negative weights so they sum to one."""
    w = np.asarray(raw_weights, dtype=float)
    if w.ndim != 1:
        raise ValuationError("weights must be a 1-d vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValuationError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValuationError("bidder has no interest in database: all weights are zero")
    return w / total


@dataclass(frozen=True, eq=False)
class Database:
    """``n`` points of dimension ``d`` plus an optional class label per point.

    ``metric="cosine"`` turns cosine similarity into the distance
    ``1 - similarity`` so that a single ``d <= r`` test covers both cases.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    metric: str = "euclidean"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValuationError(f"points must form an n x d array with n, d >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValuationError("points contain non-finite coordinates")
        if self.metric not in METRICS:
            raise ValuationError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (pts.shape[0],):
                raise ValuationError("labels must have one entry per point")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def distances(self) -> np.ndarray:
        """Dense ``n x n`` distance matrix, computed once."""
        if self.metric == "euclidean":
            dist = cdist(self.points, self.points, metric="euclidean")
        else:
            norms = np.linalg.norm(self.points, axis=1)
            if np.any(norms == 0):
                raise ValuationError("cosine metric is undefined for zero vectors")
            unit = self.points / norms[:, None]
            dist = 1.0 - np.clip(unit @ unit.T, -1.0, 1.0)
            dist = 0.5 * (dist + dist.T)
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)
        return dist

    def class_indices(self) -> dict:
        """Map each class label to the sorted indices of its points (one class if unlabelled)."""
        if self.labels is None:
            return {None: np.arange(self.n)}
        out = {}
        for lab in dict.fromkeys(self.labels.tolist()):
            out[lab] = np.flatnonzero(self.labels == lab)
        return out


@dataclass(frozen=True, eq=False)
class BidderProfile:
    """Public weights and radii of one bidder, plus the private true type."""

    weights: np.ndarray
    radii: np.ndarray
    true_type: float = 0.0

    def __post_init__(self):
        w = normalize_weights(self.weights)
        r = np.array(self.radii, dtype=float)
        if r.shape != w.shape:
            raise ValuationError("weights and radii must have the same length")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValuationError("radii must be finite and non-negative")
        w.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "true_type", float(self.true_type))


def build_neighborhoods(db: Database, bidders: Sequence[BidderProfile]) -> list:
    """Return one sparse 0/1 matrix per bidder with ``A[j, j'] = 1`` iff ``d(j, j') <= r_ij``.

    Row ``j`` of bidder ``i``'s matrix is the neighbourhood ``N_i(j)``. The
    comparison is exact, so points at exactly the radius count as covered.
    """
    dist = db.distances
    out = []
    for b in bidders:
        if b.radii.shape != (db.n,):
            raise ValuationError("bidder radii do not match the database size")
        mask = dist <= b.radii[:, None]
        mat = sparse.csr_matrix(mask, dtype=np.int8)
        mat.sort_indices()
        out.append(mat)
    return out


def neighborhood(neighborhoods, i: int, j: int) -> np.ndarray:
    """Indices of ``N_i(j)``."""
    mat = neighborhoods[i]
    return mat.indices[mat.indptr[j]:mat.indptr[j + 1]].copy()


@dataclass(frozen=True, eq=False)
class Instance:
    """A full auction problem: the database with its bidders, plus the public type set and bids."""

    database: Database
    bidders: tuple
    type_set: np.ndarray
    bids: np.ndarray
    distributions: Optional[tuple] = None
    seed: int = 0
    _neighborhoods: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        bidders = tuple(self.bidders)
        if len(bidders) < 1:
            raise ValuationError("an instance needs at least one bidder")
        for b in bidders:
            if b.weights.shape != (self.database.n,):
                raise ValuationError("bidder weights do not match the database size")
        lam = np.array(self.type_set, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValuationError("type set must be a non-empty 1-d list")
        if np.any(lam < 0) or np.any(np.diff(lam) <= 0):
            raise ValuationError("type set must be non-negative and strictly increasing")
        bids = np.array(self.bids, dtype=float)
        if bids.shape != (len(bidders),):
            raise ValuationError("need exactly one bid per bidder")
        if not np.all(np.isin(bids, lam)):
            raise ValuationError(f"every bid must be a member of the type set; got {bids.tolist()}")
        types = np.array([b.true_type for b in bidders])
        if not np.all(np.isin(types, lam)):
            raise ValuationError("every true type must be a member of the type set")
        lam.setflags(write=False)
        bids.setflags(write=False)
        object.__setattr__(self, "bidders", bidders)
        object.__setattr__(self, "type_set", lam)
        object.__setattr__(self, "bids", bids)
        if self.distributions is not None:
            object.__setattr__(self, "distributions", tuple(self.distributions))

    @property
    def m(self) -> int:
        return len(self.bidders)

    @property
    def n(self) -> int:
        return self.database.n

    @cached_property
    def weights(self) -> np.ndarray:
        return np.vstack([b.weights for b in self.bidders])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.vstack([b.radii for b in self.bidders])

    @property
    def true_types(self) -> np.ndarray:
        return np.array([b.true_type for b in self.bidders])

    @property
    def neighborhoods(self) -> list:
        if self._neighborhoods is None:
            object.__setattr__(self, "_neighborhoods", build_neighborhoods(self.database, self.bidders))
        return self._neighborhoods

    def type_index(self, value: float) -> int:
        idx = np.flatnonzero(self.type_set == value)
        if idx.size == 0:
            raise ValuationError(f"{value} is not a member of the type set")
        return int(idx[0])

    def with_bids(self, bids) -> "Instance":
        """Same instance under another bid profile; neighbourhoods are shared."""
        return Instance(self.database, self.bidders, self.type_set, bids,
                        self.distributions, self.seed, self._neighborhoods)

    def with_bid(self, i: int, value: float) -> "Instance":
        bids = np.array(self.bids, dtype=float)
        bids[i] = value
        return self.with_bids(bids)

    def truthful(self) -> "Instance":
        return self.with_bids(self.true_types)


def _as_index_array(dataset, n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(x) for x in dataset)), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValuationError(f"dataset indices out of range [0, {n})")
    return idx


def covered_points(instance: Instance, i: int, dataset) -> np.ndarray:
    """Boolean mask of the points covered for bidder ``i`` by ``dataset``."""
    idx = _as_index_array(dataset, instance.n)
    held = np.zeros(instance.n, dtype=np.int8)
    held[idx] = 1
    return (instance.neighborhoods[i] @ held) > 0


def coverage(instance: Instance, i: int, dataset) -> float:
    """Weighted fraction of points with an allocated point inside their radius."""
    if not 0 <= i < instance.m:
        raise ValuationError(f"bidder index {i} out of range")
    return float(instance.weights[i] @ covered_points(instance, i, dataset))


def welfare(instance: Instance, allocation) -> float:
    """Sum over bidders of bid times coverage of the assigned dataset."""
    from .rounding import Allocation

    if not isinstance(allocation, Allocation):
        allocation = Allocation.from_sets(allocation, instance.n)
    if allocation.n_bidders > instance.m or allocation.assignment.shape != (instance.n,):
        raise ValuationError("allocation does not match the instance")
    return float(sum(instance.bids[i] * coverage(instance, i, allocation.dataset(i))
                     for i in range(instance.m)))
