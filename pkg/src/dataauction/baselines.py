"""Reference allocators and the empirical monotonicity probe."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from ._random import make_rng
from .rounding import UNASSIGNED, Allocation, realized_coverages

BRUTE_FORCE_CAP = 10 ** 7
TIE_TOL = 1e-12


def greedy_allocate(instance, order=None, tie_break: str = "last") -> Allocation:
    """Give each point, in ``order``, to the bidder with the largest marginal value.

    Marginal value is ``bid_i * (coverage gain)``. Gains within ``1e-12`` of
    the maximum tie; ``tie_break`` picks the highest (``"last"``) or lowest
    (``"first"``) tied bidder index. Every point is assigned.
    """
    if tie_break not in ("first", "last"):
        raise ValueError("tie_break must be 'first' or 'last'")
    n, m = instance.n, instance.m
    order = np.arange(n) if order is None else np.asarray(order, dtype=int)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the point indices")
    nbr_t = [mat.T.tocsr() for mat in instance.neighborhoods]  # column j' -> points it covers
    covered = np.zeros((m, n), dtype=bool)
    owner = np.full(n, UNASSIGNED)
    for j in order:
        gains = np.empty(m)
        for i in range(m):
            mat = nbr_t[i]
            reach = mat.indices[mat.indptr[j]:mat.indptr[j + 1]]
            fresh = reach[~covered[i, reach]]
            gains[i] = instance.bids[i] * instance.weights[i, fresh].sum()
        best = gains.max()
        tied = np.flatnonzero(gains >= best - TIE_TOL)
        winner = int(tied[-1] if tie_break == "last" else tied[0])
        owner[j] = winner
        mat = nbr_t[winner]
        covered[winner, mat.indices[mat.indptr[j]:mat.indptr[j + 1]]] = True
    return Allocation(owner, m)


def subset_coverage_table(instance, i) -> np.ndarray:
    """Coverage of bidder ``i`` for every subset of points, indexed by bitmask."""
    n = instance.n
    mat = instance.neighborhoods[i]
    # bitmask of points able to cover each point j
    cover_mask = np.array([sum(1 << int(k) for k in mat.indices[mat.indptr[j]:mat.indptr[j + 1]])
                           for j in range(n)], dtype=np.int64)
    masks = np.arange(1 << n, dtype=np.int64)
    table = np.zeros(1 << n)
    for j in range(n):
        table += instance.weights[i, j] * ((masks & cover_mask[j]) != 0)
    return table


def brute_force_welfare(instance, cap: int = BRUTE_FORCE_CAP):
    """Exact optimum by enumerating every map of points to ``{unassigned, bidder 0..m-1}``.

    Returns ``(allocation, welfare)``; ties go to the lexicographically first
    assignment tuple with codes ``0 = unassigned, 1..m = bidders``.
    """
    n, m = instance.n, instance.m
    total = (m + 1) ** n
    if total > cap:
        raise ValueError(f"{total} assignments exceed the brute-force cap of {cap}; "
                         "use the LP objective as an upper bound instead")
    tables = [subset_coverage_table(instance, i) for i in range(m)]
    best_val, best_code = -math.inf, 0
    chunk = 1 << 16
    powers = (m + 1) ** np.arange(n - 1, -1, -1, dtype=np.int64)  # point 0 most significant
    bits = (1 << np.arange(n, dtype=np.int64))
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (codes[:, None] // powers[None, :]) % (m + 1)
        val = np.zeros(codes.size)
        for i in range(m):
            mask = ((digits == i + 1) * bits).sum(axis=1)
            val += instance.bids[i] * tables[i][mask]
        k = int(np.argmax(val))
        if val[k] > best_val + TIE_TOL:
            best_val, best_code = float(val[k]), int(codes[k])
    digits = (best_code // powers) % (m + 1)
    alloc = Allocation(digits.astype(int) - 1, m)
    return alloc, max(best_val, 0.0)


class Greedy:
    """Deterministic greedy as a mechanism handle for the probe."""

    name = "Greedy"

    def __init__(self, order=None, tie_break="last"):
        self.order = order
        self.tie_break = tie_break

    def allocate(self, instance):
        return greedy_allocate(instance, self.order, self.tie_break)

    def realized_coverages(self, instance, trials, seed):
        alloc = self.allocate(instance)
        cov = realized_coverages(alloc.assignment, instance.weights, instance.neighborhoods)
        return np.repeat(cov, trials, axis=0)

    def expected_coverage(self, instance):
        alloc = self.allocate(instance)
        return realized_coverages(alloc.assignment, instance.weights, instance.neighborhoods)[0]


@dataclass
class MonotonicityReport:
    mechanism: str
    bidder: int
    bid_high: float
    bid_low: float
    estimate_high: float
    estimate_low: float
    trials: int
    epsilon: float
    confidence: float
    verdict: str
    exact_high: Optional[float] = None
    exact_low: Optional[float] = None

    @property
    def violation(self) -> bool:
        return self.verdict == "violation-at-confidence"

    def to_dict(self):
        return asdict(self)


def hoeffding_confidence(trials: int, epsilon: float) -> float:
    """Probability that a mean of ``trials`` [0, 1] draws is within ``epsilon`` of its expectation."""
    return max(0.0, 1.0 - 2.0 * math.exp(-2.0 * trials * epsilon ** 2))


def monotonicity_probe(mechanism, instance, bidder: int, bids, trials: int = 150_000,
                       epsilon: float = 0.01, seed: int = 0) -> MonotonicityReport:
    """Estimate expected coverage of ``bidder`` at two bids and test for a violation.

    A violation is declared when the higher bid's estimate plus ``epsilon`` is
    still below the lower bid's estimate minus ``epsilon``.
    """
    if trials < 1 or epsilon <= 0:
        raise ValueError("need trials >= 1 and epsilon > 0")
    hi, lo = sorted((float(b) for b in bids), reverse=True)
    estimates, exact = [], []
    for label, b in (("high", hi), ("low", lo)):
        inst = instance.with_bid(bidder, b)
        cov = mechanism.realized_coverages(inst, trials, _probe_seed(seed, label))[:, bidder]
        estimates.append(float(cov.mean()))
        exp_fn = getattr(mechanism, "expected_coverage", None)
        exact.append(float(exp_fn(inst)[bidder]) if exp_fn is not None else None)
    bad = estimates[0] + epsilon < estimates[1] - epsilon
    return MonotonicityReport(
        mechanism=getattr(mechanism, "name", type(mechanism).__name__), bidder=bidder,
        bid_high=hi, bid_low=lo, estimate_high=estimates[0], estimate_low=estimates[1],
        trials=trials, epsilon=epsilon, confidence=hoeffding_confidence(trials, epsilon),
        verdict="violation-at-confidence" if bad else "consistent",
        exact_high=exact[0], exact_low=exact[1])


def _probe_seed(seed, label):
    return int(make_rng(seed, "probe", label).integers(0, 2 ** 63 - 1))

