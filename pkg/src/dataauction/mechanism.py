"""Monotone rounding with data burning, and the increment-priced payment rule.

After rounding, bidder ``i`` keeps its dataset with probability
``rho_i = (1 - 1/e) * Cbar_i / E[C_i]`` and gets nothing otherwise, so its
expected coverage is exactly ``(1 - 1/e) * Cbar_i``. LP coverage is monotone
in the bidder's own bid, hence so is the mechanism, and the payment
``p(lambda_k) = sum_{t < k} lambda_t * (E_{t+1} - E_t)`` makes truthful
bidding a dominant strategy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._random import make_rng
from .lp import FractionalSolution, solve_welfare_lp
from .rounding import (Allocation, expected_bidder_coverages, realized_coverages,
                       sample_assignments)

RATIO = 1.0 - 1.0 / math.e
MONOTONE_TOL = 1e-6


class MechanismError(RuntimeError):
    """An internal invariant of the mechanism was violated."""


def burn_probabilities(sol: FractionalSolution, neighborhoods) -> np.ndarray:
    """Per-bidder survival probabilities ``rho``."""
    cbar = sol.bidder_coverage
    expected = expected_bidder_coverages(sol, neighborhoods)
    rho = np.zeros(sol.m)
    for i in range(sol.m):
        if cbar[i] <= 0:
            continue
        if expected[i] <= 0:
            raise MechanismError(f"bidder {i} has LP coverage {cbar[i]} but zero expected coverage")
        r = RATIO * cbar[i] / expected[i]
        if r > 1 + 1e-9:
            raise MechanismError(f"burn probability {r} for bidder {i} exceeds 1")
        rho[i] = min(r, 1.0)
    return rho


class SolutionCache:
    """Memo of LP solutions keyed by the full bid profile.

    Zero bidders are dropped from the LP so a zero bid always yields zero
    coverage.
    """

    def __init__(self, instance):
        self.instance = instance
        self._memo = {}

    def __call__(self, bids) -> FractionalSolution:
        key = tuple(float(b) for b in bids)
        sol = self._memo.get(key)
        if sol is None:
            sol = solve_welfare_lp(self.instance, bids=np.array(key), drop_zero_bids=True)
            self._memo[key] = sol
        return sol

    def __len__(self):
        return len(self._memo)


@dataclass(frozen=True, eq=False)
class LPRMonoResult:
    allocation: Allocation
    rounded: Allocation
    rho: np.ndarray
    expected_coverage: np.ndarray
    solution: FractionalSolution


def run_lprmono(instance, rng_seed: int, *, solution=None) -> LPRMonoResult:
    """Solve, round independently, then burn each bidder's dataset with probability ``1 - rho_i``.

    The reported expected coverage is the closed form ``(1 - 1/e) * Cbar_i``.
    """
    sol = solution if solution is not None else solve_welfare_lp(instance, drop_zero_bids=True)
    rho = burn_probabilities(sol, instance.neighborhoods)
    rounded = Allocation(sample_assignments(sol.X, make_rng(rng_seed, "rounding"), 1)[0], instance.m)
    keep = make_rng(rng_seed, "burning").random(instance.m) < rho
    return LPRMonoResult(allocation=rounded.burn(keep), rounded=rounded, rho=rho,
                         expected_coverage=RATIO * sol.bidder_coverage, solution=sol)


def sample_lprmono_coverages(instance, sol, rng_seed: int, trials: int) -> np.ndarray:
    """Realized coverages of ``trials`` independent LPRMono runs -> ``trials x m``."""
    rho = burn_probabilities(sol, instance.neighborhoods)
    owners = sample_assignments(sol.X, make_rng(rng_seed, "rounding", "batch"), trials)
    cov = realized_coverages(owners, instance.weights, instance.neighborhoods)
    keep = make_rng(rng_seed, "burning", "batch").random((trials, instance.m)) < rho
    return cov * keep


@dataclass(frozen=True, eq=False)
class CoverageCurve:
    """Expected coverage of one bidder at every level of the type set, others fixed.

    ``values[0]`` is the empty dataset; ``values[t + 1]`` is the expected
    coverage when bidding ``levels[t]``.
    """

    bidder: int
    levels: np.ndarray
    values: np.ndarray

    def at(self, bid) -> float:
        return float(self.values[_level_index(self.levels, bid) + 1])


def _level_index(levels, bid) -> int:
    idx = np.flatnonzero(levels == bid)
    if idx.size == 0:
        raise ValueError(f"bid {bid} is not a member of the type set")
    return int(idx[0])


def coverage_curve(instance, i: int, cache: SolutionCache = None, *, bids=None,
                   levels=None, check=True) -> CoverageCurve:
    """LPRMono expected coverage of bidder ``i`` at every bid level, ``b_-i`` fixed.

    ``levels`` defaults to the type set; ``bids`` overrides the fixed profile
    of the others (the revenue auction passes virtual bids here).
    """
    cache = cache if cache is not None else SolutionCache(instance)
    base = np.array(instance.bids if bids is None else bids, dtype=float)
    lev = np.asarray(instance.type_set if levels is None else levels, dtype=float)
    values = [0.0]
    for lam in lev:
        profile = base.copy()
        profile[i] = lam
        values.append(RATIO * cache(profile).bidder_coverage[i])
    values = np.array(values)
    if check and np.any(np.diff(values) < -MONOTONE_TOL):
        raise MechanismError(f"coverage curve of bidder {i} is not monotone: {values.tolist()}")
    return CoverageCurve(bidder=i, levels=np.asarray(instance.type_set, dtype=float), values=values)


def payment_schedule(curve: CoverageCurve) -> np.ndarray:
    """Payment at every level of the type set.

    The step from the empty dataset to the lowest level is free; every later
    step ``E(lambda_t) -> E(lambda_{t+1})`` is priced at ``lambda_t``.
    """
    lev = curve.levels
    steps = np.diff(curve.values[1:])
    return np.concatenate(([0.0], np.cumsum(lev[:-1] * steps)))


def myerson_payment(curve: CoverageCurve, bid) -> float:
    return float(payment_schedule(curve)[_level_index(curve.levels, bid)])


@dataclass(frozen=True, eq=False)
class MechanismOutcome:
    allocation: Allocation
    payments: np.ndarray
    expected_coverage: np.ndarray
    realized_coverage: np.ndarray
    lp_objective: float
    bids: np.ndarray
    rho: np.ndarray
    curves: tuple = field(default=(), repr=False)

    @property
    def revenue(self) -> float:
        return float(self.payments.sum())

    @property
    def expected_welfare(self) -> float:
        return float(self.bids @ self.expected_coverage)

    def to_dict(self) -> dict:
        return {
            "allocation": self.allocation.assignment.tolist(),
            "datasets": [d.tolist() for d in self.allocation.datasets()],
            "bids": self.bids.tolist(),
            "payments": self.payments.tolist(),
            "expected_coverage": self.expected_coverage.tolist(),
            "realized_coverage": self.realized_coverage.tolist(),
            "survival_probability": self.rho.tolist(),
            "lp_objective": self.lp_objective,
            "expected_welfare": self.expected_welfare,
            "revenue": self.revenue,
            "coverage_curves": [c.values.tolist() for c in self.curves],
        }


def run_auction(instance, rng_seed: int, cache: SolutionCache = None) -> MechanismOutcome:
    """Full truthful auction at the submitted bids: LPRMono allocation plus payments."""
    cache = cache if cache is not None else SolutionCache(instance)
    curves = tuple(coverage_curve(instance, i, cache) for i in range(instance.m))
    payments = np.array([myerson_payment(c, instance.bids[i]) for i, c in enumerate(curves)])
    sol = cache(instance.bids)
    res = run_lprmono(instance, rng_seed, solution=sol)
    realized = realized_coverages(res.allocation.assignment, instance.weights, instance.neighborhoods)[0]
    return MechanismOutcome(allocation=res.allocation, payments=payments,
                            expected_coverage=res.expected_coverage, realized_coverage=realized,
                            lp_objective=sol.objective, bids=np.array(instance.bids), rho=res.rho,
                            curves=curves)


def expected_utility(curve: CoverageCurve, true_type, bid) -> float:
    """``true_type * E[coverage at bid] - payment(bid)``."""
    return float(true_type * curve.at(bid) - myerson_payment(curve, bid))


class LPR:
    """Rounding without burning (not monotone); handle for probes and experiments."""

    name = "LPR"

    def realized_coverages(self, instance, trials, seed):
        sol = solve_welfare_lp(instance, drop_zero_bids=True)
        owners = sample_assignments(sol.X, make_rng(seed, "rounding", "batch"), trials)
        return realized_coverages(owners, instance.weights, instance.neighborhoods)

    def expected_coverage(self, instance):
        sol = solve_welfare_lp(instance, drop_zero_bids=True)
        return expected_bidder_coverages(sol, instance.neighborhoods)


class LPRMono:
    """Monotone rounding with burning; handle for probes and experiments."""

    name = "LPRMono"

    def realized_coverages(self, instance, trials, seed):
        sol = solve_welfare_lp(instance, drop_zero_bids=True)
        return sample_lprmono_coverages(instance, sol, seed, trials)

    def expected_coverage(self, instance):
        return RATIO * solve_welfare_lp(instance, drop_zero_bids=True).bidder_coverage
