"""Revenue maximisation through discrete virtual values.

With types ``theta_0 < ... < theta_{K-1}``, pmf ``f`` and cdf ``F``, the
payment rule of :mod:`dataauction.mechanism` (lowest type pays nothing, each
step priced at the lower level) gives expected revenue
``sum_t f_t * phi_t * x_t`` with

    phi_0 = -theta_0 * (1 - F_0) / f_0
    phi_t = theta_t - (theta_t - theta_{t-1}) * (1 - F_{t-1}) / f_t,   t >= 1

so maximising welfare with ``phi`` as bids maximises revenue. Ironing
replaces ``phi`` by the slopes of the lower convex hull of its cumulative
sum in quantile space; the mechanism then receives equal bids on each ironed
interval, which keeps the identity exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mechanism import (MechanismOutcome, SolutionCache, coverage_curve, myerson_payment,
                        run_lprmono)
from .rounding import realized_coverages

ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TypeDistribution:
    support: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        p = np.asarray(self.pmf, dtype=float)
        if s.shape != p.shape or s.ndim != 1:
            raise ValueError("support and pmf must be 1-d of equal length")
        if np.any(np.diff(s) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(p <= 0):
            raise ValueError("every support point needs positive probability mass")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "pmf", p)

    @classmethod
    def uniform(cls, support):
        s = np.asarray(support, dtype=float)
        return cls(s, np.full(s.size, 1.0 / s.size))

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf)
        c[-1] = 1.0
        return c

    def sample(self, rng, size):
        return rng.choice(self.support, size=size, p=self.pmf)


@dataclass(frozen=True, eq=False)
class VirtualTypeTable:
    support: np.ndarray
    pmf: np.ndarray
    values: np.ndarray
    ironed: bool = False

    @property
    def excluded(self) -> int:
        """Index of the lowest type, which never receives an allocation."""
        return 0

    def lookup(self, theta) -> float:
        idx = np.flatnonzero(self.support == theta)
        if idx.size == 0:
            raise ValueError(f"{theta} is not a member of the type set")
        return float(self.values[idx[0]])

    def bid(self, theta) -> float:
        """Virtual bid submitted to the welfare LP: clamped at zero, lowest type excluded."""
        idx = int(np.flatnonzero(self.support == theta)[0])
        if idx == self.excluded:
            return 0.0
        return max(0.0, float(self.values[idx]))


def virtual_values(type_set, dist: TypeDistribution) -> VirtualTypeTable:
    theta = np.asarray(type_set, dtype=float)
    if theta.shape != dist.support.shape or np.any(theta != dist.support):
        raise ValueError("distribution support must equal the type set")
    f, F = dist.pmf, dist.cdf
    phi = np.empty_like(theta)
    phi[0] = -theta[0] * (1.0 - F[0]) / f[0]
    phi[1:] = theta[1:] - (theta[1:] - theta[:-1]) * (1.0 - F[:-1]) / f[1:]
    # cancellation noise would otherwise decide whether a zero-value type is served
    phi[np.abs(phi) < ZERO_TOL * max(1.0, float(theta[-1]))] = 0.0
    return VirtualTypeTable(theta, f, phi)


def iron_virtual_values(table: VirtualTypeTable) -> VirtualTypeTable:
    """Slopes of the lower convex hull of ``(F_t, sum_{s<=t} f_s phi_s)``."""
    f, phi = table.pmf, table.values
    if np.all(np.diff(phi) >= 0):
        return VirtualTypeTable(table.support, f, phi.copy(), ironed=True)
    q = np.concatenate(([0.0], np.cumsum(f)))
    h = np.concatenate(([0.0], np.cumsum(f * phi)))
    hull = [0]
    for k in range(1, q.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> k
            if (h[b] - h[a]) * (q[k] - q[a]) >= (h[k] - h[a]) * (q[b] - q[a]):
                hull.pop()
            else:
                break
        hull.append(k)
    out = phi.copy()
    for a, b in zip(hull[:-1], hull[1:]):
        if b - a > 1:
            out[a:b] = (h[b] - h[a]) / (q[b] - q[a])
    return VirtualTypeTable(table.support, f, out, ironed=True)


def ironed_tables(instance, dists=None) -> list:
    dists = dists if dists is not None else instance.distributions
    if dists is None or len(dists) != instance.m:
        raise ValueError("every bidder needs a type distribution over the type set")
    return [iron_virtual_values(virtual_values(instance.type_set, d)) for d in dists]


def virtual_bids(instance, tables) -> np.ndarray:
    return np.array([tables[i].bid(b) for i, b in enumerate(instance.bids)])


def run_revenue_auction(instance, dists, rng_seed: int, cache: SolutionCache = None,
                        tables=None) -> MechanismOutcome:
    """LPRMono on ironed virtual bids; payments from curves over the true type levels."""
    tables = tables if tables is not None else ironed_tables(instance, dists)
    vb = virtual_bids(instance, tables)
    cache = cache if cache is not None else SolutionCache(instance)
    curves = []
    for i in range(instance.m):
        mapped = [tables[i].bid(t) for t in instance.type_set]
        curves.append(coverage_curve(instance, i, cache, bids=vb, levels=mapped))
    payments = np.array([myerson_payment(c, instance.bids[i]) for i, c in enumerate(curves)])
    sol = cache(vb)
    res = run_lprmono(instance, rng_seed, solution=sol)
    realized = realized_coverages(res.allocation.assignment, instance.weights, instance.neighborhoods)[0]
    return MechanismOutcome(allocation=res.allocation, payments=payments,
                            expected_coverage=res.expected_coverage, realized_coverage=realized,
                            lp_objective=sol.objective, bids=np.array(instance.bids), rho=res.rho,
                            curves=tuple(curves))
