"""Truthful auctions for selling database coverage.

Bidders value a dataset by how much of the database it covers within
bidder-specific radii. The package solves the welfare LP relaxation, rounds
it, burns datasets to make the allocation monotone, and charges the matching
payments.
"""
from .baselines import (Greedy, MonotonicityReport, brute_force_welfare, greedy_allocate,
                        monotonicity_probe)
from .lp import (FractionalSolution, SetCoverageInstance, SolverError, lp_bidder_coverage,
                 solve_set_coverage_lp, solve_welfare_lp)
from .mechanism import (LPR, LPRMono, RATIO, CoverageCurve, MechanismError, MechanismOutcome,
                        SolutionCache, burn_probabilities, coverage_curve, expected_utility,
                        myerson_payment, run_auction, run_lprmono)
from .revenue import (TypeDistribution, VirtualTypeTable, iron_virtual_values, run_revenue_auction,
                      virtual_values)
from .rounding import (Allocation, expected_bidder_coverage, expected_bidder_coverages,
                       expected_point_coverage, round_allocation)
from .valuation import (BidderProfile, Database, Instance, ValuationError, build_neighborhoods,
                        coverage, normalize_weights, welfare)

__version__ = "0.1.0"
