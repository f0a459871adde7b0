import math

import numpy as np
import pytest

from dataauction import (Allocation, coverage, expected_bidder_coverage, expected_bidder_coverages,
                         expected_point_coverage, round_allocation, solve_welfare_lp)
from dataauction._random import make_rng
from dataauction.lp import FractionalSolution
from dataauction.rounding import realized_coverages, sample_assignments
from dataauction.valuation import BidderProfile, Database, build_neighborhoods

from conftest import clique_instance, random_instance

RATIO = 1 - 1 / math.e


def make_solution(X, weights):
    X = np.asarray(X, dtype=float)
    return FractionalSolution(X=X, C=np.ones_like(weights), weights=weights,
                              bids=np.ones(X.shape[0]), objective=0.0)


def test_integral_solution_rounds_exactly():
    X = np.array([[1, 0, 0, 1], [0, 1, 0, 0]], dtype=float)
    sol = make_solution(X, np.full((2, 4), 0.25))
    for seed in range(20):
        assert round_allocation(sol, seed).assignment.tolist() == [0, 1, -1, 0]


def test_zero_solution_rounds_to_empty():
    sol = make_solution(np.zeros((3, 5)), np.full((3, 5), 0.2))
    assert np.all(round_allocation(sol, 11).assignment == -1)


def test_rounding_rejects_overfull_columns():
    sol = make_solution(np.array([[0.7], [0.4]]), np.ones((2, 1)))
    with pytest.raises(ValueError):
        round_allocation(sol, 0)


def test_seed_determinism():
    sol = make_solution(np.full((2, 6), 0.4), np.full((2, 6), 1 / 6))
    a = [round_allocation(sol, 5).assignment.tolist() for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_marginals_and_independence():
    X = np.array([[0.5, 0.2, 0.0], [0.5, 0.3, 0.9]])
    owners = sample_assignments(X, make_rng(0, "test"), 150_000)
    for i in range(2):
        np.testing.assert_allclose((owners == i).mean(axis=0), X[i], atol=0.01)
    np.testing.assert_allclose((owners == -1).mean(axis=0), 1 - X.sum(axis=0), atol=0.01)
    a = (owners[:, 0] == 0).astype(float)
    b = (owners[:, 1] == 1).astype(float)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 4 / math.sqrt(150_000)


def test_point_coverage_closed_form(clique):
    sol = make_solution(np.full((2, 3), 0.5), clique.weights)
    nb = clique.neighborhoods
    assert expected_point_coverage(sol, 0, 0, nb) == pytest.approx(0.875)
    assert expected_bidder_coverage(sol, 0, nb) == pytest.approx(0.875)
    assert expected_bidder_coverage(sol, 1, nb) == pytest.approx(0.875)
    sure = make_solution(np.array([[1.0, 0, 0], [0, 0, 0]]), clique.weights)
    assert expected_point_coverage(sure, 0, 2, nb) == 1.0
    assert expected_point_coverage(sure, 1, 2, nb) == 0.0


def test_log_space_branch_matches_direct_product():
    n = 100
    rng = np.random.default_rng(0)
    db = Database(rng.uniform(size=(n, 1)))
    bidder = BidderProfile(np.ones(n), np.full(n, 10.0))
    nb = build_neighborhoods(db, [bidder])
    X = rng.uniform(0, 0.05, size=(1, n))
    sol = make_solution(X, bidder.weights[None, :])
    direct = 1 - np.prod(1 - X[0])
    assert expected_point_coverage(sol, 0, 3, nb) == pytest.approx(direct, rel=1e-12)
    assert expected_bidder_coverages(sol, nb)[0] == pytest.approx(direct, rel=1e-12)


def test_integral_expectation_equals_realized():
    inst = random_instance(np.random.default_rng(4), n=6, m=2)
    X = np.zeros((2, 6))
    X[0, [0, 3]] = 1
    X[1, [1, 5]] = 1
    sol = make_solution(X, inst.weights)
    exp = expected_bidder_coverages(sol, inst.neighborhoods)
    assert exp[0] == pytest.approx(coverage(inst, 0, {0, 3}))
    assert exp[1] == pytest.approx(coverage(inst, 1, {1, 5}))


@pytest.mark.parametrize("seed", range(8))
def test_closed_form_matches_monte_carlo(seed):
    inst = random_instance(np.random.default_rng(500 + seed), n=6, m=3)
    rng = np.random.default_rng(seed)
    X = rng.dirichlet(np.ones(4), size=6).T[:3]  # columns sum below 1
    sol = make_solution(X, inst.weights)
    exp = expected_bidder_coverages(sol, inst.neighborhoods)
    cov = realized_coverages(sample_assignments(X, make_rng(seed, "mc"), 150_000), inst.weights, inst.neighborhoods)
    se = cov.std(axis=0, ddof=1) / math.sqrt(150_000)
    # 24 comparisons in this family, so 4 standard errors per comparison
    assert np.all(np.abs(cov.mean(axis=0) - exp) <= 4 * se + 1e-12)


def test_exp_lower_bound_grid():
    x = np.linspace(0, 1, 10_001)
    assert np.all(1 - np.exp(-x) - RATIO * x >= -1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_rounding_guarantee_per_bidder(seed):
    inst = random_instance(np.random.default_rng(700 + seed))
    sol = solve_welfare_lp(inst)
    exp = expected_bidder_coverages(sol, inst.neighborhoods)
    assert np.all(exp >= RATIO * sol.bidder_coverage - 1e-9)
    assert inst.bids @ exp >= RATIO * sol.objective - 1e-9


def test_allocation_helpers():
    a = Allocation.from_sets([{0, 2}, {1}], 4)
    assert a.assignment.tolist() == [0, 1, 0, -1]
    assert a.burn([False, True]).assignment.tolist() == [-1, 1, -1, -1]
    with pytest.raises(ValueError):
        Allocation([0, 3], 2)
