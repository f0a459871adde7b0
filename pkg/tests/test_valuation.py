import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dataauction import (BidderProfile, Database, Instance, ValuationError, build_neighborhoods,
                         coverage, normalize_weights, welfare)
from dataauction.rounding import Allocation
from dataauction.valuation import neighborhood

from conftest import line_instance


def naive_coverage(points, weights, radii, dataset):
    """Direct double loop over the definition."""
    total = 0.0
    for j, xj in enumerate(points):
        if any(math.dist(xj, points[k]) <= radii[j] for k in dataset):
            total += weights[j]
    return total


def test_normalize_weights():
    np.testing.assert_allclose(normalize_weights([1, 1, 1]), [1 / 3] * 3)
    assert normalize_weights([2, 0, 0]).tolist() == [1.0, 0.0, 0.0]
    with pytest.raises(ValuationError, match="no interest"):
        normalize_weights([0, 0])
    with pytest.raises(ValuationError):
        normalize_weights([1, -1])


def test_normalized_sum_is_one():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = normalize_weights(rng.uniform(0, 5, size=rng.integers(1, 40)))
        assert abs(w.sum() - 1) <= 1e-12


def test_line_neighborhoods(line):
    assert [neighborhood(line.neighborhoods, 0, j).tolist() for j in range(3)] == [[0, 1], [0, 1, 2], [1, 2]]


def test_zero_and_full_radius():
    db = Database(np.random.default_rng(0).uniform(size=(6, 3)))
    zero = BidderProfile(np.ones(6), np.zeros(6))
    full = BidderProfile(np.ones(6), np.full(6, db.distances.max()))
    nb = build_neighborhoods(db, [zero, full])
    for j in range(6):
        assert neighborhood(nb, 0, j).tolist() == [j]
        assert neighborhood(nb, 1, j).tolist() == list(range(6))


def test_boundary_distance_counts_as_covered():
    db = Database([[0.0], [0.5]])
    nb = build_neighborhoods(db, [BidderProfile([1, 1], [0.5, 0.4999999999])])
    assert neighborhood(nb, 0, 0).tolist() == [0, 1]
    assert neighborhood(nb, 0, 1).tolist() == [1]


def test_coverage_examples(line):
    assert coverage(line, 0, {0}) == pytest.approx(2 / 3)
    assert coverage(line, 0, set()) == 0
    assert coverage(line, 1, {0, 1, 2}) == pytest.approx(1.0)
    with pytest.raises(ValuationError):
        coverage(line, 0, {3})


def test_welfare_matches_enumeration():
    inst = line_instance()
    pts = [[0.0], [1.0], [2.0]]
    best = 0.0
    # oracle: all 4^3 maps of points to {unallocated, bidder 0, 1, 2}
    for owners in itertools.product(range(-1, 3), repeat=3):
        val = sum(b * naive_coverage(pts, [1 / 3] * 3, [1, 1, 1], [k for k in range(3) if owners[k] == i])
                  for i, b in enumerate(inst.bids))
        best = max(best, val)
    assert best == pytest.approx(11 / 6, abs=1e-12)
    alloc = Allocation.from_sets([{1}, {0}, {2}], 3)
    assert welfare(inst, alloc) == pytest.approx(best, abs=1e-12)
    assert welfare(inst, Allocation.empty(3, 3)) == 0


def test_welfare_single_bidder_full():
    db = Database(np.random.default_rng(1).uniform(size=(4, 2)))
    inst = Instance(db, (BidderProfile(np.ones(4), np.zeros(4), 0.5),), [0.5], [0.5])
    assert welfare(inst, [range(4)]) == pytest.approx(0.5)


def test_overlapping_allocation_rejected(line):
    with pytest.raises(ValueError, match="assigned to bidders"):
        welfare(line, [{0, 1}, {1}, set()])


def test_instance_validation():
    db = Database([[0.0], [1.0]])
    b = BidderProfile([1, 1], [0, 0], 0.5)
    with pytest.raises(ValuationError):
        Instance(db, (b,), [0.5, 0.2], [0.5])
    with pytest.raises(ValuationError):
        Instance(db, (b,), [0.2, 0.5], [0.3])
    with pytest.raises(ValuationError):
        Instance(db, (), [0.5], [])
    with pytest.raises(ValuationError):
        Database(np.zeros((0, 2)))


def test_cosine_metric_is_one_minus_similarity():
    db = Database([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]], metric="cosine")
    d = db.distances
    assert d[0, 1] == pytest.approx(1.0)
    assert d[0, 2] == pytest.approx(1 - 1 / math.sqrt(2))
    assert np.all(np.diag(d) == 0) and np.allclose(d, d.T)


@st.composite
def small_case(draw):
    n = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(n, 2))
    w = rng.uniform(size=n) + 1e-3
    r = rng.uniform(0, 0.8, size=n)
    inst = Instance(Database(pts), (BidderProfile(w, r, 1.0),), [1.0], [1.0])
    d2 = draw(st.sets(st.integers(0, n - 1)))
    d1 = draw(st.sets(st.sampled_from(sorted(d2)))) if d2 else set()
    x = draw(st.integers(0, n - 1))
    return inst, pts, d1, d2, x


@settings(max_examples=200, deadline=None)
@given(small_case())
def test_coverage_properties(case):
    inst, pts, d1, d2, x = case
    w = inst.weights[0]
    c1, c2 = coverage(inst, 0, d1), coverage(inst, 0, d2)
    assert c1 == pytest.approx(naive_coverage(pts, w, inst.radii[0], d1), abs=1e-12)
    assert -1e-12 <= c1 <= c2 + 1e-12 <= 1 + 2e-12
    if x not in d2:
        gain1 = coverage(inst, 0, d1 | {x}) - c1
        gain2 = coverage(inst, 0, d2 | {x}) - c2
        assert gain1 >= gain2 - 1e-12
