import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.isotonic import IsotonicRegression

from dataauction.mechanism import SolutionCache
from dataauction.revenue import (TypeDistribution, VirtualTypeTable, iron_virtual_values,
                                 ironed_tables, run_revenue_auction, virtual_bids, virtual_values)

from conftest import clique_instance, random_instance

LAM10 = np.round(np.arange(10) * 0.1, 12)


def virtual_oracle(theta, pmf):
    # revenue per type when the allocation steps from type t-1 to type t
    out = []
    tail = 1.0
    for t in range(len(theta)):
        if t == 0:
            out.append(-theta[0] * (1 - pmf[0]) / pmf[0])
        else:
            out.append(theta[t] - (theta[t] - theta[t - 1]) * tail / pmf[t])
        tail -= pmf[t]
    return np.array(out)


def test_uniform_example():
    table = virtual_values(LAM10, TypeDistribution.uniform(LAM10))
    assert table.lookup(0.9) == pytest.approx(0.8, abs=1e-12)
    np.testing.assert_allclose(table.values, virtual_oracle(LAM10, np.full(10, 0.1)), atol=1e-12)
    # uniform grid: phi_t = 2 theta_t - 1 for t >= 1, and the zero type has phi = 0
    np.testing.assert_allclose(table.values[1:], 2 * LAM10[1:] - 1.0, atol=1e-12)
    assert table.values[0] == 0.0


def test_two_types():
    a, b, p = 0.3, 0.8, 0.25
    table = virtual_values([a, b], TypeDistribution([a, b], [p, 1 - p]))
    assert table.values[1] == pytest.approx(b - (b - a) * (1 - p) / (1 - p))
    assert table.values[0] == pytest.approx(-a * (1 - p) / p)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=8), st.integers(0, 2 ** 16))
@settings(max_examples=60, deadline=None)
def test_matches_oracle_random(raw, seed):
    rng = np.random.default_rng(seed)
    theta = np.sort(rng.choice(np.arange(1, 101) / 100, size=len(raw), replace=False))
    pmf = np.array(raw) / np.sum(raw)
    pmf[-1] = 1 - pmf[:-1].sum()
    table = virtual_values(theta, TypeDistribution(theta, pmf))
    np.testing.assert_allclose(table.values, virtual_oracle(theta, pmf), atol=1e-9)


def test_zero_mass_rejected():
    with pytest.raises(ValueError):
        TypeDistribution([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        TypeDistribution([0.0, 1.0], [0.6, 0.6])
    with pytest.raises(ValueError):
        virtual_values([0.0, 2.0], TypeDistribution.uniform([0.0, 1.0]))


def test_ironing_pools_a_dip():
    t = VirtualTypeTable(np.array([1.0, 2.0]), np.array([0.5, 0.5]), np.array([3.0, 1.0]))
    np.testing.assert_allclose(iron_virtual_values(t).values, [2.0, 2.0])


def test_ironing_keeps_monotone_input():
    lam = LAM10 + 0.1
    t = virtual_values(lam, TypeDistribution.uniform(lam))
    assert np.all(np.diff(t.values) >= 0)
    out = iron_virtual_values(t)
    assert out.ironed and np.array_equal(out.values, t.values)


def random_table(rng, k):
    pmf = rng.dirichlet(np.ones(k))
    return VirtualTypeTable(np.arange(k, dtype=float), pmf, rng.normal(0, 1, k))


@pytest.mark.parametrize("seed", range(40))
def test_ironing_matches_weighted_isotonic_regression(seed):
    rng = np.random.default_rng(seed)
    t = random_table(rng, int(rng.integers(2, 12)))
    iso = IsotonicRegression().fit(np.arange(t.values.size), t.values, sample_weight=t.pmf)
    expect = iso.predict(np.arange(t.values.size))
    out = iron_virtual_values(t).values
    np.testing.assert_allclose(out, expect, atol=1e-9)
    assert np.all(np.diff(out) >= -1e-12)
    np.testing.assert_allclose(iron_virtual_values(iron_virtual_values(t)).values, out, atol=1e-12)
    # ironing preserves the f-weighted total
    assert np.dot(t.pmf, out) == pytest.approx(np.dot(t.pmf, t.values), abs=1e-12)


def test_uniform_zero_type_is_ironed_with_its_neighbours():
    out = iron_virtual_values(virtual_values(LAM10, TypeDistribution.uniform(LAM10)))
    np.testing.assert_allclose(out.values[:3], -1.4 / 3)
    assert np.all(np.diff(out.values) >= -1e-12)


def test_virtual_bid_clamps_and_excludes():
    table = virtual_values(LAM10, TypeDistribution.uniform(LAM10))
    assert table.bid(0.0) == 0.0
    assert table.bid(0.3) == 0.0  # 2 * 0.3 - 1 < 0
    assert table.bid(0.9) == pytest.approx(0.8)
    assert table.excluded == 0


def test_all_lowest_profile_earns_nothing():
    inst = clique_instance(bids=(0.0, 0.0), type_set=(0.0, 1.0, 2.0))
    dists = [TypeDistribution.uniform(inst.type_set)] * 2
    out = run_revenue_auction(inst, dists, 0)
    assert out.revenue == 0.0
    assert np.all(out.expected_coverage == 0)
    assert out.allocation.dataset(0).size == 0 and out.allocation.dataset(1).size == 0


def test_single_top_bidder_gets_top_virtual_bid():
    inst = clique_instance(bids=(0.9,), type_set=LAM10)
    tables = ironed_tables(inst, [TypeDistribution.uniform(LAM10)])
    assert virtual_bids(inst, tables)[0] == pytest.approx(0.8)
    out = run_revenue_auction(inst, None, 1, tables=tables)
    # allocated from the first type with positive virtual value (0.6), priced at 0.5
    assert out.payments[0] == pytest.approx(0.5 * (1 - 1 / np.e))


def exact_revenue_and_virtual_welfare(inst, tables):
    lam = inst.type_set
    cache = SolutionCache(inst)
    rev = vw = 0.0
    n_prof = len(lam) ** inst.m
    for prof in itertools.product(lam, repeat=inst.m):
        out = run_revenue_auction(inst.with_bids(np.array(prof)), None, 0, cache=cache, tables=tables)
        rev += out.revenue / n_prof
        vw += sum(tables[i].lookup(prof[i]) * out.expected_coverage[i] for i in range(inst.m)) / n_prof
    return rev, vw


@pytest.mark.parametrize("seed", range(6))
def test_revenue_identity_exact(seed):
    rng = np.random.default_rng(900 + seed)
    inst = random_instance(rng, n=int(rng.integers(1, 5)), m=int(rng.integers(1, 3)), n_types=4)
    tables = ironed_tables(inst)
    rev, vw = exact_revenue_and_virtual_welfare(inst, tables)
    assert rev == pytest.approx(vw, abs=1e-9)
    assert rev >= -1e-12


def test_revenue_identity_with_skewed_distribution():
    lam = np.array([0.2, 0.5, 0.6, 1.0])
    pmf = np.array([0.1, 0.6, 0.05, 0.25])
    inst = clique_instance(bids=(0.5, 1.0), type_set=lam)
    tables = ironed_tables(inst, [TypeDistribution(lam, pmf)] * 2)
    assert not np.all(np.diff(virtual_values(lam, TypeDistribution(lam, pmf)).values) >= 0)
    cache = SolutionCache(inst)
    rev = vw = 0.0
    for prof in itertools.product(range(4), repeat=2):
        prob = pmf[prof[0]] * pmf[prof[1]]
        out = run_revenue_auction(inst.with_bids(lam[list(prof)]), None, 0, cache=cache, tables=tables)
        rev += prob * out.revenue
        vw += prob * sum(tables[i].values[prof[i]] * out.expected_coverage[i] for i in range(2))
    assert rev == pytest.approx(vw, abs=1e-9)
