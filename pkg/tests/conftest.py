import numpy as np
import pytest

from dataauction import BidderProfile, Database, Instance
from dataauction.revenue import TypeDistribution

EXAMPLE1_TYPES = [0.0, 0.5, 0.7, 0.75, 1.0]


def line_instance(bids=(1.0, 0.75, 0.5), type_set=EXAMPLE1_TYPES):
    """Points A-B-C on a line, three bidders with radius 1 and equal weights."""
    db = Database([[0.0], [1.0], [2.0]])
    bidders = tuple(BidderProfile([1, 1, 1], [1, 1, 1], t) for t in (1.0, 0.75, 0.5))
    return Instance(db, bidders, type_set, bids)


def clique_instance(bids=(1.0, 1.0), type_set=(0.0, 1.0, 2.0)):
    """Three mutually neighbouring points, two bidders with equal weights."""
    db = Database([[0.0], [0.1], [0.2]])
    bidders = tuple(BidderProfile([1, 1, 1], [1, 1, 1], b) for b in bids)
    return Instance(db, bidders, type_set, bids)


def random_instance(rng, n=None, m=None, n_types=5, dim=2, zero_type=None, uniform_dists=True):
    n = int(rng.integers(1, 7)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m
    pts = rng.uniform(0, 1, size=(n, dim))
    lam = np.sort(rng.choice(np.arange(1, 21) / 20, size=n_types, replace=False))
    if zero_type if zero_type is not None else rng.random() < 0.5:
        lam[0] = 0.0
    bidders = []
    for _ in range(m):
        w = rng.uniform(0, 1, size=n) * (rng.random(n) < 0.85)
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
        r = rng.uniform(0, 0.7, size=n)
        bidders.append(BidderProfile(w, r, rng.choice(lam)))
    dists = tuple(TypeDistribution.uniform(lam) for _ in range(m)) if uniform_dists else None
    bids = np.array([b.true_type for b in bidders])
    return Instance(Database(pts), tuple(bidders), lam, bids, distributions=dists)


@pytest.fixture
def line():
    return line_instance()


@pytest.fixture
def clique():
    return clique_instance()
