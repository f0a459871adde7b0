"""Synthetic instance generation."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .._random import make_rng
from ..revenue import TypeDistribution
from ..valuation import BidderProfile, Database, Instance

RADIUS_SAMPLE = 100


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator parameters; the defaults reproduce the small synthetic setting.

    ``alphas`` fixes the per-bidder radius coefficients (drawn from U[0, 1]
    when omitted). The type set is ``{type_start + t * type_step}`` for
    ``t < n_types``.
    """

    m: int = 2
    n: int = 5
    d: int = 10
    n_types: int = 10
    type_step: float = 0.1
    type_start: float = 0.0
    low: float = 0.0
    high: float = 10.0
    alphas: Optional[tuple] = None
    n_classes: int = 1
    sample_size: int = RADIUS_SAMPLE
    metric: str = "euclidean"
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n, self.d, self.n_types, self.n_classes, self.sample_size) < 1:
            raise ValueError("m, n, d, n_types, n_classes and sample_size must be positive")
        if not self.low < self.high:
            raise ValueError("coordinate range must satisfy low < high")
        if self.type_step <= 0 or self.type_start < 0:
            raise ValueError("type set must be non-negative and strictly increasing")
        if self.n_classes > self.n:
            raise ValueError("more classes than points")
        if self.alphas is not None:
            a = tuple(float(x) for x in self.alphas)
            if len(a) != self.m or any(not 0 <= x <= 1 for x in a):
                raise ValueError("alphas must give one coefficient in [0, 1] per bidder")
            object.__setattr__(self, "alphas", a)

    @property
    def type_set(self) -> np.ndarray:
        # rounded so that 0.1 * 3 is stored as 0.3
        return np.round(self.type_start + self.type_step * np.arange(self.n_types), 12)

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["alphas"] is not None:
            out["alphas"] = list(out["alphas"])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("alphas") is not None:
            data["alphas"] = tuple(data["alphas"])
        return cls(**data)

    def with_seed(self, seed) -> "SyntheticConfig":
        return replace(self, seed=int(seed))


def derive_radii(db: Database, alphas, sample_seed: int, labels=None,
                 sample_size: int = RADIUS_SAMPLE) -> np.ndarray:
    """``r_ij = alpha_i * R_c(j)``, with ``R_c`` the mean pairwise distance of a class sample.

    Each class contributes ``min(sample_size, class size)`` points drawn without
    replacement. Returns an ``m x n`` array.
    """
    if labels is not None:
        db = Database(db.points, labels, db.metric)
    classes = db.class_indices()
    rng = make_rng(sample_seed, "radius-sample")
    base = np.zeros(db.n)
    metric = "euclidean" if db.metric == "euclidean" else "cosine"
    for label, idx in classes.items():
        if idx.size == 0:
            raise ValueError(f"class {label!r} is empty")
        if idx.size < 2 and len(classes) > 1:
            raise ValueError(f"class {label!r} has fewer than 2 points")
        k = min(sample_size, idx.size)
        pick = np.sort(rng.choice(idx, size=k, replace=False)) if k < idx.size else idx
        base[idx] = pdist(db.points[pick], metric=metric).mean() if k >= 2 else 0.0
    alphas = np.asarray(alphas, dtype=float)
    return alphas[:, None] * base[None, :]


def generate_synthetic(config: SyntheticConfig = SyntheticConfig(), database: Database = None) -> Instance:
    """Draw a full instance from ``config``; bids are the true types.

    When ``database`` is given its points (and labels) are used instead of
    uniform coordinates.
    """
    seed = config.seed
    if database is None:
        pts = make_rng(seed, "coords").uniform(config.low, config.high, size=(config.n, config.d))
        labels = None
        if config.n_classes > 1:
            labels = make_rng(seed, "labels").permutation(np.arange(config.n) % config.n_classes)
        database = Database(pts, labels, config.metric)
    classes = database.class_indices()
    lam = config.type_set
    m = config.m
    types = make_rng(seed, "types").choice(lam, size=m)
    if config.alphas is None:
        alphas = make_rng(seed, "alpha").uniform(0.0, 1.0, size=m)
    else:
        alphas = np.asarray(config.alphas)
    class_w = make_rng(seed, "weights").uniform(0.0, 1.0, size=(m, len(classes)))
    raw = np.zeros((m, database.n))
    for c, idx in enumerate(classes.values()):
        raw[:, idx] = class_w[:, c][:, None]
    radii = derive_radii(database, alphas, seed, sample_size=config.sample_size)
    bidders = tuple(BidderProfile(raw[i], radii[i], types[i]) for i in range(m))
    dists = tuple(TypeDistribution.uniform(lam) for _ in range(m))
    return Instance(database, bidders, lam, types, distributions=dists, seed=seed)
