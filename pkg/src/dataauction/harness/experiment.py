"""Welfare-ratio experiments and runtime comparison."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .._random import make_rng
from ..baselines import greedy_allocate
from ..lp import solve_welfare_lp
from ..mechanism import RATIO, burn_probabilities, sample_lprmono_coverages
from ..rounding import expected_bidder_coverages, realized_coverages, sample_assignments
from .synthetic import SyntheticConfig, generate_synthetic

TIMING_REPEATS = 3
ALGORITHMS = ("LPR", "LPRMono", "Greedy")


def _timed(fn, repeats):
    """Run ``fn`` ``repeats`` times; return the last result and the median wall-clock seconds."""
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, float(np.median(times))


@dataclass
class ExperimentReport:
    config: dict
    trials: int
    instances: list = field(default_factory=list)

    RATIO_KEYS = ("lpr", "lprmono", "lpr_mc", "lprmono_mc", "greedy")

    def ratios(self, key) -> np.ndarray:
        return np.array([r["ratios"][key] for r in self.instances], dtype=float)

    def summary(self) -> dict:
        out = {}
        for key in self.RATIO_KEYS:
            vals = self.ratios(key)
            vals = vals[np.isfinite(vals)]
            out[key] = {"mean": float(vals.mean()) if vals.size else float("nan"),
                        "std": float(vals.std()) if vals.size else float("nan"),
                        "count": int(vals.size)}
        for alg in ALGORITHMS:
            t = np.array([r["seconds"][alg] for r in self.instances])
            out.setdefault("seconds", {})[alg] = float(t.mean())
        out["degenerate_instances"] = sum(1 for r in self.instances if r["lp_objective"] <= 0)
        return out

    def to_dict(self) -> dict:
        return {"config": self.config, "trials": self.trials,
                "instances": self.instances, "summary": self.summary()}


def evaluate_instance(instance, trials: int, seed: int, repeats: int = TIMING_REPEATS,
                      greedy: bool = True) -> dict:
    """Welfare of every allocator on one instance, as ratios to the LP objective, with timings."""
    bids = instance.bids
    nbrs = instance.neighborhoods
    sol, t_lp = _timed(lambda: solve_welfare_lp(instance, drop_zero_bids=True), repeats)
    lp_obj = sol.objective

    def lpr():
        return expected_bidder_coverages(sol, nbrs), \
            sample_assignments(sol.X, make_rng(seed, "rounding", "single"), 1)[0]

    (e_lpr, _), t_round = _timed(lpr, repeats)

    def lprmono():
        rho = burn_probabilities(sol, nbrs)
        owners = sample_assignments(sol.X, make_rng(seed, "rounding", "single"), 1)[0]
        keep = make_rng(seed, "burning", "single").random(instance.m) < rho
        return RATIO * sol.bidder_coverage, owners, keep

    (e_mono, _, _), t_burn = _timed(lprmono, repeats)
    w_lpr = float(bids @ e_lpr)
    w_mono = float(bids @ e_mono)

    owners = sample_assignments(sol.X, make_rng(seed, "rounding", "mc"), trials)
    mc_lpr = realized_coverages(owners, instance.weights, nbrs) @ bids
    mc_mono = sample_lprmono_coverages(instance, sol, seed, trials) @ bids

    if greedy:
        g_alloc, t_greedy = _timed(lambda: greedy_allocate(instance), repeats)
        w_greedy = float(realized_coverages(g_alloc.assignment, instance.weights, nbrs)[0] @ bids)
    else:
        w_greedy, t_greedy = float("nan"), float("nan")

    def ratio(x):
        return x / lp_obj if lp_obj > 0 else float("nan")

    se_lpr = float(mc_lpr.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
    return {
        "seed": instance.seed,
        "bids": bids.tolist(),
        "lp_objective": lp_obj,
        "lp_coverage": sol.bidder_coverage.tolist(),
        "welfare": {"lpr": w_lpr, "lprmono": w_mono, "lpr_mc": float(mc_lpr.mean()),
                    "lprmono_mc": float(mc_mono.mean()), "greedy": w_greedy},
        "ratios": {"lpr": ratio(w_lpr), "lprmono": ratio(w_mono),
                   "lpr_mc": ratio(float(mc_lpr.mean())), "lprmono_mc": ratio(float(mc_mono.mean())),
                   "greedy": ratio(w_greedy)},
        "lpr_mc_stderr": se_lpr,
        "lpr_mc_zscore": (float(mc_lpr.mean()) - w_lpr) / se_lpr if se_lpr > 0 else 0.0,
        "seconds": {"LP": t_lp, "LPR": t_lp + t_round, "LPRMono": t_lp + t_burn, "Greedy": t_greedy},
    }


def instance_seed(master_seed: int, k: int) -> int:
    return int(make_rng(master_seed, "instance", k).integers(0, 2 ** 31 - 1))


def run_experiment(config: SyntheticConfig = SyntheticConfig(), instances: int = 50,
                   trials: int = 150_000, seed: int = None, repeats: int = TIMING_REPEATS,
                   greedy: bool = True) -> ExperimentReport:
    """Generate ``instances`` instances from ``config`` and evaluate each one.

    Instance ``k`` uses a seed derived from ``(seed, k)``; ``seed`` defaults
    to the config seed.
    """
    master = config.seed if seed is None else seed
    report = ExperimentReport(config=config.to_dict(), trials=trials)
    for k in range(instances):
        s = instance_seed(master, k)
        inst = generate_synthetic(replace(config, seed=s))
        rec = evaluate_instance(inst, trials, s, repeats, greedy)
        rec["index"] = k
        report.instances.append(rec)
    return report


def run_scaling(sizes=(500, 1000, 2000), m: int = 3, d: int = 2, alphas=(0.02, 0.03, 0.04),
                seed: int = 0, repeats: int = TIMING_REPEATS, greedy: bool = True) -> list:
    """Timing of the LP pipeline and greedy as the database grows."""
    rows = []
    for n in sizes:
        cfg = SyntheticConfig(m=m, n=n, d=d, alphas=tuple(alphas), seed=seed)
        inst = generate_synthetic(cfg)
        rec = evaluate_instance(inst, trials=1, seed=seed, repeats=repeats, greedy=greedy)
        rows.append({"n": n, "m": m, "lp_objective": rec["lp_objective"],
                     "ratios": rec["ratios"], "seconds": rec["seconds"]})
    return rows
