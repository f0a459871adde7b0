"""Command line interface.

Exit codes: 0 success, 1 usage or input error, 2 solver failure,
3 a violated invariant (or a monotonicity violation found by ``probe``).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..baselines import Greedy, monotonicity_probe
from ..lp import SolverError, solve_welfare_lp
from ..mechanism import LPR, LPRMono, MechanismError, RATIO, run_auction, run_lprmono
from ..revenue import TypeDistribution, ironed_tables, run_revenue_auction
from ..rounding import expected_bidder_coverages, realized_coverages
from .experiment import run_experiment, run_scaling
from .io import ParseError, load_embeddings, load_instance, save_instance
from .synthetic import SyntheticConfig, generate_synthetic

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3
INVARIANT_TOL = 1e-9


class InvariantViolation(RuntimeError):
    pass


def _emit(doc, out):
    text = json.dumps(doc, indent=2, default=float)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load_config(path):
    if path is None:
        return SyntheticConfig()
    return SyntheticConfig.from_dict(json.loads(Path(path).read_text()))


def cmd_gen(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    db = None
    if args.embeddings:
        db = load_embeddings(args.embeddings, args.format, metric=cfg.metric)
    inst = generate_synthetic(cfg, database=db)
    if args.out:
        save_instance(args.out, inst)
    else:
        from .io import instance_to_dict
        _emit(instance_to_dict(inst), None)


def cmd_solve(args):
    inst = load_instance(args.instance)
    sol = solve_welfare_lp(inst, drop_zero_bids=True, dump_path=args.dump_lp)
    exp_cov = expected_bidder_coverages(sol, inst.neighborhoods)
    res = run_lprmono(inst, args.seed, solution=sol)
    doc = {"lp_objective": sol.objective,
           "lp_coverage": sol.bidder_coverage.tolist(),
           "lpr_expected_coverage": exp_cov.tolist(),
           "lpr_expected_welfare": float(inst.bids @ exp_cov),
           "lprmono_expected_welfare": float(RATIO * inst.bids @ sol.bidder_coverage),
           "rounded_allocation": res.rounded.assignment.tolist()}
    if np.any(exp_cov < RATIO * sol.bidder_coverage - INVARIANT_TOL):
        raise InvariantViolation("rounded coverage below the (1 - 1/e) LP bound")
    if args.trials:
        cov = LPR().realized_coverages(inst, args.trials, args.seed)
        doc["lpr_mc_welfare"] = float((cov @ inst.bids).mean())
    _emit(doc, args.out)


def _check_outcome(inst, out):
    utility = inst.true_types * out.expected_coverage - out.payments
    if np.any(out.payments < -INVARIANT_TOL):
        raise InvariantViolation("negative payment")
    truthful = np.allclose(inst.bids, inst.true_types)
    if truthful and np.any(utility < -INVARIANT_TOL):
        raise InvariantViolation("individual rationality violated")


def cmd_auction(args):
    inst = load_instance(args.instance)
    out = run_auction(inst, args.seed)
    _check_outcome(inst, out)
    _emit(out.to_dict(), args.out)


def cmd_revenue(args):
    inst = load_instance(args.instance)
    dists = inst.distributions or tuple(TypeDistribution.uniform(inst.type_set) for _ in range(inst.m))
    tables = ironed_tables(inst, dists)
    out = run_revenue_auction(inst, dists, args.seed, tables=tables)
    _check_outcome(inst, out)
    doc = out.to_dict()
    doc["virtual_values"] = [t.values.tolist() for t in tables]
    _emit(doc, args.out)


MECHANISMS = {"lprmono": LPRMono, "lpr": LPR, "greedy": Greedy}


def cmd_probe(args):
    inst = load_instance(args.instance)
    mech = MECHANISMS[args.mechanism]()
    rep = monotonicity_probe(mech, inst, args.bidder, args.bids, args.trials, args.epsilon, args.seed)
    _emit(rep.to_dict(), args.out)
    return EXIT_INVARIANT if rep.violation else EXIT_OK


def cmd_experiment(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    report = run_experiment(cfg, args.instances, args.trials, greedy=not args.no_greedy)
    doc = report.to_dict()
    if args.scaling:
        doc["scaling"] = run_scaling(tuple(args.scaling), seed=cfg.seed)
    _emit(doc, args.out)
    summ = report.summary()
    bad = report.ratios("lprmono")
    bad = bad[np.isfinite(bad)]
    if np.any(np.abs(bad - RATIO) > 1e-9) or any(
            np.nanmax(report.ratios(k), initial=0.0) > 1 + 1e-6 for k in ("lpr", "lprmono", "greedy")):
        raise InvariantViolation("welfare ratio outside its guaranteed range")
    print(f"LPR {summ['lpr']['mean']:.4f} ± {summ['lpr']['std']:.4f} | "
          f"LPRMono {summ['lprmono']['mean']:.4f} ± {summ['lprmono']['std']:.4f} | "
          f"Greedy {summ['greedy']['mean']:.4f} ± {summ['greedy']['std']:.4f}", file=sys.stderr)


def build_parser():
    p = argparse.ArgumentParser(prog="dataauction", description="Coverage-valuation data auctions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trials=True):
        sp.add_argument("--seed", type=int, default=None if sp.prog.endswith(("gen", "experiment")) else 0)
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        if trials:
            sp.add_argument("--trials", type=int, default=150_000)

    sp = sub.add_parser("gen", help="emit an instance file from a generator config")
    sp.add_argument("config", nargs="?", help="JSON generator config (defaults to the small synthetic setting)")
    sp.add_argument("--embeddings", help="use points from this embedding file")
    sp.add_argument("--format", help="embedding format: csv, tsv, txt, npy, npz")
    common(sp, trials=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="LP relaxation and rounding summary")
    sp.add_argument("instance")
    sp.add_argument("--dump-lp", help="write the LP in CPLEX LP format")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("auction", help="truthful LPRMono auction with payments")
    sp.add_argument("instance")
    common(sp, trials=False)
    sp.set_defaults(func=cmd_auction)

    sp = sub.add_parser("revenue", help="virtual-value revenue auction")
    sp.add_argument("instance")
    common(sp, trials=False)
    sp.set_defaults(func=cmd_revenue)

    sp = sub.add_parser("probe", help="empirical monotonicity check for one bidder")
    sp.add_argument("instance")
    sp.add_argument("--mechanism", choices=sorted(MECHANISMS), default="lprmono")
    sp.add_argument("--bidder", type=int, default=0)
    sp.add_argument("--bids", type=float, nargs=2, required=True, metavar=("B", "B_PRIME"))
    sp.add_argument("--epsilon", type=float, default=0.01)
    common(sp)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("experiment", help="welfare-ratio report over generated instances")
    sp.add_argument("config", nargs="?")
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--no-greedy", action="store_true")
    sp.add_argument("--scaling", type=int, nargs="*", metavar="N",
                    help="also time the pipelines at these database sizes")
    common(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        code = args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvariantViolation, MechanismError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
