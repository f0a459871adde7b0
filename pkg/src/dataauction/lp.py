"""LP relaxation of welfare maximisation and its standard set-coverage variant.

Both LPs share one shape: bidder ``i`` holds fractional items ``X[i, k]``;
element ``j`` is fractionally covered, ``C[i, j] <= sum(X[i, k] for k in N_i(j))``;
each item goes to at most one bidder in total; the objective is
``sum_i bid_i * sum_j weight_ij * C[i, j]``. For the data auction items and
elements are both database points; for set coverage items are the sets.

The backend is HiGHS dual simplex through :func:`scipy.optimize.linprog`,
single-threaded and deterministic for bit-identical inputs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-7


class SolverError(RuntimeError):
    """The LP backend failed or returned an infeasible point."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """Optimal LP point.

    ``X`` is ``m x n_items``, ``C`` is ``m x n_elements``; ``weights`` and
    ``bids`` are the objective coefficients the LP was built from.
    """

    X: np.ndarray
    C: np.ndarray
    weights: np.ndarray
    bids: np.ndarray
    objective: float
    status: str = "optimal"

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def bidder_coverage(self) -> np.ndarray:
        """Per-bidder LP coverage ``sum_j w_ij C_ij``."""
        return np.einsum("ij,ij->i", self.weights, self.C)


def lp_bidder_coverage(sol: FractionalSolution, i: int) -> float:
    return float(sol.weights[i] @ sol.C[i])


def _solve_coverage_lp(bids, weights, incidence, n_items, *, active=None, dump_path=None):
    m, n_el = weights.shape
    bids = np.asarray(bids, dtype=float)
    if np.any(bids < 0):
        raise ValueError("bids must be non-negative")
    if active is None:
        active = np.ones(m, dtype=bool)

    # column layout: all X[i, k] for active bidders, then the kept C[i, j]
    x_bidders = np.flatnonzero(active)
    x_col = -np.ones(m, dtype=int)
    x_col[x_bidders] = np.arange(x_bidders.size) * n_items
    n_x = x_bidders.size * n_items

    c_keys = []
    for i in x_bidders:
        for j in np.flatnonzero(weights[i] > 0):
            c_keys.append((i, j))
    c_keys = np.array(c_keys, dtype=int).reshape(-1, 2)
    n_c = len(c_keys)
    n_var = n_x + n_c

    cost = np.zeros(n_var)
    if n_c:
        cost[n_x:] = -bids[c_keys[:, 0]] * weights[c_keys[:, 0], c_keys[:, 1]]

    # C[i,j] - sum_{k in N_i(j)} X[i,k] <= 0
    rows, cols, vals = [], [], []
    for r, (i, j) in enumerate(c_keys):
        mat = incidence[i]
        nbrs = mat.indices[mat.indptr[j]:mat.indptr[j + 1]]
        rows.append(np.full(nbrs.size + 1, r))
        cols.append(np.concatenate(([n_x + r], x_col[i] + nbrs)))
        vals.append(np.concatenate(([1.0], -np.ones(nbrs.size))))
    # sum_i X[i,k] <= 1
    if x_bidders.size:
        base = n_c
        k = np.arange(n_items)
        for i in x_bidders:
            rows.append(base + k)
            cols.append(x_col[i] + k)
            vals.append(np.ones(n_items))
    n_rows = n_c + (n_items if x_bidders.size else 0)
    if rows:
        A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n_rows, n_var))
    else:
        A = sparse.csr_matrix((0, n_var))
    rhs = np.concatenate((np.zeros(n_c), np.ones(n_rows - n_c)))

    if dump_path is not None:
        write_lp_file(dump_path, cost, A, rhs, n_x, c_keys, x_bidders, n_items)

    X = np.zeros((m, n_items))
    C = np.zeros((m, n_el))
    if n_var:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = linprog(cost, A_ub=A if n_rows else None, b_ub=rhs if n_rows else None,
                          bounds=(0.0, 1.0), method="highs-ds",
                          options={"presolve": True, "primal_feasibility_tolerance": FEAS_TOL,
                                   "dual_feasibility_tolerance": FEAS_TOL})
        if res.status != 0 or res.x is None:
            raise SolverError(f"LP solve failed: {res.message}", status=res.status)
        z = res.x
        for i in x_bidders:
            X[i] = z[x_col[i]:x_col[i] + n_items]
        if n_c:
            C[c_keys[:, 0], c_keys[:, 1]] = z[n_x:]
    X, C = _clean(X, C, incidence, weights, active)
    objective = float(bids @ np.einsum("ij,ij->i", weights, C))
    return FractionalSolution(X=X, C=C, weights=weights, bids=bids, objective=objective)


def _clean(X, C, incidence, weights, active):
    """Clamp into [0, 1] and repair per-item sums that exceed one by solver noise."""
    for name, arr in (("X", X), ("C", C)):
        if arr.size and (arr.min() < -FEAS_TOL or arr.max() > 1 + FEAS_TOL):
            raise SolverError(f"LP returned {name} outside [0, 1] beyond tolerance")
    X = np.clip(X, 0.0, 1.0)
    C = np.clip(C, 0.0, 1.0)
    col = X.sum(axis=0)
    if np.any(col > 1 + FEAS_TOL):
        raise SolverError("LP assigns an item with total mass above 1 beyond tolerance")
    over = col > 1.0
    if np.any(over):
        X[:, over] /= col[over]
    for i in range(X.shape[0]):
        if not active[i]:
            continue
        reach = incidence[i] @ X[i]
        excess = C[i] - reach
        if np.any(excess > FEAS_TOL):
            raise SolverError("LP coverage exceeds its neighbourhood mass beyond tolerance")
        C[i] = np.minimum(C[i], np.minimum(reach, 1.0))
    C[weights <= 0] = 0.0
    return X, C


def solve_welfare_lp(instance, neighborhoods: Optional[Sequence] = None, *, bids=None,
                     drop_zero_bids: bool = False, dump_path=None) -> FractionalSolution:
    """Solve the welfare LP relaxation of ``instance``.

    ``bids`` overrides the instance's bid profile. With ``drop_zero_bids`` the
    bidders bidding zero get no LP columns, so their coverage is exactly zero
    instead of whatever the solver happens to return; the optimum is the same.
    """
    if neighborhoods is None:
        neighborhoods = instance.neighborhoods
    bids = np.asarray(instance.bids if bids is None else bids, dtype=float)
    active = bids > 0 if drop_zero_bids else None
    return _solve_coverage_lp(bids, instance.weights, neighborhoods, instance.n,
                              active=active, dump_path=dump_path)


@dataclass(frozen=True, eq=False)
class SetCoverageInstance:
    """Ground set ``{0..n_elements-1}``, ``L`` subsets and one type per bidder."""

    n_elements: int
    sets: tuple
    types: np.ndarray

    def __post_init__(self):
        sets = tuple(frozenset(int(x) for x in s) for s in self.sets)
        if len(sets) < 1:
            raise ValueError("need at least one set")
        for s in sets:
            if any(x < 0 or x >= self.n_elements for x in s):
                raise ValueError("every set must be a subset of the ground set")
        types = np.asarray(self.types, dtype=float)
        if types.ndim != 1 or types.size < 1 or np.any(types < 0):
            raise ValueError("types must be a non-empty vector of non-negative reals")
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "types", types)

    @property
    def m(self) -> int:
        return self.types.size

    @property
    def incidence(self):
        """Element-by-set 0/1 matrix: row ``j`` lists the sets containing ``j``."""
        rows, cols = [], []
        for ell, s in enumerate(self.sets):
            for j in s:
                rows.append(j)
                cols.append(ell)
        mat = sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                                shape=(self.n_elements, len(self.sets)))
        mat.sort_indices()
        return mat

    def neighborhoods(self) -> list:
        inc = self.incidence
        return [inc] * self.m


def solve_set_coverage_lp(sc: SetCoverageInstance, *, dump_path=None) -> FractionalSolution:
    """Standard coverage LP: ``X`` is ``m x L`` over sets, ``C`` is ``m x |U|`` over elements.

    Coverage is unweighted (each element counts one), so ``bidder_coverage``
    is the fractional number of covered elements.
    """
    weights = np.ones((sc.m, sc.n_elements))
    return _solve_coverage_lp(sc.types, weights, sc.neighborhoods(), len(sc.sets), dump_path=dump_path)


def write_lp_file(path, cost, A, rhs, n_x, c_keys, x_bidders, n_items):
    """Dump the maximisation problem in CPLEX LP text format."""
    names = [f"x_{i}_{k}" for i in x_bidders for k in range(n_items)]
    names += [f"c_{i}_{j}" for i, j in c_keys]

    def expr(coefs):
        parts = []
        for idx, v in coefs:
            sign = "-" if v < 0 else "+"
            parts.append(f"{sign} {abs(v):.17g} {names[idx]}")
        text = " ".join(parts) if parts else "0 " + (names[0] if names else "")
        return text[2:] if text.startswith("+ ") else text

    lines = ["\\ welfare LP relaxation", "Maximize", " obj: " + expr(
        [(k, -cost[k]) for k in np.flatnonzero(cost)])]
    lines.append("Subject To")
    A = sparse.csr_matrix(A)
    for r in range(A.shape[0]):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        lines.append(f" r{r}: " + expr(zip(A.indices[lo:hi], A.data[lo:hi])) + f" <= {rhs[r]:.17g}")
    lines.append("Bounds")
    lines.extend(f" 0 <= {nm} <= 1" for nm in names)
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
