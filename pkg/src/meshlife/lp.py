"""Linear programming layer: standard-form problems solved with dual values.

The solver contract (statuses, duals, tolerances) is a seam; the engine behind
it is HiGHS via scipy.  Duals follow the convention that a Max problem with <=
rows has non-negative duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

TOL_FEAS = 1e-9
TOL_OBJ = 1e-7


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpError(ValueError):
    """Malformed problem data (dimension mismatch, non-finite coefficients)."""


@dataclass
class ConstraintRow:
    """One constraint: sparse coefficients as a var-index -> value map."""

    coeffs: dict[int, float]
    relation: Relation
    rhs: float


@dataclass
class LinearProgram:
    """max/min c'x subject to rows, with per-variable bounds (default x >= 0)."""

    sense: Sense
    objective: list[float]
    rows: list[ConstraintRow] = field(default_factory=list)
    lower: list[float] | None = None  # default all-zero
    upper: list[float | None] | None = None  # default unbounded

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add_row(self, coeffs: dict[int, float], relation: Relation, rhs: float) -> int:
        self.rows.append(ConstraintRow(dict(coeffs), relation, rhs))
        return len(self.rows) - 1

    def validate(self) -> None:
        n = self.num_vars
        if not all(np.isfinite(self.objective)):
            raise LpError("non-finite objective coefficient")
        for i, row in enumerate(self.rows):
            for j, v in row.coeffs.items():
                if not (0 <= j < n):
                    raise LpError(f"row {i}: variable index {j} out of range")
                if not np.isfinite(v):
                    raise LpError(f"row {i}: non-finite coefficient")
            if not np.isfinite(row.rhs):
                raise LpError(f"row {i}: non-finite right-hand side")
        for bounds in (self.lower, self.upper):
            if bounds is not None and len(bounds) != n:
                raise LpError("bounds length does not match variable count")

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.num_vars
        lo = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        if self.upper is None:
            hi = np.full(n, np.inf)
        else:
            hi = np.array([np.inf if u is None else float(u) for u in self.upper])
        return lo, hi

    def constraint_matrix(self) -> tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """Rows as a sparse matrix with per-row lower/upper constraint bounds."""
        data, ri, ci = [], [], []
        lb = np.empty(len(self.rows))
        ub = np.empty(len(self.rows))
        for i, row in enumerate(self.rows):
            for j, v in row.coeffs.items():
                ri.append(i)
                ci.append(j)
                data.append(v)
            if row.relation is Relation.LE:
                lb[i], ub[i] = -np.inf, row.rhs
            elif row.relation is Relation.GE:
                lb[i], ub[i] = row.rhs, np.inf
            else:
                lb[i], ub[i] = row.rhs, row.rhs
        mat = sparse.csr_matrix(
            (data, (ri, ci)), shape=(len(self.rows), self.num_vars)
        )
        return mat, lb, ub


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    objective: float | None
    duals: np.ndarray | None  # one per constraint row


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve the LP, returning primal solution, objective, and row duals.

    Statuses Infeasible/Unbounded are results, not errors.  Deterministic for
    identical input.
    """
    lp.validate()
    sign = -1.0 if lp.sense is Sense.MAX else 1.0
    c = sign * np.asarray(lp.objective, dtype=float)
    lo, hi = lp.bounds_arrays()

    a_ub_rows, b_ub, ub_index = [], [], []
    a_eq_rows, b_eq, eq_index = [], [], []
    n = lp.num_vars
    for i, row in enumerate(lp.rows):
        dense = np.zeros(n)
        for j, v in row.coeffs.items():
            dense[j] = v
        if row.relation is Relation.EQ:
            a_eq_rows.append(dense)
            b_eq.append(row.rhs)
            eq_index.append(i)
        elif row.relation is Relation.LE:
            a_ub_rows.append(dense)
            b_ub.append(row.rhs)
            ub_index.append(i)
        else:  # GE -> negate into LE form; dual sign restored below
            a_ub_rows.append(-dense)
            b_ub.append(-row.rhs)
            ub_index.append(~i)

    res = linprog(
        c,
        A_ub=np.array(a_ub_rows) if a_ub_rows else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq_rows) if a_eq_rows else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=np.column_stack([lo, hi]),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, None, None)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, None, None)
    if res.status != 0:
        raise LpError(f"LP solve failed: {res.message}")

    duals = np.zeros(len(lp.rows))
    for k, idx in enumerate(ub_index):
        marg = res.ineqlin.marginals[k]
        if idx >= 0:
            duals[idx] = sign * marg
        else:  # GE row was negated into LE form
            duals[~idx] = -sign * marg
    for k, idx in enumerate(eq_index):
        duals[idx] = sign * res.eqlin.marginals[k]

    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=res.x,
        objective=float(sign * res.fun),
        duals=duals,
    )
