"""Mixed-integer programming layer over the LP core.

Branch-and-bound is delegated to HiGHS (scipy.optimize.milp) behind the same
contract a hand-rolled search would satisfy: deterministic results, a dual
bound, and exact optima at gap_tol on desk-scale problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .lp import LinearProgram, LpError, Sense

INT_TOL = 1e-6


class VarType(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    INTEGER = "integer"


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    FEASIBLE_GAP_LIMIT = "feasible_gap_limit"


@dataclass
class MixedIntegerProgram:
    lp: LinearProgram
    var_types: list[VarType]

    def __post_init__(self):
        if len(self.var_types) != self.lp.num_vars:
            raise LpError("var_types length does not match variable count")


@dataclass
class MipOptions:
    gap_tol: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None


@dataclass
class MipSolution:
    status: MipStatus
    x: np.ndarray | None
    objective: float | None
    bound: float | None  # best dual bound
    gap: float | None


class MipUnboundedError(LpError):
    """The relaxation is unbounded; callers guard against this upstream."""


def solve_mip(mip: MixedIntegerProgram, options: MipOptions | None = None) -> MipSolution:
    """Solve the MILP; incumbents satisfy all rows within feasibility tolerance.

    Integrality is declared at |x_i - round(x_i)| <= 1e-6 and integer values are
    rounded in the returned vector.  Node/time limits without an incumbent give
    FEASIBLE_GAP_LIMIT with a bound only.
    """
    options = options or MipOptions()
    mip.lp.validate()
    sign = -1.0 if mip.lp.sense is Sense.MAX else 1.0
    c = sign * np.asarray(mip.lp.objective, dtype=float)
    lo, hi = mip.lp.bounds_arrays()

    integrality = np.zeros(mip.lp.num_vars)
    for j, vt in enumerate(mip.var_types):
        if vt is not VarType.CONTINUOUS:
            integrality[j] = 1
        if vt is VarType.BINARY:
            if lo[j] < 0 or hi[j] > 1:
                raise LpError(f"binary variable {j} must have bounds within [0, 1]")
            lo[j], hi[j] = max(lo[j], 0.0), min(hi[j], 1.0)

    constraints = []
    if mip.lp.rows:
        mat, row_lb, row_ub = mip.lp.constraint_matrix()
        constraints.append(LinearConstraint(mat, row_lb, row_ub))

    milp_options: dict = {"mip_rel_gap": options.gap_tol, "presolve": True}
    if options.node_limit is not None:
        milp_options["node_limit"] = options.node_limit
    if options.time_limit is not None:
        milp_options["time_limit"] = options.time_limit

    res = milp(
        c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options=milp_options,
    )

    if res.status == 2:
        return MipSolution(MipStatus.INFEASIBLE, None, None, None, None)
    if res.status == 3:
        raise MipUnboundedError("MILP relaxation is unbounded")
    if res.status not in (0, 1):
        raise LpError(f"MILP solve failed: {res.message}")

    bound = None
    if res.mip_dual_bound is not None:
        bound = float(sign * res.mip_dual_bound)

    if res.x is None:
        # Limit reached with no incumbent: report the bound only.
        return MipSolution(MipStatus.FEASIBLE_GAP_LIMIT, None, None, bound, None)

    x = np.asarray(res.x, dtype=float)
    for j, vt in enumerate(mip.var_types):
        if vt is not VarType.CONTINUOUS:
            r = round(x[j])
            if abs(x[j] - r) > INT_TOL:
                raise LpError(f"variable {j} not integral at reported optimum: {x[j]}")
            x[j] = r
    objective = float(np.dot(np.asarray(mip.lp.objective, dtype=float), x))
    if bound is None:
        bound = objective
    gap = abs(objective - bound) / max(1.0, abs(objective))
    status = MipStatus.OPTIMAL if (res.status == 0 and gap <= options.gap_tol + 1e-12) else MipStatus.FEASIBLE_GAP_LIMIT
    return MipSolution(status, x, objective, bound, gap)
