"""Master problem and the price-and-branch pipeline.

The fractional master allocates timeshares to configurations under per-node
depletion budgets; its duals feed the pricing MILP, which generates one new
column per round until no column prices below 1.  Stage two solves the integer
master over the generated columns and reports the bound family (floor/ceiling
roundings, restricted and full integer solutions).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .lp import ConstraintRow, LinearProgram, LpError, LpStatus, Relation, Sense, solve_lp
from .mip import MipOptions, MipStatus, MixedIntegerProgram, VarType, solve_mip
from .model import (
    Configuration,
    DualPrices,
    ModelError,
    NetworkInstance,
    PlanMode,
    TimesharePlan,
    energy_per_period,
)
from .pricing import RC_TOL, min_energy_configuration, solve_pricing

FLOOR_EPS = 1e-9  # guards floor/ceil against representation noise


@dataclass
class ColGenOptions:
    max_iters: int = 200
    rc_tol: float = RC_TOL
    pricing_time_limit: float | None = 600.0
    # Wall-clock budget for the whole generation loop; when exceeded the loop
    # stops with the best LP so far (anytime behavior, proven_optimal=False).
    time_budget: float | None = None
    initial_configs: list[Configuration] | None = None


@dataclass
class ColGenState:
    configs: list[Configuration]
    lp_plan: TimesharePlan
    duals: DualPrices
    iterations: int
    trace: list[tuple[float, float]]  # (pricing reduced objective, LP lifetime)
    proven_optimal: bool
    time_master_lp: float = 0.0
    time_pricing: float = 0.0


@dataclass
class SolutionBundle:
    state: ColGenState
    lp: TimesharePlan
    lr_floor: TimesharePlan
    lr_ceiling_value: float  # bound only; not an executable plan
    ip_restricted: TimesharePlan
    ip_full: TimesharePlan
    time_master_ip: float = 0.0


def solve_master_lp(
    instance: NetworkInstance, configs: list[Configuration]
) -> tuple[TimesharePlan, DualPrices]:
    """Maximize total timeshare subject to unit depletion budgets; return duals."""
    if not configs:
        raise ModelError("master problem needs at least one configuration")
    instance.require_batteries()
    for c in configs:
        if all(c.depletion.get(v, 0.0) <= 0.0 for v in instance.powered_nodes):
            raise ModelError("free configuration: zero depletion everywhere would unbound the master")

    lp = LinearProgram(sense=Sense.MAX, objective=[1.0] * len(configs))
    rows: list[int] = []
    for v in instance.powered_nodes:
        coeffs = {
            j: configs[j].depletion.get(v, 0.0)
            for j in range(len(configs))
            if configs[j].depletion.get(v, 0.0) != 0.0
        }
        lp.add_row(coeffs, Relation.LE, 1.0)
        rows.append(v)

    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpError(f"master LP ended with status {sol.status}")

    plan = TimesharePlan(
        entries=tuple((configs[j], max(0.0, float(sol.x[j]))) for j in range(len(configs))),
        mode=PlanMode.FRACTIONAL,
    )
    duals = DualPrices(pi={v: max(0.0, float(sol.duals[i])) for i, v in enumerate(rows)})
    return plan, duals


def solve_master_ip(
    instance: NetworkInstance,
    configs: list[Configuration],
    options: MipOptions | None = None,
) -> TimesharePlan:
    """Integer master: integral timeshares under absolute battery budgets."""
    if not configs:
        raise ModelError("master problem needs at least one configuration")
    instance.require_batteries()

    lp = LinearProgram(sense=Sense.MAX, objective=[1.0] * len(configs))
    for v in instance.powered_nodes:
        coeffs = {}
        for j, c in enumerate(configs):
            p = energy_per_period(instance, c, v)
            if p != 0.0:
                coeffs[j] = p
        lp.add_row(coeffs, Relation.LE, instance.battery[v])
    mip = MixedIntegerProgram(lp=lp, var_types=[VarType.INTEGER] * len(configs))

    sol = solve_mip(mip, options)
    if sol.status is MipStatus.INFEASIBLE:
        raise LpError("integer master infeasible (should not happen with t=0 available)")
    if sol.x is None:
        raise LpError(f"integer master ended without incumbent (status {sol.status})")
    return TimesharePlan(
        entries=tuple((configs[j], float(round(sol.x[j]))) for j in range(len(configs))),
        mode=PlanMode.INTEGER,
    )


def run_column_generation(
    instance: NetworkInstance, options: ColGenOptions | None = None
) -> ColGenState:
    """Generate columns until the pricing bound certifies LP optimality."""
    options = options or ColGenOptions()
    mip_options = MipOptions(time_limit=options.pricing_time_limit)

    t_loop = time.perf_counter()
    t0 = time.perf_counter()
    if options.initial_configs:
        configs = list(options.initial_configs)
    else:
        configs = [min_energy_configuration(instance, mip_options)]
    time_pricing = time.perf_counter() - t0

    trace: list[tuple[float, float]] = []
    time_master = 0.0
    proven = False
    plan, duals = None, None
    iterations = 0
    seen = {c.canonical_key() for c in configs}

    for iterations in range(1, options.max_iters + 1):
        t0 = time.perf_counter()
        plan, duals = solve_master_lp(instance, configs)
        time_master += time.perf_counter() - t0

        pricing_limit = options.pricing_time_limit
        if options.time_budget is not None:
            remaining = options.time_budget - (time.perf_counter() - t_loop)
            if remaining <= 0:
                break  # budget exhausted; keep the best LP found so far
            pricing_limit = remaining if pricing_limit is None else min(pricing_limit, remaining)

        t0 = time.perf_counter()
        result = solve_pricing(
            instance,
            duals,
            MipOptions(time_limit=pricing_limit),
            cutoff=1.0 - options.rc_tol,
        )
        time_pricing += time.perf_counter() - t0

        trace.append((result.reduced_objective, plan.lifetime))
        if not result.improving:
            # Either a certificate (no column prices below 1) or a pricing
            # limit was hit; only the former proves LP optimality.
            proven = result.reduced_objective >= 1.0 - options.rc_tol
            break
        key = result.configuration.canonical_key()
        if key in seen:
            # A repeated column cannot improve the LP; numerical stall.
            break
        seen.add(key)
        configs.append(result.configuration)
    else:
        iterations = options.max_iters

    if plan is None:
        plan, duals = solve_master_lp(instance, configs)

    return ColGenState(
        configs=configs,
        lp_plan=plan,
        duals=duals,
        iterations=iterations,
        trace=trace,
        proven_optimal=proven,
        time_master_lp=time_master,
        time_pricing=time_pricing,
    )


def _rounded_plan(plan: TimesharePlan, op) -> TimesharePlan:
    return TimesharePlan(
        entries=tuple((c, float(op(t))) for c, t in plan.entries),
        mode=PlanMode.INTEGER,
    )


def price_and_branch(
    instance: NetworkInstance, options: ColGenOptions | None = None
) -> SolutionBundle:
    """Column generation at the root, then the integer master over the columns.

    Produces the bound family: LP optimum, floor/ceiling roundings of its
    timeshares, and integer solutions over the positive-timeshare subset and
    over all generated columns.
    """
    state = run_column_generation(instance, options)
    lp_plan = state.lp_plan

    lr_floor = _rounded_plan(lp_plan, lambda t: math.floor(t + FLOOR_EPS))
    lr_ceiling_value = float(sum(math.ceil(t - FLOOR_EPS) for _, t in lp_plan.entries))

    restricted = [c for c, t in lp_plan.positive_entries()]
    t0 = time.perf_counter()
    ip_restricted = solve_master_ip(instance, restricted)
    ip_full = solve_master_ip(instance, state.configs)
    time_ip = time.perf_counter() - t0

    bundle = SolutionBundle(
        state=state,
        lp=lp_plan,
        lr_floor=lr_floor,
        lr_ceiling_value=lr_ceiling_value,
        ip_restricted=ip_restricted,
        ip_full=ip_full,
        time_master_ip=time_ip,
    )
    _check_bound_chain(bundle)
    return bundle


def _check_bound_chain(bundle: SolutionBundle, tol: float = 1e-6) -> None:
    chain = [
        ("lr_floor", bundle.lr_floor.lifetime),
        ("ip_restricted", bundle.ip_restricted.lifetime),
        ("ip_full", bundle.ip_full.lifetime),
        ("lp", bundle.lp.lifetime),
        ("lr_ceiling", bundle.lr_ceiling_value),
    ]
    for (lo_name, lo), (hi_name, hi) in zip(chain, chain[1:]):
        if lo > hi + tol * max(1.0, abs(hi)):
            raise LpError(f"bound chain violated: {lo_name}={lo} > {hi_name}={hi}")


def single_config_lifetime(instance: NetworkInstance, config: Configuration) -> float:
    """Fractional lifetime when operating one configuration alone."""
    worst = max(config.depletion.get(v, 0.0) for v in instance.powered_nodes)
    if worst <= 0:
        raise ModelError("free configuration has unbounded lifetime")
    return 1.0 / worst


def improvement_ratio(instance: NetworkInstance, bundle: SolutionBundle) -> float:
    """LP lifetime relative to running the initial (min-energy) configuration alone."""
    base = single_config_lifetime(instance, bundle.state.configs[0])
    return bundle.lp.lifetime / base
