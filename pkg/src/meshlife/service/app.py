"""FastAPI service exposing instance generation, solving, and verification.

The heavy lifting happens in the core package; endpoints translate between the
wire models and domain types.  Long-running deployments put this behind
uvicorn; the CLI drives the same app in-process.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import netgen
from ..master import ColGenOptions, improvement_ratio, price_and_branch, run_column_generation
from ..model import ModelError, PlanMode, TimesharePlan, plan_is_battery_feasible
from ..pricing import PricingInfeasibleError
from ..verify import simulate_plan, validate_configuration
from . import convert
from .schemas import (
    GenerateRequest,
    GenerateResponse,
    PlanEntryModel,
    SolveReport,
    SolveRequest,
    TimingsModel,
    VerifyRequest,
    VerifyResponse,
)

app = FastAPI(title="meshlife", description="Maximum-lifetime schedules for mesh networks")


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/generate", response_model=GenerateResponse)
def generate(req: GenerateRequest) -> GenerateResponse:
    try:
        params = netgen.default_params(req.nodes, comm_range=req.comm_range, seed=req.seed)
        instance = netgen.generate_instance(params, tx_energy=req.tx_cost, agg_cost=req.agg_cost)
        if req.battery is not None:
            instance = netgen.assign_batteries(instance, req.battery)
    except (ModelError, netgen.GenerationError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return GenerateResponse(
        instance=convert.instance_to_model(instance),
        feasible=True,
        num_arcs=len(instance.arcs),
    )


def _infeasibility_certificate(instance) -> str:
    lacking = []
    for d in instance.destinations:
        seen = {d}
        stack = [d]
        while stack:
            v = stack.pop()
            for arc in instance.in_arcs(v):
                if arc.tail not in seen:
                    seen.add(arc.tail)
                    stack.append(arc.tail)
        reach = sum(1 for o in instance.origins if o in seen)
        if reach < instance.k_demand:
            lacking.append(f"destination {d} reachable from only {reach} origins (K={instance.k_demand})")
    if lacking:
        return "; ".join(lacking)
    return "no valid routing satisfies the demand (pricing model infeasible)"


@app.post("/solve", response_model=SolveReport)
def solve(req: SolveRequest) -> SolveReport:
    try:
        instance = convert.instance_from_model(req.instance)
        if req.battery is not None:
            instance = netgen.assign_batteries(instance, req.battery)
        instance.require_batteries()
    except (ModelError, netgen.ParseError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))

    options = ColGenOptions(
        max_iters=req.max_iters,
        pricing_time_limit=req.pricing_time_limit,
        time_budget=req.time_budget,
    )
    try:
        if req.mode == "lp-only":
            state = run_column_generation(instance, options)
            bundle = None
        else:
            bundle = price_and_branch(instance, options)
            state = bundle.state
    except PricingInfeasibleError:
        raise HTTPException(status_code=422, detail=_infeasibility_certificate(instance))

    config_ids = {c.canonical_key(): i for i, c in enumerate(state.configs)}

    def plan_entries(plan: TimesharePlan) -> list[PlanEntryModel]:
        return [
            PlanEntryModel(config_id=config_ids[c.canonical_key()], timeshare=t)
            for c, t in plan.positive_entries()
        ]

    base = 1.0 / max(state.configs[0].depletion.get(v, 0.0) for v in instance.powered_nodes)
    lp_lifetime = state.lp_plan.lifetime
    reported_plan = state.lp_plan if bundle is None else bundle.ip_full
    positive = reported_plan.positive_entries()
    min_share = (
        min(t for _, t in positive) / reported_plan.lifetime
        if positive and reported_plan.lifetime > 0
        else None
    )

    return SolveReport(
        instance_ref=req.instance_ref,
        lp_lifetime=lp_lifetime,
        ip_lifetime=None if bundle is None else bundle.ip_full.lifetime,
        ip_restricted_lifetime=None if bundle is None else bundle.ip_restricted.lifetime,
        lr_floor=None if bundle is None else bundle.lr_floor.lifetime,
        lr_ceiling=None if bundle is None else bundle.lr_ceiling_value,
        improvement_ratio=lp_lifetime / base,
        iterations=state.iterations,
        configs_generated=len(state.configs),
        configs_used=len(state.lp_plan.positive_entries()),
        min_timeshare_fraction=min_share,
        proven_optimal=state.proven_optimal,
        timings=TimingsModel(
            master_lp=state.time_master_lp,
            pricing_total=state.time_pricing,
            master_ip=0.0 if bundle is None else bundle.time_master_ip,
        ),
        plan=plan_entries(reported_plan),
        lp_plan=plan_entries(state.lp_plan),
        configs=[convert.configuration_to_model(c, i) for i, c in enumerate(state.configs)],
    )


@app.post("/verify", response_model=VerifyResponse)
def verify_report(req: VerifyRequest) -> VerifyResponse:
    try:
        instance = convert.instance_from_model(req.instance)
        instance.require_batteries()
    except (ModelError, netgen.ParseError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))

    violations: list[str] = []
    configs = {}
    for cm in req.report.configs:
        config = convert.configuration_from_model(cm)
        configs[cm.id] = config
        report = validate_configuration(instance, config)
        for v in report.violations:
            violations.append(f"configuration {cm.id}: {v}")

    lp_plan = convert.plan_from_models(req.report.lp_plan, configs, PlanMode.FRACTIONAL)
    if not plan_is_battery_feasible(instance, lp_plan, tol=1e-6):
        violations.append("fractional plan exceeds a battery budget")
    if abs(lp_plan.lifetime - req.report.lp_lifetime) > 1e-6 * max(1.0, req.report.lp_lifetime):
        violations.append(
            f"lp_lifetime field {req.report.lp_lifetime} does not match plan sum {lp_plan.lifetime}"
        )

    if req.report.ip_lifetime is not None:
        ip_plan = convert.plan_from_models(req.report.plan, configs, PlanMode.INTEGER)
        sim = simulate_plan(instance, ip_plan)
        violations.extend(sim.violations)
        if sim.ok and sim.achieved_lifetime != round(req.report.ip_lifetime):
            violations.append(
                f"replayed lifetime {sim.achieved_lifetime} does not match "
                f"ip_lifetime {req.report.ip_lifetime}"
            )

    return VerifyResponse(ok=not violations, violations=violations)
