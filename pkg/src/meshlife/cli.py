"""Command-line front end: a thin client over the scheduling service.

All commands go through the service API; by default the app runs in-process,
and ``--server URL`` points them at a remote deployment instead.
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .client import ServiceClient, ServiceError
from .experiment import ExperimentSettings, run_experiment, write_csv
from .service.schemas import (
    GenerateRequest,
    InstanceModel,
    SolveReport,
    SolveRequest,
    VerifyRequest,
)


@click.group()
@click.option("--server", default=None, help="Base URL of a remote service; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Maximum-lifetime schedules for wireless mesh networks."""
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(base_url=ctx.obj["server"])


def _fail_on_service_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ServiceError as exc:
            raise click.ClickException(exc.detail)

    return wrapper


def _load_instance(path: str) -> InstanceModel:
    with open(path) as fh:
        return InstanceModel.model_validate(json.load(fh))


@main.command()
@click.option("--nodes", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--battery", type=float, default=None, help="Uniform battery capacity.")
@click.option("--agg-cost", type=float, default=1.0, show_default=True)
@click.option("--tx-cost", type=float, default=5.0, show_default=True)
@click.option("--range", "comm_range", type=float, default=60.0, show_default=True,
              help="Communication range [m].")
@click.option("-o", "--output", type=click.Path(), required=True)
@click.pass_context
@_fail_on_service_error
def gen(ctx, nodes, seed, battery, agg_cost, tx_cost, comm_range, output):
    """Generate a random instance file for a supported study size."""
    with _client(ctx) as client:
        resp = client.generate(GenerateRequest(
            nodes=nodes, seed=seed, battery=battery,
            agg_cost=agg_cost, tx_cost=tx_cost, comm_range=comm_range,
        ))
    with open(output, "w") as fh:
        fh.write(resp.instance.model_dump_json(indent=2) + "\n")
    click.echo(f"wrote {output}: {nodes} nodes, {resp.num_arcs} arcs, demand reachable")


@main.command()
@click.argument("instance_file", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["full", "lp-only"]), default="full", show_default=True)
@click.option("--battery", type=float, default=None, help="Override/assign uniform capacities.")
@click.option("--max-iters", type=int, default=200, show_default=True)
@click.option("--time-limit", type=float, default=600.0, show_default=True,
              help="Per-pricing-solve time limit [s].")
@click.option("--budget", type=float, default=None,
              help="Wall-clock cap for column generation [s]; stops with the best LP so far.")
@click.option("-o", "--output", type=click.Path(), default=None, help="Report file (default stdout).")
@click.pass_context
@_fail_on_service_error
def solve(ctx, instance_file, mode, battery, max_iters, time_limit, budget, output):
    """Run price-and-branch on an instance file and emit a solution report."""
    instance = _load_instance(instance_file)
    with _client(ctx) as client:
        report = client.solve(SolveRequest(
            instance=instance,
            instance_ref=instance_file,
            mode=mode,
            battery=battery,
            max_iters=max_iters,
            pricing_time_limit=time_limit,
            time_budget=budget,
        ))
    payload = report.model_dump_json(indent=2) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    click.echo(
        f"lp={report.lp_lifetime:.4f} ip={report.ip_lifetime} "
        f"ratio={report.improvement_ratio:.4f} configs={report.configs_generated}",
        err=True,
    )
    if not report.proven_optimal:
        click.echo("warning: solve budget exhausted; LP optimality not proven", err=True)


@main.command()
@click.argument("instance_file", type=click.Path(exists=True))
@click.argument("report_file", type=click.Path(exists=True))
@click.pass_context
@_fail_on_service_error
def verify(ctx, instance_file, report_file):
    """Re-validate a solution report against its instance; exit 0 iff clean."""
    instance = _load_instance(instance_file)
    with open(report_file) as fh:
        report = SolveReport.model_validate(json.load(fh))
    with _client(ctx) as client:
        resp = client.verify(VerifyRequest(instance=instance, report=report))
    if resp.ok:
        click.echo("ok: all configurations valid, plan replays cleanly")
    else:
        for v in resp.violations:
            click.echo(f"violation: {v}", err=True)
        raise SystemExit(1)


@main.command()
@click.option("--sizes", default="10", show_default=True, help="Comma-separated network sizes.")
@click.option("--runs", type=int, default=20, show_default=True, help="Seeds per size.")
@click.option("--battery", type=float, default=100.0, show_default=True)
@click.option("--agg-cost", type=float, default=1.0, show_default=True)
@click.option("--tx-cost", type=float, default=5.0, show_default=True)
@click.option("--range", "comm_range", type=float, default=60.0, show_default=True)
@click.option("--mode", type=click.Choice(["full", "lp-only"]), default="full", show_default=True)
@click.option("--seed-base", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True, help="CSV output path.")
@click.pass_context
def experiment(ctx, sizes, runs, battery, agg_cost, tx_cost, comm_range, mode,
               seed_base, workers, output):
    """Batch-run generate+solve over sizes x seeds; write per-instance and aggregate CSV rows."""
    settings = ExperimentSettings(
        sizes=[int(s) for s in sizes.split(",") if s],
        runs=runs,
        battery=battery,
        agg_cost=agg_cost,
        tx_cost=tx_cost,
        comm_range=comm_range,
        mode=mode,
        seed_base=seed_base,
        workers=workers,
    )
    server = ctx.obj["server"]
    rows = run_experiment(settings, client_factory=lambda: ServiceClient(base_url=server))
    with open(output, "w", newline="") as fh:
        write_csv(rows, fh)
    failures = [r for r in rows if r["row_type"] == "instance" and r["status"] != "ok"]
    click.echo(f"wrote {output}: {len(rows)} rows, {len(failures)} failed instances")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the scheduling service under uvicorn."""
    import uvicorn

    uvicorn.run("meshlife.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
