"""Batch experiment harness: generate + solve over sizes x seeds, emit CSV.

Per-instance rows come first (ordered by size then seed, regardless of worker
completion order), followed by one ``mean`` and one ``ci95`` row per size
(Student-t 95% confidence half-widths).  The column set below is the stable
CSV schema; columns are never reordered within a major version.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np
from scipy import stats

from .client import ServiceClient, ServiceError
from .service.schemas import GenerateRequest, SolveRequest

CSV_COLUMNS = [
    "row_type",
    "size",
    "seed",
    "status",
    "lp_lifetime",
    "ip_lifetime",
    "ip_restricted_lifetime",
    "lr_floor",
    "lr_ceiling",
    "improvement_ratio",
    "iterations",
    "configs_generated",
    "configs_used",
    "min_timeshare_fraction",
    "time_master_lp",
    "time_pricing_total",
    "time_master_ip",
]

_NUMERIC = CSV_COLUMNS[4:]


@dataclass
class ExperimentSettings:
    sizes: list[int]
    runs: int = 20
    battery: float = 100.0
    agg_cost: float = 1.0
    tx_cost: float = 5.0
    comm_range: float = 60.0
    mode: str = "full"
    seed_base: int = 1
    workers: int = 1


def _run_one(settings: ExperimentSettings, size: int, seed: int,
             client_factory: Callable[[], ServiceClient]) -> dict:
    row: dict = {c: "" for c in CSV_COLUMNS}
    row.update(row_type="instance", size=size, seed=seed, status="ok")
    try:
        with client_factory() as client:
            gen = client.generate(GenerateRequest(
                nodes=size,
                seed=seed,
                battery=settings.battery,
                agg_cost=settings.agg_cost,
                tx_cost=settings.tx_cost,
                comm_range=settings.comm_range,
            ))
            report = client.solve(SolveRequest(
                instance=gen.instance,
                instance_ref=f"size{size}-seed{seed}",
                mode=settings.mode,  # type: ignore[arg-type]
            ))
    except ServiceError as exc:
        row["status"] = f"error: {exc.detail}"
        return row
    row.update(
        lp_lifetime=report.lp_lifetime,
        ip_lifetime=report.ip_lifetime,
        ip_restricted_lifetime=report.ip_restricted_lifetime,
        lr_floor=report.lr_floor,
        lr_ceiling=report.lr_ceiling,
        improvement_ratio=report.improvement_ratio,
        iterations=report.iterations,
        configs_generated=report.configs_generated,
        configs_used=report.configs_used,
        min_timeshare_fraction=report.min_timeshare_fraction,
        time_master_lp=report.timings.master_lp,
        time_pricing_total=report.timings.pricing_total,
        time_master_ip=report.timings.master_ip,
    )
    return row


def _aggregate(size: int, rows: list[dict]) -> list[dict]:
    mean_row: dict = {c: "" for c in CSV_COLUMNS}
    ci_row: dict = {c: "" for c in CSV_COLUMNS}
    mean_row.update(row_type="mean", size=size, status="")
    ci_row.update(row_type="ci95", size=size, status="")
    for col in _NUMERIC:
        values = np.array([float(r[col]) for r in rows if r["status"] == "ok" and r[col] != "" and r[col] is not None])
        if values.size == 0:
            continue
        mean_row[col] = float(values.mean())
        if values.size > 1:
            half = stats.t.ppf(0.975, values.size - 1) * values.std(ddof=1) / np.sqrt(values.size)
            ci_row[col] = float(half)
        else:
            ci_row[col] = 0.0
    return [mean_row, ci_row]


def run_experiment(
    settings: ExperimentSettings,
    client_factory: Callable[[], ServiceClient] = ServiceClient,
) -> list[dict]:
    jobs = [
        (size, settings.seed_base + i)
        for size in settings.sizes
        for i in range(settings.runs)
    ]
    if settings.workers <= 1:
        results = [_run_one(settings, size, seed, client_factory) for size, seed in jobs]
    else:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(
                pool.map(lambda job: _run_one(settings, job[0], job[1], client_factory), jobs)
            )
    results.sort(key=lambda r: (r["size"], r["seed"]))

    rows: list[dict] = []
    for size in settings.sizes:
        size_rows = [r for r in results if r["size"] == size]
        rows.extend(size_rows)
        rows.extend(_aggregate(size, size_rows))
    return rows


def write_csv(rows: list[dict], sink: IO[str]) -> None:
    writer = csv.DictWriter(sink, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
