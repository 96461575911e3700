"""Pydantic request/response models for the scheduling service.

The instance payload mirrors the on-disk instance file exactly, and the solve
report model is the report file format, so files and API bodies are
interchangeable.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class NodeModel(BaseModel):
    id: int
    role: Literal["origin", "aggregator", "destination"]
    x: float = 0.0
    y: float = 0.0


class ArcModel(BaseModel):
    tail: int
    head: int
    tx_energy: float


class InstanceModel(BaseModel):
    nodes: list[NodeModel]
    arcs: list[ArcModel]
    battery: dict[int, float] = Field(default_factory=dict)
    agg_cost: dict[int, float] = Field(default_factory=dict)
    k_demand: int


class GenerateRequest(BaseModel):
    nodes: int = 10
    seed: int = 0
    battery: float | None = None
    agg_cost: float = 1.0
    tx_cost: float = 5.0
    comm_range: float = 60.0


class GenerateResponse(BaseModel):
    instance: InstanceModel
    feasible: bool
    num_arcs: int


class ConfigurationModel(BaseModel):
    id: int
    delivery: list[tuple[int, int]]
    origin_arcs: dict[int, list[int]]
    flow: list[tuple[int, int, int]]
    used_arcs: list[int]
    agg_pairs: list[tuple[int, int, int]]  # (origin, origin, node)
    origin_active: list[int]
    agg_count: dict[int, int]
    tx_energy_used: dict[int, float]
    depletion: dict[int, float]


class PlanEntryModel(BaseModel):
    config_id: int
    timeshare: float


class TimingsModel(BaseModel):
    master_lp: float
    pricing_total: float
    master_ip: float


class SolveReport(BaseModel):
    instance_ref: str = ""
    lp_lifetime: float
    ip_lifetime: float | None = None
    ip_restricted_lifetime: float | None = None
    lr_floor: float | None = None
    lr_ceiling: float | None = None
    improvement_ratio: float
    iterations: int
    configs_generated: int
    configs_used: int
    min_timeshare_fraction: float | None = None
    proven_optimal: bool = True
    timings: TimingsModel
    plan: list[PlanEntryModel]  # integer plan (full IP) unless lp-only
    lp_plan: list[PlanEntryModel]
    configs: list[ConfigurationModel]


class SolveRequest(BaseModel):
    instance: InstanceModel
    instance_ref: str = ""
    mode: Literal["full", "lp-only"] = "full"
    battery: float | None = None  # overrides/assigns uniform capacities
    max_iters: int = 200
    pricing_time_limit: float | None = 600.0
    time_budget: float | None = None  # wall-clock cap for column generation


class VerifyRequest(BaseModel):
    instance: InstanceModel
    report: SolveReport


class VerifyResponse(BaseModel):
    ok: bool
    violations: list[str]
