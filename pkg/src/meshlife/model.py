"""Core domain types: network instances, operating configurations, timeshare plans.

All types are immutable after construction and safe to share across workers.
Energy units are abstract (relative costs); nothing here converts to Joules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

NodeId = int

ENERGY_TOL = 1e-9


class NodeRole(str, Enum):
    ORIGIN = "origin"
    AGGREGATOR = "aggregator"
    DESTINATION = "destination"


class ModelError(ValueError):
    """Raised for domain violations in instance or configuration data."""


@dataclass(frozen=True)
class Arc:
    """Directed communication arc with its transmission energy cost."""

    id: int
    tail: NodeId
    head: NodeId
    tx_energy: float

    def __post_init__(self):
        if self.tail == self.head:
            raise ModelError(f"arc {self.id}: self-loop at node {self.tail}")
        if self.tx_energy < 0:
            raise ModelError(f"arc {self.id}: negative transmission energy")


@dataclass(frozen=True)
class NetworkInstance:
    """A mesh network: node roles, arcs, batteries, aggregation costs, demand K.

    ``roles[v]`` gives the role of node ``v``; node ids are dense in [0, n).
    ``battery`` maps origin/aggregator nodes to positive capacities; it may be
    empty on a freshly generated instance (capacities assigned later) but when
    non-empty must cover exactly the origin and aggregator nodes.  Destinations
    carry no battery entry.  ``positions`` is optional geometry metadata.
    """

    roles: tuple[NodeRole, ...]
    arcs: tuple[Arc, ...]
    battery: Mapping[NodeId, float]
    agg_cost: Mapping[NodeId, float]
    k_demand: int
    positions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        n = len(self.roles)
        seen_pairs = set()
        for i, arc in enumerate(self.arcs):
            if arc.id != i:
                raise ModelError(f"arc ids must be dense and ordered; got {arc.id} at {i}")
            if not (0 <= arc.tail < n and 0 <= arc.head < n):
                raise ModelError(f"arc {arc.id}: endpoint outside [0, {n})")
            if self.roles[arc.tail] is NodeRole.DESTINATION:
                raise ModelError(f"arc {arc.id}: destinations have no outgoing arcs")
            if (arc.tail, arc.head) in seen_pairs:
                raise ModelError(f"duplicate arc ({arc.tail}, {arc.head})")
            seen_pairs.add((arc.tail, arc.head))
        powered = {v for v in range(n) if self.roles[v] is not NodeRole.DESTINATION}
        if self.battery:
            if set(self.battery) != powered:
                raise ModelError("battery must be defined on exactly the origin and aggregator nodes")
            for v, b in self.battery.items():
                if b <= 0:
                    raise ModelError(f"node {v}: battery capacity must be positive")
        for v, s in self.agg_cost.items():
            if not (0 <= v < n):
                raise ModelError(f"agg_cost references unknown node {v}")
            if s < 0:
                raise ModelError(f"node {v}: negative aggregation cost")
        n_origins = sum(1 for r in self.roles if r is NodeRole.ORIGIN)
        if not (1 <= self.k_demand <= n_origins):
            raise ModelError(f"k_demand={self.k_demand} must be in [1, {n_origins}]")
        if self.positions is not None and len(self.positions) != n:
            raise ModelError("positions must cover every node")

    @property
    def num_nodes(self) -> int:
        return len(self.roles)

    @cached_property
    def origins(self) -> tuple[NodeId, ...]:
        return tuple(v for v, r in enumerate(self.roles) if r is NodeRole.ORIGIN)

    @cached_property
    def aggregators(self) -> tuple[NodeId, ...]:
        return tuple(v for v, r in enumerate(self.roles) if r is NodeRole.AGGREGATOR)

    @cached_property
    def destinations(self) -> tuple[NodeId, ...]:
        return tuple(v for v, r in enumerate(self.roles) if r is NodeRole.DESTINATION)

    @cached_property
    def powered_nodes(self) -> tuple[NodeId, ...]:
        """Origin and aggregator nodes: the ones with battery constraints."""
        return tuple(v for v, r in enumerate(self.roles) if r is not NodeRole.DESTINATION)

    @cached_property
    def _in_arcs(self) -> tuple[tuple[Arc, ...], ...]:
        buckets: list[list[Arc]] = [[] for _ in range(self.num_nodes)]
        for arc in self.arcs:
            buckets[arc.head].append(arc)
        return tuple(tuple(b) for b in buckets)

    @cached_property
    def _out_arcs(self) -> tuple[tuple[Arc, ...], ...]:
        buckets: list[list[Arc]] = [[] for _ in range(self.num_nodes)]
        for arc in self.arcs:
            buckets[arc.tail].append(arc)
        return tuple(tuple(b) for b in buckets)

    def in_arcs(self, v: NodeId) -> tuple[Arc, ...]:
        return self._in_arcs[v]

    def out_arcs(self, v: NodeId) -> tuple[Arc, ...]:
        return self._out_arcs[v]

    def aggregation_cost(self, v: NodeId) -> float:
        return float(self.agg_cost.get(v, 0.0))

    def require_batteries(self) -> None:
        if not self.battery:
            raise ModelError("instance has no battery capacities assigned yet")


@dataclass(frozen=True)
class Configuration:
    """One valid operating mode: routing arcs per origin, deliveries, aggregation.

    ``delivery`` holds (origin, destination) pairs actually served;
    ``origin_arcs[o]`` is the arc-id set carrying o's measurement;
    ``flow`` holds (origin, destination, arc_id) triples;
    ``agg_pairs`` maps a sorted origin pair to the node where it is aggregated.
    The derived fields (``agg_count``, ``tx_energy_used``, ``depletion``) are
    stored redundantly; the verification oracle recomputes them independently.
    """

    delivery: frozenset[tuple[NodeId, NodeId]]
    origin_arcs: Mapping[NodeId, frozenset[int]]
    flow: frozenset[tuple[NodeId, NodeId, int]]
    used_arcs: frozenset[int]
    agg_pairs: Mapping[tuple[NodeId, NodeId], NodeId]
    origin_active: frozenset[NodeId]
    agg_count: Mapping[NodeId, int]
    tx_energy_used: Mapping[NodeId, float]
    depletion: Mapping[NodeId, float]

    def canonical_key(self) -> tuple:
        """Stable identity for deduplication across construction paths."""
        return (
            tuple(sorted(self.used_arcs)),
            tuple(sorted((o, tuple(sorted(a))) for o, a in self.origin_arcs.items())),
            tuple(sorted(self.delivery)),
        )

    def __hash__(self):
        return hash(self.canonical_key())

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.canonical_key() == other.canonical_key()


class PlanMode(str, Enum):
    FRACTIONAL = "fractional"
    INTEGER = "integer"


@dataclass(frozen=True)
class TimesharePlan:
    """Configurations with their timeshares; lifetime is the timeshare sum."""

    entries: tuple[tuple[Configuration, float], ...]
    mode: PlanMode

    def __post_init__(self):
        for _, t in self.entries:
            if t < -ENERGY_TOL:
                raise ModelError(f"negative timeshare {t}")

    @property
    def lifetime(self) -> float:
        return sum(t for _, t in self.entries)

    def positive_entries(self, tol: float = 1e-9) -> tuple[tuple[Configuration, float], ...]:
        return tuple((c, t) for c, t in self.entries if t > tol)


@dataclass(frozen=True)
class DualPrices:
    """Non-negative prices pi[v] over the battery-constrained nodes."""

    pi: Mapping[NodeId, float]

    def __post_init__(self):
        for v, p in self.pi.items():
            if p < 0:
                raise ModelError(f"node {v}: dual price must be non-negative, got {p}")


def energy_per_period(instance: NetworkInstance, config: Configuration, v: NodeId) -> float:
    """Energy node v spends in one measurement period under ``config``.

    Transmission energy plus per-aggregation cost; only defined for origin and
    aggregator nodes (destinations are energy-unconstrained).
    """
    if not (0 <= v < instance.num_nodes):
        raise ModelError(f"unknown node {v}")
    if instance.roles[v] is NodeRole.DESTINATION:
        raise ModelError(f"node {v} is a destination; it has no energy budget")
    return config.tx_energy_used.get(v, 0.0) + instance.aggregation_cost(v) * config.agg_count.get(v, 0)


def scale_batteries(instance: NetworkInstance, alpha: float) -> NetworkInstance:
    """Return a copy of the instance with every battery capacity scaled by alpha."""
    if alpha <= 0:
        raise ModelError(f"battery scale factor must be positive, got {alpha}")
    instance.require_batteries()
    return NetworkInstance(
        roles=instance.roles,
        arcs=instance.arcs,
        battery={v: alpha * b for v, b in instance.battery.items()},
        agg_cost=dict(instance.agg_cost),
        k_demand=instance.k_demand,
        positions=instance.positions,
    )


def build_configuration(
    instance: NetworkInstance,
    delivery: Iterable[tuple[NodeId, NodeId]],
    origin_arcs: Mapping[NodeId, Iterable[int]],
    flow: Iterable[tuple[NodeId, NodeId, int]],
) -> Configuration:
    """Assemble a Configuration from its primitive fields, computing all derived ones.

    Derivation follows the operating semantics: a node aggregates one packet per
    used incoming arc beyond the first (active origins count their own
    measurement as an extra packet), and transmits once at the highest arc cost
    among its used outgoing arcs.
    """
    instance.require_batteries()
    delivery = frozenset((int(o), int(d)) for o, d in delivery)
    origin_arcs_f = {int(o): frozenset(int(a) for a in arcs) for o, arcs in origin_arcs.items()}
    flow = frozenset((int(o), int(d), int(a)) for o, d, a in flow)

    used: set[int] = set()
    for arcs in origin_arcs_f.values():
        used |= arcs
    used_arcs = frozenset(used)

    origin_active = frozenset(o for o, _ in delivery)

    # Which origins' measurements each node receives, and on which arc.
    received: dict[NodeId, dict[NodeId, int]] = {}  # v -> origin -> arc id
    for o, arcs in origin_arcs_f.items():
        for a in arcs:
            head = instance.arcs[a].head
            received.setdefault(head, {})[o] = a

    agg_pairs: dict[tuple[NodeId, NodeId], NodeId] = {}
    for v, by_origin in received.items():
        origins_here = sorted(by_origin)
        for i, o1 in enumerate(origins_here):
            for o2 in origins_here[i + 1:]:
                if by_origin[o1] != by_origin[o2]:  # same arc = already one packet
                    agg_pairs[(o1, o2)] = v

    in_used = [0] * instance.num_nodes
    out_max_tx = [0.0] * instance.num_nodes
    for a in used_arcs:
        arc = instance.arcs[a]
        in_used[arc.head] += 1
        out_max_tx[arc.tail] = max(out_max_tx[arc.tail], arc.tx_energy)

    agg_count: dict[NodeId, int] = {}
    tx_energy_used: dict[NodeId, float] = {}
    depletion: dict[NodeId, float] = {}
    for v in range(instance.num_nodes):
        own = 1 if v in origin_active else 0
        packets = in_used[v] + own
        agg_count[v] = max(0, packets - 1)
        if instance.roles[v] is NodeRole.DESTINATION:
            continue
        tx_energy_used[v] = out_max_tx[v]
        energy = out_max_tx[v] + instance.aggregation_cost(v) * agg_count[v]
        depletion[v] = energy / instance.battery[v]

    return Configuration(
        delivery=delivery,
        origin_arcs=origin_arcs_f,
        flow=flow,
        used_arcs=used_arcs,
        agg_pairs=agg_pairs,
        origin_active=origin_active,
        agg_count=agg_count,
        tx_energy_used=tx_energy_used,
        depletion=depletion,
    )


def plan_is_battery_feasible(
    instance: NetworkInstance, plan: TimesharePlan, tol: float = ENERGY_TOL
) -> bool:
    """Check the aggregate depletion constraint sum_c t_c E(v,c) <= 1 per node."""
    for v in instance.powered_nodes:
        total = sum(t * c.depletion.get(v, 0.0) for c, t in plan.entries)
        if total > 1.0 + max(tol, 1e-9 * abs(total)):
            return False
    return True
