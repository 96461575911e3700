"""Independent correctness oracle.

The validator re-derives validity from the operating rules (delivery counts,
acyclic per-measurement routing, single reception, single aggregation point,
energy recomputation) rather than from the pricing model, so it can catch
model-building and extraction bugs.  Also: period-by-period plan replay and
exhaustive configuration enumeration for tiny instances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product

from .master import solve_master_lp
from .model import (
    Configuration,
    NetworkInstance,
    NodeRole,
    PlanMode,
    TimesharePlan,
    build_configuration,
)

ENERGY_MATCH_TOL = 1e-6
BATTERY_TOL = 1e-9
ENUM_NODE_LIMIT = 8


class EnumerationGuardError(RuntimeError):
    """Instance too large for exhaustive enumeration."""


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


@dataclass
class SimulationResult:
    achieved_lifetime: int
    final_battery: dict[int, float]
    ok: bool
    violations: list[str] = field(default_factory=list)


def validate_configuration(instance: NetworkInstance, config: Configuration) -> ValidationReport:
    """Check a configuration against the operational definition of validity.

    Every failed check becomes a report entry; nothing raises.
    """
    violations: list[str] = []

    # (a) demand: each destination receives at least K distinct measurements.
    for d in instance.destinations:
        got = sum(1 for (o, dd) in config.delivery if dd == d)
        if got < instance.k_demand:
            violations.append(
                f"(a) destination {d} receives {got} < K={instance.k_demand} measurements"
            )

    # (b) each delivered (o, d) pair is connected by conserved flow on used arcs.
    for (o, d) in sorted(config.delivery):
        arcs_od = [instance.arcs[a] for (oo, dd, a) in config.flow if oo == o and dd == d]
        ok, why = _check_flow_path(instance, o, d, arcs_od)
        if not ok:
            violations.append(f"(b) pair ({o},{d}): {why}")
        for arc in arcs_od:
            if arc.id not in config.origin_arcs.get(o, frozenset()):
                violations.append(f"(b) pair ({o},{d}): flow arc {arc.id} not marked for origin {o}")

    # (c) no node receives a given origin's measurement on more than one arc.
    for o, arcs in sorted(config.origin_arcs.items()):
        heads: dict[int, int] = {}
        for a in sorted(arcs):
            head = instance.arcs[a].head
            heads[head] = heads.get(head, 0) + 1
        for v, cnt in heads.items():
            if cnt > 1:
                violations.append(f"(c) node {v} receives origin {o}'s measurement on {cnt} arcs")

    # (d) each origin pair is aggregated at no more than one node.
    meeting_points = _aggregation_points(instance, config)
    for pair, nodes in sorted(meeting_points.items()):
        if len(nodes) > 1:
            violations.append(f"(d) origin pair {pair} aggregated at {sorted(nodes)}")

    # (e) stored derived fields match an independent recomputation.
    recomputed = _recompute_energy(instance, config)
    for v in range(instance.num_nodes):
        if recomputed["agg_count"][v] != config.agg_count.get(v, 0):
            violations.append(
                f"(e) node {v}: aggregation count {config.agg_count.get(v, 0)} "
                f"!= recomputed {recomputed['agg_count'][v]}"
            )
    for v in instance.powered_nodes:
        if abs(recomputed["tx_energy"][v] - config.tx_energy_used.get(v, 0.0)) > ENERGY_MATCH_TOL:
            violations.append(
                f"(e) node {v}: transmission energy {config.tx_energy_used.get(v, 0.0)} "
                f"!= recomputed {recomputed['tx_energy'][v]}"
            )
        if abs(recomputed["depletion"][v] - config.depletion.get(v, 0.0)) > ENERGY_MATCH_TOL:
            violations.append(
                f"(e) node {v}: depletion {config.depletion.get(v, 0.0)} "
                f"!= recomputed {recomputed['depletion'][v]}"
            )

    # (f) destinations transmit nothing.
    for a in sorted(config.used_arcs):
        tail = instance.arcs[a].tail
        if instance.roles[tail] is NodeRole.DESTINATION:
            violations.append(f"(f) used arc {a} leaves destination {tail}")

    return ValidationReport(ok=not violations, violations=violations)


def _check_flow_path(instance, o, d, arcs) -> tuple[bool, str]:
    if not arcs:
        return False, "no flow arcs"
    out_deg: dict[int, int] = {}
    in_deg: dict[int, int] = {}
    for arc in arcs:
        out_deg[arc.tail] = out_deg.get(arc.tail, 0) + 1
        in_deg[arc.head] = in_deg.get(arc.head, 0) + 1
    nodes = set(out_deg) | set(in_deg)
    for v in nodes:
        net = out_deg.get(v, 0) - in_deg.get(v, 0)
        if v == o and net != 1:
            return False, f"net outflow at origin is {net}, expected 1"
        if v == d and net != -1:
            return False, f"net inflow at destination is {-net}, expected 1"
        if v not in (o, d) and net != 0:
            return False, f"flow not conserved at node {v}"
    # Reachability along the flow arcs.
    reach = {o}
    frontier = [o]
    adj: dict[int, list[int]] = {}
    for arc in arcs:
        adj.setdefault(arc.tail, []).append(arc.head)
    while frontier:
        v = frontier.pop()
        for w in adj.get(v, ()):
            if w not in reach:
                reach.add(w)
                frontier.append(w)
    if d not in reach:
        return False, "destination unreachable along flow arcs"
    return True, ""


def _aggregation_points(instance, config) -> dict[tuple[int, int], set[int]]:
    """Nodes where two origins' measurements arrive on distinct arcs."""
    received: dict[int, dict[int, int]] = {}  # node -> origin -> arriving arc
    for o, arcs in config.origin_arcs.items():
        for a in arcs:
            received.setdefault(instance.arcs[a].head, {})[o] = a
    points: dict[tuple[int, int], set[int]] = {}
    for v, by_origin in received.items():
        origins = sorted(by_origin)
        for i, o1 in enumerate(origins):
            for o2 in origins[i + 1:]:
                if by_origin[o1] != by_origin[o2]:
                    points.setdefault((o1, o2), set()).add(v)
    return points


def _recompute_energy(instance, config) -> dict:
    """Re-derive packet counts and energies from the per-origin arc sets only."""
    n = instance.num_nodes
    incoming_packets = [0] * n
    tx_energy = [0.0] * n
    arcs_used = set()
    for arcs in config.origin_arcs.values():
        arcs_used |= set(arcs)
    for a in arcs_used:
        arc = instance.arcs[a]
        incoming_packets[arc.head] += 1
        tx_energy[arc.tail] = max(tx_energy[arc.tail], arc.tx_energy)
    agg_count = []
    depletion = [0.0] * n
    for v in range(n):
        packets = incoming_packets[v] + (1 if v in config.origin_active else 0)
        agg_count.append(max(0, packets - 1))
        if instance.roles[v] is not NodeRole.DESTINATION and instance.battery:
            depletion[v] = (
                tx_energy[v] + instance.aggregation_cost(v) * agg_count[v]
            ) / instance.battery[v]
    return {"agg_count": agg_count, "tx_energy": tx_energy, "depletion": depletion}


def recompute_energy(instance: NetworkInstance, config: Configuration, v: int) -> float:
    """Independently recomputed per-period energy of node v (oracle counterpart)."""
    r = _recompute_energy(instance, config)
    return r["tx_energy"][v] + instance.aggregation_cost(v) * r["agg_count"][v]


def simulate_plan(instance: NetworkInstance, plan: TimesharePlan) -> SimulationResult:
    """Replay an integer plan period by period against the battery budgets."""
    if plan.mode is PlanMode.FRACTIONAL:
        warnings.warn("fractional plan simulated by the floor of its timeshares")
    instance.require_batteries()
    battery = {v: float(instance.battery[v]) for v in instance.powered_nodes}
    violations: list[str] = []
    periods = 0

    for config, t in plan.entries:
        t_int = math.floor(t + 1e-9)
        if t_int <= 0:
            continue
        report = validate_configuration(instance, config)
        if not report.ok:
            violations.append(f"configuration invalid at period {periods + 1}: {report.violations[0]}")
            return SimulationResult(periods, battery, False, violations)
        per_period = {
            v: config.tx_energy_used.get(v, 0.0)
            + instance.aggregation_cost(v) * config.agg_count.get(v, 0)
            for v in instance.powered_nodes
        }
        for _ in range(t_int):
            for v in instance.powered_nodes:
                battery[v] -= per_period[v]
            periods += 1
            drained = [v for v in instance.powered_nodes if battery[v] < -BATTERY_TOL]
            if drained:
                violations.append(
                    f"battery of node {drained[0]} negative ({battery[drained[0]]:.6g}) "
                    f"in period {periods}"
                )
                return SimulationResult(periods, battery, False, violations)

    return SimulationResult(periods, battery, True, violations)


def _origin_trees(instance: NetworkInstance, o: int):
    """All out-trees rooted at origin o whose leaves are all destinations.

    Yields (frozenset of arc ids, frozenset of delivered destinations).
    Trees never revisit a node, so each node receives the measurement at most
    once; destinations are always leaves because they have no outgoing arcs.
    """
    results: list[tuple[frozenset, frozenset]] = []

    def extend(nodes: set[int], arcs: frozenset, open_nodes: tuple[int, ...]):
        if not open_nodes:
            delivered = frozenset(v for v in nodes if instance.roles[v] is NodeRole.DESTINATION)
            if delivered:
                results.append((arcs, delivered))
            return
        u, rest = open_nodes[0], open_nodes[1:]
        candidates = [a for a in instance.out_arcs(u) if a.head not in nodes]
        # Every non-destination leaf must forward; branch over non-empty subsets
        # of distinct-head outgoing arcs.
        heads_seen = set()
        arcs_by_head = []
        for a in candidates:
            if a.head not in heads_seen:
                heads_seen.add(a.head)
                arcs_by_head.append(a)
        m = len(arcs_by_head)
        for mask in range(1, 1 << m):
            chosen = [arcs_by_head[i] for i in range(m) if mask >> i & 1]
            new_nodes = set(nodes)
            new_open = list(rest)
            ok = True
            for a in chosen:
                if a.head in new_nodes:
                    ok = False
                    break
                new_nodes.add(a.head)
                if instance.roles[a.head] is not NodeRole.DESTINATION:
                    new_open.append(a.head)
            if ok:
                extend(new_nodes, arcs | frozenset(a.id for a in chosen), tuple(new_open))

    if instance.roles[o] is not NodeRole.DESTINATION:
        extend({o}, frozenset(), (o,))
    return results


def _tree_paths(instance, o, arcs: frozenset, delivered: frozenset):
    """Flow triples (o, d, arc) for each delivered destination: the tree branch to d."""
    parent_arc: dict[int, int] = {}
    for a in arcs:
        parent_arc[instance.arcs[a].head] = a
    flow = []
    for d in delivered:
        v = d
        while v != o:
            a = parent_arc[v]
            flow.append((o, d, a))
            v = instance.arcs[a].tail
    return flow


def enumerate_configurations(
    instance: NetworkInstance,
    limit: int | None = None,
    minimal_only: bool = True,
) -> list[Configuration]:
    """Exhaustively enumerate valid configurations of a tiny instance.

    With ``minimal_only``, configurations whose used-arc set strictly contains
    another valid one with pointwise-dominated depletion are dropped; dominated
    columns never improve the max-lifetime LP.  The result is complete when not
    truncated by ``limit``.
    """
    if instance.num_nodes > ENUM_NODE_LIMIT:
        raise EnumerationGuardError(
            f"{instance.num_nodes} nodes exceeds the enumeration guard ({ENUM_NODE_LIMIT})"
        )
    instance.require_batteries()

    choices = []
    for o in instance.origins:
        trees = _origin_trees(instance, o)
        # head -> arriving arc per tree, for the pairwise aggregation check
        annotated = [
            (arcs, delivered, {instance.arcs[a].head: a for a in arcs})
            for arcs, delivered in trees
        ]
        choices.append([None] + annotated)  # None = origin inactive

    configs: dict[tuple, Configuration] = {}
    for combo in product(*choices):
        per_dest = {d: 0 for d in instance.destinations}
        for item in combo:
            if item is None:
                continue
            for d in item[1]:
                per_dest[d] += 1
        if any(cnt < instance.k_demand for cnt in per_dest.values()):
            continue
        # Trees are valid individually; combined they can only violate the
        # single-aggregation-point rule: a pair of origins arriving on
        # distinct arcs at two or more nodes.
        active = [item for item in combo if item is not None]
        bad = False
        for i, (_, _, heads1) in enumerate(active):
            for _, _, heads2 in active[i + 1:]:
                meets = 0
                small, big = (heads1, heads2) if len(heads1) <= len(heads2) else (heads2, heads1)
                for v, a in small.items():
                    if v in big and big[v] != a:
                        meets += 1
                        if meets > 1:
                            bad = True
                            break
                if bad:
                    break
            if bad:
                break
        if bad:
            continue
        delivery = []
        origin_arcs = {}
        flow = []
        for o, item in zip(instance.origins, combo):
            if item is None:
                continue
            arcs, delivered, _ = item
            origin_arcs[o] = arcs
            for d in delivered:
                delivery.append((o, d))
            flow.extend(_tree_paths(instance, o, arcs, delivered))
        config = build_configuration(instance, delivery, origin_arcs, flow)
        configs.setdefault(config.canonical_key(), config)

    ordered = [configs[k] for k in sorted(configs)]
    if minimal_only:
        ordered = _filter_dominated(instance, ordered)
    # Every tree combination is valid by construction; re-validating the
    # surviving set cross-checks the two independent code paths.
    for config in ordered:
        report = validate_configuration(instance, config)
        if not report.ok:
            raise EnumerationGuardError(
                f"enumerated configuration failed validation: {report.violations}"
            )
    if limit is not None:
        ordered = ordered[:limit]
    return ordered


def _filter_dominated(instance, configs):
    # A dominating configuration uses a strict subset of arcs, so comparing
    # against smaller arc sets only keeps the scan near-linear in practice.
    by_size = sorted(configs, key=lambda c: len(c.used_arcs))
    kept = []
    for c in configs:
        dominated = False
        for other in by_size:
            if len(other.used_arcs) >= len(c.used_arcs):
                break
            if other.used_arcs < c.used_arcs and all(
                other.depletion.get(v, 0.0) <= c.depletion.get(v, 0.0) + 1e-12
                for v in instance.powered_nodes
            ):
                dominated = True
                break
        if not dominated:
            kept.append(c)
    return kept


def brute_force_lifetime(instance: NetworkInstance) -> float:
    """Ground-truth LP lifetime: master LP over the complete enumeration."""
    configs = enumerate_configurations(instance, limit=None)
    if not configs:
        raise EnumerationGuardError("instance admits no valid configuration")
    plan, _ = solve_master_lp(instance, configs)
    return plan.lifetime
