"""Random instance generation (unit-disk topologies), feasibility checks, and
the JSON instance file format.

Random stream: numpy's PCG64 (``np.random.default_rng(seed)``).  Per attempt
the draw order is fixed: first node positions (an (n, 2) uniform block), then
the role permutation.  Infeasible draws are retried on the same stream, so an
instance is a pure function of its GenParams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO

import numpy as np

from .model import Arc, ModelError, NetworkInstance, NodeId, NodeRole

# Study design rows: size -> (area width [m], K, |origins|, |destinations|, |aggregators|)
# The size-25 aggregator count is 11 so the role counts sum to the node count.
STUDY_PARAMS: dict[int, tuple[float, int, int, int, int]] = {
    10: (122.47, 3, 4, 2, 4),
    15: (150.0, 5, 6, 3, 6),
    20: (173.21, 6, 8, 3, 9),
    25: (193.65, 8, 10, 4, 11),
    30: (212.13, 9, 12, 5, 13),
}

DEFAULT_COMM_RANGE = 60.0
DEFAULT_TX_ENERGY = 5.0
DEFAULT_AGG_COST = 1.0
MAX_GENERATION_ATTEMPTS = 1000


class GenerationError(RuntimeError):
    """No feasible instance found within the attempt budget."""


class ParseError(ValueError):
    """Malformed instance file."""


@dataclass(frozen=True)
class GenParams:
    n_nodes: int
    area_width: float
    k_demand: int
    n_origins: int
    n_destinations: int
    n_aggregators: int
    comm_range: float = DEFAULT_COMM_RANGE
    seed: int = 0

    def __post_init__(self):
        if self.n_origins + self.n_destinations + self.n_aggregators != self.n_nodes:
            raise ModelError("role counts must sum to the node count")
        if not (1 <= self.k_demand <= self.n_origins):
            raise ModelError(f"K={self.k_demand} must be in [1, {self.n_origins}]")
        if self.area_width <= 0 or self.comm_range < 0:
            raise ModelError("area width must be positive and range non-negative")


def default_params(n_nodes: int, comm_range: float = DEFAULT_COMM_RANGE, seed: int = 0) -> GenParams:
    """Study-design parameters for a supported network size."""
    if n_nodes not in STUDY_PARAMS:
        supported = sorted(STUDY_PARAMS)
        raise ModelError(f"unsupported size {n_nodes}; supported sizes: {supported}")
    area, k, n_o, n_d, n_a = STUDY_PARAMS[n_nodes]
    return GenParams(
        n_nodes=n_nodes,
        area_width=area,
        k_demand=k,
        n_origins=n_o,
        n_destinations=n_d,
        n_aggregators=n_a,
        comm_range=comm_range,
        seed=seed,
    )


def _roles_from_permutation(params: GenParams, perm: np.ndarray) -> list[NodeRole]:
    roles = [NodeRole.AGGREGATOR] * params.n_nodes
    cut1 = params.n_origins
    cut2 = cut1 + params.n_destinations
    for v in perm[:cut1]:
        roles[int(v)] = NodeRole.ORIGIN
    for v in perm[cut1:cut2]:
        roles[int(v)] = NodeRole.DESTINATION
    return roles


def generate_instance(
    params: GenParams,
    tx_energy: float = DEFAULT_TX_ENERGY,
    agg_cost: float = DEFAULT_AGG_COST,
) -> NetworkInstance:
    """Draw a unit-disk instance; retry until the demand is reachable.

    Batteries are left unset; call assign_batteries before solving.
    """
    rng = np.random.default_rng(params.seed)
    last = None
    for _ in range(MAX_GENERATION_ATTEMPTS):
        positions = rng.random((params.n_nodes, 2)) * params.area_width
        perm = rng.permutation(params.n_nodes)
        roles = _roles_from_permutation(params, perm)

        arcs: list[Arc] = []
        for u in range(params.n_nodes):
            if roles[u] is NodeRole.DESTINATION:
                continue
            for w in range(params.n_nodes):
                if u == w:
                    continue
                if np.hypot(*(positions[u] - positions[w])) <= params.comm_range:
                    arcs.append(Arc(id=len(arcs), tail=u, head=w, tx_energy=tx_energy))

        instance = NetworkInstance(
            roles=tuple(roles),
            arcs=tuple(arcs),
            battery={},
            agg_cost={v: agg_cost for v in range(params.n_nodes) if roles[v] is not NodeRole.DESTINATION},
            k_demand=params.k_demand,
            positions=tuple((float(x), float(y)) for x, y in positions),
        )
        last = instance
        if check_feasibility(instance):
            return instance
    raise GenerationError(
        f"no feasible topology in {MAX_GENERATION_ATTEMPTS} draws for {params} "
        f"(last draw had {len(last.arcs) if last else 0} arcs)"
    )


def check_feasibility(instance: NetworkInstance) -> bool:
    """Necessary condition: every destination can be reached by >= K origins.

    Computed by reverse reachability; sufficiency is certified only by a
    successful pricing solve.
    """
    k = instance.k_demand
    for d in instance.destinations:
        seen = {d}
        stack = [d]
        while stack:
            v = stack.pop()
            for arc in instance.in_arcs(v):
                if arc.tail not in seen:
                    seen.add(arc.tail)
                    stack.append(arc.tail)
        if sum(1 for o in instance.origins if o in seen) < k:
            return False
    return True


def assign_batteries(instance: NetworkInstance, capacity: float) -> NetworkInstance:
    """Set a uniform battery capacity on every origin and aggregator node."""
    if capacity <= 0:
        raise ModelError(f"battery capacity must be positive, got {capacity}")
    return NetworkInstance(
        roles=instance.roles,
        arcs=instance.arcs,
        battery={v: float(capacity) for v in instance.powered_nodes},
        agg_cost=dict(instance.agg_cost),
        k_demand=instance.k_demand,
        positions=instance.positions,
    )


def instance_to_dict(instance: NetworkInstance) -> dict:
    pos = instance.positions or tuple((0.0, 0.0) for _ in range(instance.num_nodes))
    return {
        "nodes": [
            {"id": v, "role": instance.roles[v].value, "x": pos[v][0], "y": pos[v][1]}
            for v in range(instance.num_nodes)
        ],
        "arcs": [
            {"tail": a.tail, "head": a.head, "tx_energy": a.tx_energy} for a in instance.arcs
        ],
        "battery": {str(v): b for v, b in sorted(instance.battery.items())},
        "agg_cost": {str(v): s for v, s in sorted(instance.agg_cost.items())},
        "k_demand": instance.k_demand,
    }


def instance_from_dict(data: dict) -> NetworkInstance:
    try:
        nodes = data["nodes"]
        ids = [int(n["id"]) for n in nodes]
        if sorted(ids) != list(range(len(ids))):
            raise ParseError("node ids must be dense in [0, n)")
        roles: list[NodeRole] = [NodeRole.AGGREGATOR] * len(ids)
        positions: list[tuple[float, float]] = [(0.0, 0.0)] * len(ids)
        for n in nodes:
            v = int(n["id"])
            try:
                roles[v] = NodeRole(n["role"])
            except ValueError as exc:
                raise ParseError(f"node {v}: unknown role {n['role']!r}") from exc
            positions[v] = (float(n["x"]), float(n["y"]))
        arcs = tuple(
            Arc(id=i, tail=int(a["tail"]), head=int(a["head"]), tx_energy=float(a["tx_energy"]))
            for i, a in enumerate(data["arcs"])
        )
        instance = NetworkInstance(
            roles=tuple(roles),
            arcs=arcs,
            battery={int(v): float(b) for v, b in data.get("battery", {}).items()},
            agg_cost={int(v): float(s) for v, s in data.get("agg_cost", {}).items()},
            k_demand=int(data["k_demand"]),
            positions=tuple(positions),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed instance data: {exc}") from exc
    return instance


def write_instance(instance: NetworkInstance, sink: IO[str] | str) -> None:
    payload = json.dumps(instance_to_dict(instance), indent=2, sort_keys=True)
    if isinstance(sink, str):
        with open(sink, "w") as fh:
            fh.write(payload + "\n")
    else:
        sink.write(payload + "\n")


def read_instance(source: IO[str] | str) -> NetworkInstance:
    if isinstance(source, str):
        with open(source) as fh:
            text = fh.read()
    else:
        text = source.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)
