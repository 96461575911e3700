import itertools

import pytest

from meshlife import netgen
from meshlife.model import Arc, NetworkInstance, NodeRole


def build_instance(roles, arc_pairs, battery=100.0, agg_cost=1.0, tx=5.0, k=1):
    arcs = tuple(
        Arc(id=i, tail=t, head=h, tx_energy=tx) for i, (t, h) in enumerate(arc_pairs)
    )
    powered = [v for v, r in enumerate(roles) if r is not NodeRole.DESTINATION]
    return NetworkInstance(
        roles=tuple(roles),
        arcs=arcs,
        battery={v: battery for v in powered},
        agg_cost={v: agg_cost for v in powered},
        k_demand=k,
    )


@pytest.fixture
def two_agg_instance():
    """Three origins, two aggregators, one destination, K=3.

    Origins 0 and 2 are locked to aggregators 3 and 4 respectively; origin 1
    can route through either, giving exactly two valid configurations.
    """
    roles = (NodeRole.ORIGIN,) * 3 + (NodeRole.AGGREGATOR,) * 2 + (NodeRole.DESTINATION,)
    return build_instance(
        roles,
        [(0, 3), (1, 3), (1, 4), (2, 4), (3, 5), (4, 5)],
        battery=100.0,
        k=3,
    )


@pytest.fixture
def chain_instance():
    """Single origin -> single destination over one direct arc, K=1."""
    roles = (NodeRole.ORIGIN, NodeRole.DESTINATION)
    return build_instance(roles, [(0, 1)], battery=100.0, k=1)


@pytest.fixture
def star_instance():
    """Three origins feeding one aggregator that serves the destination, K=3."""
    roles = (NodeRole.ORIGIN,) * 3 + (NodeRole.AGGREGATOR, NodeRole.DESTINATION)
    return build_instance(roles, [(0, 3), (1, 3), (2, 3), (3, 4)], battery=100.0, k=3)


def tiny_instances(count, seed_start=0, battery=100.0, max_tree_product=3000):
    """Feasible random instances with <= 6 nodes and K <= 2 for oracle tests.

    Draws whose routing-tree cross product exceeds ``max_tree_product`` are
    skipped so exhaustive-enumeration oracles stay fast.
    """
    from meshlife.verify import _origin_trees

    shapes = [
        dict(n_nodes=5, n_origins=2, n_destinations=1, n_aggregators=2, k_demand=2),
        dict(n_nodes=6, n_origins=2, n_destinations=1, n_aggregators=3, k_demand=2),
        dict(n_nodes=6, n_origins=3, n_destinations=2, n_aggregators=1, k_demand=2),
        dict(n_nodes=6, n_origins=2, n_destinations=2, n_aggregators=2, k_demand=1),
    ]
    out = []
    for seed in itertools.count(seed_start):
        if len(out) >= count:
            break
        shape = shapes[seed % len(shapes)]
        params = netgen.GenParams(area_width=100.0, comm_range=55.0, seed=seed, **shape)
        try:
            inst = netgen.generate_instance(params)
        except netgen.GenerationError:
            continue
        product = 1
        for o in inst.origins:
            product *= 1 + len(_origin_trees(inst, o))
        if product > max_tree_product:
            continue
        out.append(netgen.assign_batteries(inst, battery))
    return out
