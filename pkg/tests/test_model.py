import pytest

from meshlife import master, pricing
from meshlife.model import (
    Arc,
    ModelError,
    NetworkInstance,
    NodeRole,
    build_configuration,
    energy_per_period,
    scale_batteries,
)

from conftest import build_instance, tiny_instances


class TestInstanceInvariants:
    def test_roles_partition_and_destination_silence(self):
        roles = (NodeRole.ORIGIN, NodeRole.DESTINATION)
        with pytest.raises(ModelError, match="destinations have no outgoing"):
            build_instance(roles, [(1, 0)], k=1)

    def test_self_loop_rejected(self):
        with pytest.raises(ModelError, match="self-loop"):
            Arc(id=0, tail=1, head=1, tx_energy=5.0)

    def test_duplicate_arc_rejected(self):
        roles = (NodeRole.ORIGIN, NodeRole.DESTINATION)
        with pytest.raises(ModelError, match="duplicate arc"):
            build_instance(roles, [(0, 1), (0, 1)], k=1)

    def test_battery_must_cover_exactly_powered_nodes(self):
        roles = (NodeRole.ORIGIN, NodeRole.AGGREGATOR, NodeRole.DESTINATION)
        arcs = (Arc(0, 0, 1, 5.0), Arc(1, 1, 2, 5.0))
        with pytest.raises(ModelError, match="battery"):
            NetworkInstance(roles=roles, arcs=arcs, battery={0: 100.0},
                            agg_cost={}, k_demand=1)
        with pytest.raises(ModelError, match="battery"):
            NetworkInstance(roles=roles, arcs=arcs, battery={0: 100.0, 1: 100.0, 2: 100.0},
                            agg_cost={}, k_demand=1)

    def test_k_demand_bounded_by_origin_count(self):
        roles = (NodeRole.ORIGIN, NodeRole.DESTINATION)
        with pytest.raises(ModelError, match="k_demand"):
            build_instance(roles, [(0, 1)], k=2)


class TestEnergyPerPeriod:
    def test_idle_node_has_zero_energy(self):
        roles = (NodeRole.ORIGIN, NodeRole.AGGREGATOR, NodeRole.DESTINATION)
        inst = build_instance(roles, [(0, 2), (0, 1), (1, 2)], k=1)
        config = build_configuration(
            inst, delivery=[(0, 2)], origin_arcs={0: [0]}, flow=[(0, 2, 0)]
        )
        assert energy_per_period(inst, config, 1) == 0.0

    def test_aggregator_with_two_inputs(self, two_agg_instance):
        # S=1, T=5: two receptions + one transmission -> 5 + 1 = 6
        config = build_configuration(
            two_agg_instance,
            delivery=[(0, 5), (1, 5), (2, 5)],
            origin_arcs={0: [0, 4], 1: [1, 4], 2: [3, 5]},
            flow=[(0, 5, 0), (0, 5, 4), (1, 5, 1), (1, 5, 4), (2, 5, 3), (2, 5, 5)],
        )
        assert energy_per_period(two_agg_instance, config, 3) == pytest.approx(6.0)

    def test_origin_transmit_only(self, two_agg_instance):
        config = pricing.min_energy_configuration(two_agg_instance)
        assert energy_per_period(two_agg_instance, config, 0) == pytest.approx(5.0)

    def test_destination_rejected(self, two_agg_instance):
        config = pricing.min_energy_configuration(two_agg_instance)
        with pytest.raises(ModelError, match="destination"):
            energy_per_period(two_agg_instance, config, 5)
        with pytest.raises(ModelError, match="unknown node"):
            energy_per_period(two_agg_instance, config, 99)

    def test_energy_identity_against_depletion(self, two_agg_instance):
        config = pricing.min_energy_configuration(two_agg_instance)
        for v in two_agg_instance.powered_nodes:
            energy = energy_per_period(two_agg_instance, config, v)
            assert energy == pytest.approx(
                config.depletion[v] * two_agg_instance.battery[v], abs=1e-9
            )


class TestScaleBatteries:
    def test_identity(self, two_agg_instance):
        scaled = scale_batteries(two_agg_instance, 1.0)
        assert scaled.battery == two_agg_instance.battery

    def test_doubling(self, two_agg_instance):
        scaled = scale_batteries(two_agg_instance, 2.0)
        assert all(b == 200.0 for b in scaled.battery.values())
        assert scaled.arcs == two_agg_instance.arcs

    def test_nonpositive_alpha_rejected(self, two_agg_instance):
        with pytest.raises(ModelError):
            scale_batteries(two_agg_instance, 0.0)
        with pytest.raises(ModelError):
            scale_batteries(two_agg_instance, -1.0)

    def test_lp_lifetime_scales_linearly(self):
        for inst in tiny_instances(3, seed_start=100):
            base = master.run_column_generation(inst).lp_plan.lifetime
            scaled_inst = scale_batteries(inst, 2.5)
            scaled = master.run_column_generation(scaled_inst).lp_plan.lifetime
            assert scaled == pytest.approx(2.5 * base, rel=1e-6)
