import pytest

from meshlife import master, verify
from meshlife.model import (
    DualPrices,
    ModelError,
    NodeRole,
    build_configuration,
)
from meshlife.pricing import min_energy_configuration

from conftest import build_instance, tiny_instances


class TestMasterLp:
    def test_single_config_timeshare(self, two_agg_instance):
        config = min_energy_configuration(two_agg_instance)
        plan, duals = master.solve_master_lp(two_agg_instance, [config])
        # worst depletion 6/100 -> lifetime 100/6
        assert plan.lifetime == pytest.approx(100.0 / 6.0)
        # strong duality: the depletion budgets all have rhs 1
        assert sum(duals.pi.values()) == pytest.approx(plan.lifetime)

    def test_empty_config_list_rejected(self, two_agg_instance):
        with pytest.raises(ModelError, match="at least one"):
            master.solve_master_lp(two_agg_instance, [])

    def test_free_configuration_guarded(self):
        # A configuration that depletes no battery would make the LP unbounded.
        roles = (NodeRole.ORIGIN, NodeRole.AGGREGATOR, NodeRole.DESTINATION)
        inst = build_instance(roles, [(0, 2), (0, 1), (1, 2)], k=1)
        config = build_configuration(
            inst, delivery=[(0, 2)], origin_arcs={0: [0]}, flow=[(0, 2, 0)]
        )
        free = type(config)(
            delivery=config.delivery,
            origin_arcs=config.origin_arcs,
            flow=config.flow,
            used_arcs=config.used_arcs,
            agg_pairs=config.agg_pairs,
            origin_active=config.origin_active,
            agg_count=config.agg_count,
            tx_energy_used=config.tx_energy_used,
            depletion={v: 0.0 for v in inst.powered_nodes},
        )
        with pytest.raises(ModelError, match="free configuration"):
            master.solve_master_lp(inst, [free])


class TestColumnGeneration:
    def test_two_agg_reaches_known_optimum(self, two_agg_instance):
        state = master.run_column_generation(two_agg_instance)
        assert state.proven_optimal
        assert len(state.configs) == 2
        assert state.lp_plan.lifetime == pytest.approx(200.0 / 11.0, rel=1e-9)
        # symmetric optimum: both aggregators priced at 100/11
        assert state.duals.pi[3] == pytest.approx(100.0 / 11.0, rel=1e-6)
        assert state.duals.pi[4] == pytest.approx(100.0 / 11.0, rel=1e-6)

    def test_lp_lifetime_is_monotone_over_iterations(self):
        for inst in tiny_instances(3, seed_start=60):
            state = master.run_column_generation(inst)
            lifetimes = [lv for _, lv in state.trace]
            assert all(b >= a - 1e-9 for a, b in zip(lifetimes, lifetimes[1:]))
            assert state.proven_optimal

    def test_iteration_budget_respected(self, two_agg_instance):
        state = master.run_column_generation(
            two_agg_instance, master.ColGenOptions(max_iters=1)
        )
        assert state.iterations == 1
        assert not state.proven_optimal

    def test_time_budget_stops_generation(self, two_agg_instance):
        state = master.run_column_generation(
            two_agg_instance, master.ColGenOptions(time_budget=0.0)
        )
        assert not state.proven_optimal
        assert len(state.configs) == 1
        assert state.lp_plan.lifetime > 0.0

    def test_seeding_with_initial_configs(self, two_agg_instance):
        seed = min_energy_configuration(two_agg_instance)
        state = master.run_column_generation(
            two_agg_instance, master.ColGenOptions(initial_configs=[seed])
        )
        assert state.configs[0] is seed
        assert state.lp_plan.lifetime == pytest.approx(200.0 / 11.0, rel=1e-9)


class TestPriceAndBranch:
    def test_two_agg_bundle_values(self, two_agg_instance):
        bundle = master.price_and_branch(two_agg_instance)
        assert bundle.lp.lifetime == pytest.approx(200.0 / 11.0, rel=1e-9)
        assert bundle.ip_full.lifetime == 18.0
        assert bundle.ip_restricted.lifetime == 18.0
        assert bundle.lr_floor.lifetime == 18.0
        assert bundle.lr_ceiling_value == 20.0
        ratio = master.improvement_ratio(two_agg_instance, bundle)
        assert ratio == pytest.approx(12.0 / 11.0, rel=1e-9)

    def test_bound_chain_on_random_instances(self):
        for inst in tiny_instances(4, seed_start=80):
            bundle = master.price_and_branch(inst)
            assert (
                bundle.lr_floor.lifetime
                <= bundle.ip_restricted.lifetime
                <= bundle.ip_full.lifetime
                <= bundle.lp.lifetime + 1e-9
                <= bundle.lr_ceiling_value + 1e-9
            )
            assert master.improvement_ratio(inst, bundle) >= 1.0 - 1e-9

    def test_integer_plans_are_battery_feasible(self):
        for inst in tiny_instances(3, seed_start=120):
            bundle = master.price_and_branch(inst)
            for plan in (bundle.lr_floor, bundle.ip_restricted, bundle.ip_full):
                sim = verify.simulate_plan(inst, plan)
                assert sim.ok, sim.failure

    def test_single_config_lifetime(self, two_agg_instance):
        config = min_energy_configuration(two_agg_instance)
        assert master.single_config_lifetime(two_agg_instance, config) == pytest.approx(
            100.0 / 6.0
        )


class TestAgainstBruteForce:
    def test_colgen_matches_enumeration_lp(self):
        for inst in tiny_instances(5, seed_start=200):
            state = master.run_column_generation(inst)
            oracle = verify.brute_force_lifetime(inst)
            assert state.lp_plan.lifetime == pytest.approx(oracle, rel=1e-6)
