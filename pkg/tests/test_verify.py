import dataclasses

import pytest

from meshlife import master, verify
from meshlife.model import PlanMode, TimesharePlan, build_configuration
from meshlife.pricing import min_energy_configuration

from conftest import tiny_instances


def two_agg_configs(inst):
    """The two valid configurations of the fixture, built by hand."""
    via3 = build_configuration(
        inst,
        delivery=[(0, 5), (1, 5), (2, 5)],
        origin_arcs={0: [0, 4], 1: [1, 4], 2: [3, 5]},
        flow=[(0, 5, 0), (0, 5, 4), (1, 5, 1), (1, 5, 4), (2, 5, 3), (2, 5, 5)],
    )
    via4 = build_configuration(
        inst,
        delivery=[(0, 5), (1, 5), (2, 5)],
        origin_arcs={0: [0, 4], 1: [2, 5], 2: [3, 5]},
        flow=[(0, 5, 0), (0, 5, 4), (1, 5, 2), (1, 5, 5), (2, 5, 3), (2, 5, 5)],
    )
    return via3, via4


class TestValidator:
    def test_valid_configuration_passes(self, two_agg_instance):
        for config in two_agg_configs(two_agg_instance):
            report = verify.validate_configuration(two_agg_instance, config)
            assert report.ok and not report.violations

    def test_demand_shortfall_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        short = dataclasses.replace(
            config, delivery=frozenset({(0, 5), (1, 5)})
        )
        report = verify.validate_configuration(two_agg_instance, short)
        assert not report.ok
        assert any(v.startswith("(a)") for v in report.violations)

    def test_broken_flow_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        # drop origin 2's final hop: flow no longer reaches the destination
        broken = dataclasses.replace(
            config, flow=frozenset(t for t in config.flow if t != (2, 5, 5))
        )
        report = verify.validate_configuration(two_agg_instance, broken)
        assert any(v.startswith("(b)") for v in report.violations)

    def test_flow_outside_marked_arcs_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        unmarked = dataclasses.replace(
            config, origin_arcs={0: config.origin_arcs[0],
                                 1: frozenset(),
                                 2: config.origin_arcs[2]},
        )
        report = verify.validate_configuration(two_agg_instance, unmarked)
        assert any("not marked" in v for v in report.violations)

    def test_double_reception_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        # origin 1 hands its measurement to both aggregators: node 5 then
        # receives it twice (once via each), and arc marking catches node-level
        # double reception at the destination
        doubled = dataclasses.replace(
            config,
            origin_arcs={0: config.origin_arcs[0],
                         1: frozenset({1, 2, 4, 5}),
                         2: config.origin_arcs[2]},
        )
        report = verify.validate_configuration(two_agg_instance, doubled)
        assert any(v.startswith("(c)") or v.startswith("(d)") or v.startswith("(e)")
                   for v in report.violations)

    def test_energy_tampering_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        cheaper = dataclasses.replace(
            config, depletion={v: 0.01 for v in config.depletion}
        )
        report = verify.validate_configuration(two_agg_instance, cheaper)
        assert any(v.startswith("(e)") and "depletion" in v for v in report.violations)

    def test_aggregation_count_tampering_detected(self, two_agg_instance):
        config, _ = two_agg_configs(two_agg_instance)
        fudged = dataclasses.replace(config, agg_count={v: 0 for v in config.agg_count})
        report = verify.validate_configuration(two_agg_instance, fudged)
        assert any("aggregation count" in v for v in report.violations)

    def test_recompute_energy_matches_stored(self, two_agg_instance):
        for config in two_agg_configs(two_agg_instance):
            for v in two_agg_instance.powered_nodes:
                assert verify.recompute_energy(two_agg_instance, config, v) == pytest.approx(
                    config.depletion[v] * two_agg_instance.battery[v]
                )


class TestSimulation:
    def test_exact_budget_plan_replays(self, two_agg_instance):
        via3, via4 = two_agg_configs(two_agg_instance)
        plan = TimesharePlan(entries=((via3, 9.0), (via4, 9.0)), mode=PlanMode.INTEGER)
        sim = verify.simulate_plan(two_agg_instance, plan)
        assert sim.ok
        assert sim.achieved_lifetime == 18
        # both aggregators end with 1.0 battery: 9*6 + 9*5 = 99 of 100
        assert sim.final_battery[3] == pytest.approx(1.0)
        assert sim.final_battery[4] == pytest.approx(1.0)

    def test_over_budget_plan_fails_at_the_right_period(self, two_agg_instance):
        via3, via4 = two_agg_configs(two_agg_instance)
        plan = TimesharePlan(entries=((via3, 10.0), (via4, 9.0)), mode=PlanMode.INTEGER)
        sim = verify.simulate_plan(two_agg_instance, plan)
        assert not sim.ok
        # aggregator 3: 10*6 + 9*5 drains battery 100 during period 19
        assert sim.achieved_lifetime == 19
        assert "node 3" in sim.violations[0]

    def test_empty_plan(self, two_agg_instance):
        plan = TimesharePlan(entries=(), mode=PlanMode.INTEGER)
        sim = verify.simulate_plan(two_agg_instance, plan)
        assert sim.ok and sim.achieved_lifetime == 0

    def test_fractional_plan_warns_and_floors(self, two_agg_instance):
        via3, _ = two_agg_configs(two_agg_instance)
        plan = TimesharePlan(entries=((via3, 2.7),), mode=PlanMode.FRACTIONAL)
        with pytest.warns(UserWarning, match="floor"):
            sim = verify.simulate_plan(two_agg_instance, plan)
        assert sim.achieved_lifetime == 2

    def test_invalid_configuration_rejected_in_replay(self, two_agg_instance):
        via3, _ = two_agg_configs(two_agg_instance)
        bad = dataclasses.replace(via3, delivery=frozenset({(0, 5)}))
        plan = TimesharePlan(entries=((bad, 3.0),), mode=PlanMode.INTEGER)
        sim = verify.simulate_plan(two_agg_instance, plan)
        assert not sim.ok and "invalid" in sim.violations[0]


class TestEnumeration:
    def test_two_agg_has_exactly_two_configurations(self, two_agg_instance):
        configs = verify.enumerate_configurations(two_agg_instance)
        assert len(configs) == 2
        keys = {c.canonical_key() for c in configs}
        assert keys == {c.canonical_key() for c in two_agg_configs(two_agg_instance)}

    def test_chain_has_one_configuration(self, chain_instance):
        configs = verify.enumerate_configurations(chain_instance)
        assert len(configs) == 1
        assert configs[0].used_arcs == frozenset({0})

    def test_star_has_one_configuration(self, star_instance):
        configs = verify.enumerate_configurations(star_instance)
        assert len(configs) == 1
        assert configs[0].agg_count[3] == 2

    def test_limit_truncates(self):
        inst = tiny_instances(1, seed_start=300)[0]
        full = verify.enumerate_configurations(inst)
        if len(full) > 1:
            assert len(verify.enumerate_configurations(inst, limit=1)) == 1

    def test_node_guard(self):
        from meshlife import netgen

        big = netgen.assign_batteries(
            netgen.generate_instance(netgen.default_params(10, seed=1)), 100.0
        )
        with pytest.raises(verify.EnumerationGuardError, match="guard"):
            verify.enumerate_configurations(big)


class TestBruteForce:
    def test_two_agg_lifetime(self, two_agg_instance):
        assert verify.brute_force_lifetime(two_agg_instance) == pytest.approx(
            200.0 / 11.0, rel=1e-9
        )

    def test_matches_colgen_on_random_instances(self):
        for inst in tiny_instances(4, seed_start=400):
            oracle = verify.brute_force_lifetime(inst)
            state = master.run_column_generation(inst)
            assert state.lp_plan.lifetime == pytest.approx(oracle, rel=1e-6)

    def test_min_energy_config_is_enumerated(self, two_agg_instance):
        config = min_energy_configuration(two_agg_instance)
        keys = {c.canonical_key() for c in verify.enumerate_configurations(two_agg_instance)}
        assert config.canonical_key() in keys
