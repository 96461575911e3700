"""Conversions between the wire/file models and the core domain types."""

from __future__ import annotations

from ..model import Configuration, NetworkInstance, PlanMode, TimesharePlan
from ..netgen import instance_from_dict, instance_to_dict
from .schemas import ConfigurationModel, InstanceModel, PlanEntryModel


def instance_to_model(instance: NetworkInstance) -> InstanceModel:
    return InstanceModel.model_validate(instance_to_dict(instance))


def instance_from_model(model: InstanceModel) -> NetworkInstance:
    return instance_from_dict(model.model_dump())


def configuration_to_model(config: Configuration, config_id: int) -> ConfigurationModel:
    return ConfigurationModel(
        id=config_id,
        delivery=sorted(config.delivery),
        origin_arcs={o: sorted(arcs) for o, arcs in sorted(config.origin_arcs.items())},
        flow=sorted(config.flow),
        used_arcs=sorted(config.used_arcs),
        agg_pairs=sorted((o1, o2, v) for (o1, o2), v in config.agg_pairs.items()),
        origin_active=sorted(config.origin_active),
        agg_count={v: c for v, c in sorted(config.agg_count.items()) if c},
        tx_energy_used=dict(sorted(config.tx_energy_used.items())),
        depletion=dict(sorted(config.depletion.items())),
    )


def configuration_from_model(model: ConfigurationModel) -> Configuration:
    return Configuration(
        delivery=frozenset((o, d) for o, d in model.delivery),
        origin_arcs={o: frozenset(arcs) for o, arcs in model.origin_arcs.items()},
        flow=frozenset((o, d, a) for o, d, a in model.flow),
        used_arcs=frozenset(model.used_arcs),
        agg_pairs={(o1, o2): v for o1, o2, v in model.agg_pairs},
        origin_active=frozenset(model.origin_active),
        agg_count=dict(model.agg_count),
        tx_energy_used=dict(model.tx_energy_used),
        depletion=dict(model.depletion),
    )


def plan_from_models(
    entries: list[PlanEntryModel],
    configs: dict[int, Configuration],
    mode: PlanMode,
) -> TimesharePlan:
    return TimesharePlan(
        entries=tuple((configs[e.config_id], e.timeshare) for e in entries),
        mode=mode,
    )
