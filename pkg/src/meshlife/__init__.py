"""Maximum-lifetime operating schedules for wireless mesh networks.

A master LP/IP allocates timeshares to network configurations under battery
budgets; a pricing MILP generates improving configurations from the master's
dual prices (price-and-branch).
"""

from .model import (
    Arc,
    Configuration,
    DualPrices,
    NetworkInstance,
    NodeRole,
    PlanMode,
    TimesharePlan,
    build_configuration,
    energy_per_period,
    scale_batteries,
)

__all__ = [
    "Arc",
    "Configuration",
    "DualPrices",
    "NetworkInstance",
    "NodeRole",
    "PlanMode",
    "TimesharePlan",
    "build_configuration",
    "energy_per_period",
    "scale_batteries",
]

__version__ = "0.1.0"
