"""Pricing MILP: find the configuration with minimum dual-weighted depletion.

Builds the routing/aggregation/energy model for one data stream, solves it,
and extracts a Configuration.  Also provides the minimum-total-energy
configuration used to seed column generation (obtained by pricing against
duals equal to the battery capacities, which turns the objective into total
energy per measurement period).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .lp import ConstraintRow, LinearProgram, LpError, Relation, Sense
from .mip import MipOptions, MipSolution, MipStatus, MixedIntegerProgram, VarType, solve_mip
from .model import (
    Configuration,
    DualPrices,
    ModelError,
    NetworkInstance,
    NodeRole,
    build_configuration,
)

RC_TOL = 1e-6  # numerical meaning of "reduced objective strictly below 1"
BIN_SNAP_TOL = 1e-6


class PricingInfeasibleError(RuntimeError):
    """No valid configuration exists for this instance."""


class ExtractionError(RuntimeError):
    """Solver values and recomputed energies disagree."""


@dataclass
class PricingResult:
    configuration: Configuration | None  # None only for a cutoff infeasibility certificate
    reduced_objective: float
    improving: bool


class _VariableLayout:
    """Canonical variable indexing for the pricing model of one instance.

    The layout depends only on the instance, so a solution vector can be
    decoded without the model object that produced it.
    """

    def __init__(self, instance: NetworkInstance):
        self.instance = instance
        origins = instance.origins
        dests = instance.destinations
        arcs = range(len(instance.arcs))
        nodes = range(instance.num_nodes)
        powered = instance.powered_nodes
        pairs = list(combinations(origins, 2))

        idx = 0

        def block(keys):
            nonlocal idx
            mapping = {}
            for key in keys:
                mapping[key] = idx
                idx += 1
            return mapping

        self.x = block((o, d) for o in origins for d in dests)
        self.z = block((o, d, a) for o in origins for d in dests for a in arcs)
        self.y = block((o, a) for o in origins for a in arcs)
        self.Y = block(arcs)
        self.X = block((pair, v) for pair in pairs for v in nodes)
        self.u = block(origins)
        self.g = block(nodes)
        self.G = block(powered)
        self.E = block(powered)
        self.num_vars = idx
        self.pairs = pairs


def _build_model(instance: NetworkInstance, duals: DualPrices) -> tuple[MixedIntegerProgram, _VariableLayout]:
    instance.require_batteries()
    for v in instance.powered_nodes:
        if v not in duals.pi:
            raise ModelError(f"missing dual price for node {v}")

    lay = _VariableLayout(instance)
    origins = instance.origins
    dests = instance.destinations
    k = instance.k_demand

    objective = [0.0] * lay.num_vars
    for v in instance.powered_nodes:
        objective[lay.E[v]] = float(duals.pi[v])

    upper: list[float | None] = [None] * lay.num_vars
    for key in lay.x:
        upper[lay.x[key]] = 1.0
    for key in lay.z:
        upper[lay.z[key]] = 1.0
    for key in lay.y:
        upper[lay.y[key]] = 1.0
    for key in lay.Y:
        upper[lay.Y[key]] = 1.0
    for key in lay.X:
        upper[lay.X[key]] = 1.0
    for key in lay.u:
        upper[lay.u[key]] = 1.0

    lp = LinearProgram(sense=Sense.MIN, objective=objective, upper=upper)
    add = lp.add_row

    # Demand: each destination collects at least K distinct measurements.
    for d in dests:
        add({lay.x[(o, d)]: 1.0 for o in origins}, Relation.GE, float(k))

    # Flow conservation at transit nodes, and arrival at the destination.
    for o in origins:
        for d in dests:
            for v in range(instance.num_nodes):
                if v in (o, d):
                    continue
                coeffs: dict[int, float] = {}
                for arc in instance.out_arcs(v):
                    coeffs[lay.z[(o, d, arc.id)]] = coeffs.get(lay.z[(o, d, arc.id)], 0.0) + 1.0
                for arc in instance.in_arcs(v):
                    coeffs[lay.z[(o, d, arc.id)]] = coeffs.get(lay.z[(o, d, arc.id)], 0.0) - 1.0
                if coeffs:
                    add(coeffs, Relation.EQ, 0.0)
            coeffs = {lay.z[(o, d, arc.id)]: 1.0 for arc in instance.in_arcs(d)}
            coeffs[lay.x[(o, d)]] = coeffs.get(lay.x[(o, d)], 0.0) - 1.0
            add(coeffs, Relation.EQ, 0.0)

    # Arc usage coupling: Y marks arcs with any flow, y marks per-origin usage.
    for a in range(len(instance.arcs)):
        for o in origins:
            for d in dests:
                add({lay.z[(o, d, a)]: 1.0, lay.Y[a]: -1.0}, Relation.LE, 0.0)
                add({lay.z[(o, d, a)]: 1.0, lay.y[(o, a)]: -1.0}, Relation.LE, 0.0)
        coeffs = {lay.z[(o, d, a)]: -1.0 for o in origins for d in dests}
        coeffs[lay.Y[a]] = 1.0
        add(coeffs, Relation.LE, 0.0)
        for o in origins:
            coeffs = {lay.z[(o, d, a)]: -1.0 for d in dests}
            coeffs[lay.y[(o, a)]] = 1.0
            add(coeffs, Relation.LE, 0.0)

    # Each node receives a given measurement on at most one arc.
    for o in origins:
        for v in range(instance.num_nodes):
            in_a = instance.in_arcs(v)
            if in_a:
                add({lay.y[(o, arc.id)]: 1.0 for arc in in_a}, Relation.LE, 1.0)

    # Aggregation bookkeeping: X records where each origin pair is merged.
    for pair in lay.pairs:
        o1, o2 = pair
        for v in range(instance.num_nodes):
            in_a = instance.in_arcs(v)
            for arc in in_a:
                for first, second in ((o1, o2), (o2, o1)):
                    coeffs = {lay.X[(pair, v)]: 1.0, lay.y[(first, arc.id)]: -1.0}
                    for other in in_a:
                        if other.id != arc.id:
                            key = lay.y[(second, other.id)]
                            coeffs[key] = coeffs.get(key, 0.0) - 1.0
                    add(coeffs, Relation.GE, -1.0)
        add({lay.X[(pair, v)]: 1.0 for v in range(instance.num_nodes)}, Relation.LE, 1.0)

    # Aggregation counts: packets received (plus own measurement at origins) minus one.
    for v in instance.aggregators:
        coeffs = {lay.Y[arc.id]: -1.0 for arc in instance.in_arcs(v)}
        coeffs[lay.g[v]] = 1.0
        add(coeffs, Relation.GE, -1.0)
    for o in origins:
        coeffs = {lay.Y[arc.id]: -1.0 for arc in instance.in_arcs(o)}
        coeffs[lay.g[o]] = 1.0
        coeffs[lay.u[o]] = coeffs.get(lay.u[o], 0.0) - 1.0
        add(coeffs, Relation.GE, -1.0)
        for d in dests:
            add({lay.u[o]: 1.0, lay.x[(o, d)]: -1.0}, Relation.GE, 0.0)

    # Transmission energy: one broadcast at the highest used-arc cost.
    for v in instance.powered_nodes:
        for arc in instance.out_arcs(v):
            add({lay.G[v]: 1.0, lay.Y[arc.id]: -arc.tx_energy}, Relation.GE, 0.0)

    # Depletion fraction per battery-constrained node.
    for v in instance.powered_nodes:
        add(
            {
                lay.E[v]: instance.battery[v],
                lay.G[v]: -1.0,
                lay.g[v]: -instance.aggregation_cost(v),
            },
            Relation.EQ,
            0.0,
        )

    var_types = [VarType.CONTINUOUS] * lay.num_vars
    for key in lay.x:
        var_types[lay.x[key]] = VarType.BINARY
    for key in lay.z:
        var_types[lay.z[key]] = VarType.BINARY
    for key in lay.u:
        var_types[lay.u[key]] = VarType.BINARY

    return MixedIntegerProgram(lp=lp, var_types=var_types), lay


def build_pricing(instance: NetworkInstance, duals: DualPrices) -> MixedIntegerProgram:
    """The full routing/aggregation/energy MILP priced by the given duals."""
    mip, _ = _build_model(instance, duals)
    return mip


def _add_strengthening_rows(instance: NetworkInstance, lp: LinearProgram, lay: _VariableLayout) -> None:
    """Redundant valid inequalities that tighten the LP relaxation.

    Each row holds for every feasible routing (checked against exhaustive
    enumeration in the test suite), so the optimum is unchanged; the dual bound
    at the root improves several-fold.
    """
    add = lp.add_row
    # Every destination needs K distinct measurements, so >= K origins are active.
    add({lay.u[o]: 1.0 for o in instance.origins}, Relation.GE, float(instance.k_demand))
    # An active origin transmits at least its cheapest outgoing arc cost.
    for o in instance.origins:
        outs = instance.out_arcs(o)
        if outs:
            add({lay.G[o]: 1.0, lay.u[o]: -min(a.tx_energy for a in outs)}, Relation.GE, 0.0)
    # A battery-constrained node receiving on a used arc must forward the packet.
    for v in instance.powered_nodes:
        outs = instance.out_arcs(v)
        if not outs:
            continue
        t_min = min(a.tx_energy for a in outs)
        for ain in instance.in_arcs(v):
            add({lay.G[v]: 1.0, lay.Y[ain.id]: -t_min}, Relation.GE, 0.0)
    # Per-commodity form of the same fact: a relay carrying fraction f of one
    # measurement's flow to one destination retransmits at least that fraction
    # (each commodity enters a node at most once, by the reception limit).
    for v in instance.powered_nodes:
        outs = instance.out_arcs(v)
        ins = instance.in_arcs(v)
        if not outs or not ins:
            continue
        t_min = min(a.tx_energy for a in outs)
        for o in instance.origins:
            if o == v:
                continue
            for d in instance.destinations:
                coeffs = {lay.G[v]: 1.0}
                for a in ins:
                    coeffs[lay.z[(o, d, a.id)]] = -t_min
                add(coeffs, Relation.GE, 0.0)


def _snap(value: float, what: str) -> int:
    r = round(value)
    if abs(value - r) > BIN_SNAP_TOL or r not in (0, 1):
        raise ExtractionError(f"{what} not within tolerance of binary: {value}")
    return int(r)


def extract_configuration(instance: NetworkInstance, mip_solution: MipSolution) -> Configuration:
    """Materialize a solved pricing model into a Configuration.

    Binary fields are snapped at tolerance; derived energies are recomputed
    from the primitive fields and cross-checked against the solver's depletion
    values.  Any incumbent (not only proven optima) can be extracted.
    """
    if mip_solution.x is None:
        raise ExtractionError(f"cannot extract from status {mip_solution.status} (no incumbent)")
    lay = _VariableLayout(instance)
    x = mip_solution.x
    if len(x) != lay.num_vars:
        raise ExtractionError("solution vector does not match the pricing layout")

    delivery = {
        (o, d) for (o, d), j in lay.x.items() if _snap(x[j], f"x[{o},{d}]") == 1
    }
    origin_arcs: dict[int, set[int]] = {o: set() for o in instance.origins}
    for (o, a), j in lay.y.items():
        if x[j] > 0.5:
            _snap(x[j], f"y[{o},{a}]")
            origin_arcs[o].add(a)
        elif x[j] > BIN_SNAP_TOL:
            raise ExtractionError(f"y[{o},{a}] fractional at optimum: {x[j]}")
    flow = {
        (o, d, a) for (o, d, a), j in lay.z.items() if _snap(x[j], f"z[{o},{d},{a}]") == 1
    }

    config = build_configuration(instance, delivery, origin_arcs, flow)

    # The model only bounds depletion from below, so a node whose dual price is
    # zero may carry slack energy in the solver vector; the recomputed value is
    # authoritative and must never exceed the solver's.
    for v in instance.powered_nodes:
        solver_e = x[lay.E[v]]
        if config.depletion[v] > solver_e + 1e-6:
            raise ExtractionError(
                f"node {v}: recomputed depletion {config.depletion[v]} "
                f"exceeds solver value {solver_e}"
            )
    return config


CUTOFF_GAP_TOL = 0.05  # columns need not be best-possible, just improving


def solve_pricing(
    instance: NetworkInstance,
    duals: DualPrices,
    options: MipOptions | None = None,
    cutoff: float | None = None,
) -> PricingResult:
    """Solve the pricing MILP and report whether the column improves the master.

    With ``cutoff`` the model additionally requires the dual-weighted depletion
    to be at most ``cutoff``, which lets the solver prune directly against the
    improvement threshold: any incumbent is then an improving column (no
    optimality proof needed, so the gap tolerance is relaxed), and
    infeasibility certifies that no configuration prices below the cutoff.
    """
    mip, lay = _build_model(instance, duals)
    _add_strengthening_rows(instance, mip.lp, lay)
    if cutoff is not None:
        coeffs = {
            lay.E[v]: float(duals.pi[v]) for v in instance.powered_nodes if duals.pi[v] != 0.0
        }
        if coeffs:  # all-zero duals price every configuration at 0 anyway
            mip.lp.add_row(coeffs, Relation.LE, float(cutoff))
        options = options or MipOptions()
        options = MipOptions(
            gap_tol=max(options.gap_tol, CUTOFF_GAP_TOL),
            node_limit=options.node_limit,
            time_limit=options.time_limit,
        )
    sol = solve_mip(mip, options)
    if sol.status is MipStatus.INFEASIBLE:
        if cutoff is not None:
            # Certified: every valid configuration prices above the cutoff.
            return PricingResult(configuration=None, reduced_objective=1.0, improving=False)
        raise PricingInfeasibleError("no valid configuration exists for this instance")
    if sol.x is None:
        if cutoff is not None:
            # Limit hit while neither finding an improving column nor proving
            # none exists; report the solver's bound so the caller can stop
            # without claiming optimality.
            bound = min(float(sol.bound) if sol.bound is not None else 0.0, 1.0)
            return PricingResult(configuration=None, reduced_objective=bound, improving=False)
        raise LpError(f"pricing solve hit a limit without an incumbent (status {sol.status})")
    config = extract_configuration(instance, sol)
    # The model bounds every energy from below, so the recomputed value is
    # authoritative and never exceeds the incumbent's objective.
    reduced = sum(duals.pi[v] * config.depletion[v] for v in instance.powered_nodes)
    if reduced > sol.objective + 1e-6 * max(1.0, abs(reduced)):
        raise ExtractionError(
            f"recomputed reduced objective {reduced} exceeds solver value {sol.objective}"
        )
    improving = reduced < 1.0 - RC_TOL
    if not improving and sol.status is not MipStatus.OPTIMAL and cutoff is None:
        raise LpError("pricing solve hit a limit before optimality could be certified")
    return PricingResult(
        configuration=config,
        reduced_objective=reduced,
        improving=improving,
    )


def min_energy_configuration(
    instance: NetworkInstance, options: MipOptions | None = None
) -> Configuration:
    """Configuration minimizing total energy per measurement period.

    Pricing with pi[v] = B(v) cancels the battery division, so the objective
    becomes the plain sum of transmission and aggregation energies.
    """
    instance.require_batteries()
    duals = DualPrices(pi={v: instance.battery[v] for v in instance.powered_nodes})
    return solve_pricing(instance, duals, options).configuration
