"""Result artifacts: solution documents, traces, realization matrices, metrics.

Everything here reads immutable solved objects and renders them into the
files a run leaves behind: `solution.json`, `trace.csv`, `realizations.txt`,
`metrics.json`, and the ladder `summary.csv`. Numeric CSV cells use a fixed
6-significant-digit policy so re-parsing a file reproduces the written
values exactly as formatted.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .ccg import CcgTrace, LadderEntry
from .master import MasterSolution, ScenarioBlock
from .model import NetworkInstance
from .uncertainty import UncertaintyBudget

__all__ = [
    "fmt",
    "solution_document",
    "write_solution",
    "write_trace_csv",
    "realization_matrix",
    "write_realizations",
    "report_metrics",
    "write_metrics",
    "ladder_summary_rows",
    "write_ladder_summary",
]

NET_EXPORT_TOL = 1e-6


def fmt(value: float) -> str:
    """Fixed CSV number policy: 6 significant digits."""
    return format(float(value), ".6g")


def _write_csv(path: str | Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --- solution and trace -------------------------------------------------------

def solution_document(
    inst: NetworkInstance,
    budget: UncertaintyBudget,
    solution: MasterSolution,
    trace: CcgTrace,
) -> dict:
    """JSON-able summary of one finished run."""
    capacities = [
        {"kind": kind, "id": entity, "value": value}
        for (kind, entity), value in sorted(solution.capacities.items())
    ]
    return {
        "schema": "robustgrid-solution-1",
        "objective": solution.objective,
        "investment_cost": solution.investment_cost,
        "recourse_bound": solution.recourse_bound,
        "budget": {"gamma_pv": budget.gamma_pv, "gamma_wind": budget.gamma_wind},
        "converged": trace.converged,
        "stalled": trace.stalled,
        "iterations": len(trace.iterations),
        "final_gap": trace.final_gap,
        "message": trace.message,
        "capacities": capacities,
    }


def write_solution(
    path: str | Path,
    inst: NetworkInstance,
    budget: UncertaintyBudget,
    solution: MasterSolution,
    trace: CcgTrace,
) -> None:
    with open(path, "w") as fh:
        json.dump(solution_document(inst, budget, solution, trace), fh, indent=2)
        fh.write("\n")


def write_trace_csv(path: str | Path, trace: CcgTrace) -> None:
    """Bound progression per iteration, with the identified realization."""
    rows = [
        [
            str(it.index),
            fmt(it.lower_bound),
            fmt(it.upper_bound),
            fmt(it.gap),
            it.realization.summary(),
            fmt(it.seconds),
        ]
        for it in trace.iterations
    ]
    _write_csv(
        path,
        ["iteration", "lower_bound", "upper_bound", "gap", "realization", "seconds"],
        rows,
    )


# --- realization matrix -------------------------------------------------------

def realization_matrix(inst: NetworkInstance, trace: CcgTrace) -> str:
    """Text matrix of identified adverse events.

    One row per (iteration, period) for every iteration whose identified
    realization flags at least one region; one column per region. Cells:
    `-` untouched, `S` solar hit, `W` wind hit, `D` both (a Dunkelflaute).
    A run that never identifies an adverse event yields just the header.
    """
    regions = inst.region_ids()
    header = ["iteration", "period"] + regions
    rows: list[list[str]] = []
    for it in trace.iterations:
        flags = it.realization.flags
        if not flags:
            continue
        for period in inst.timegrid.periods:
            cells = []
            for g in regions:
                pv = ("pv", g, period.id) in flags
                wind = ("wind", g, period.id) in flags
                cells.append("D" if pv and wind else "S" if pv else "W" if wind else "-")
            rows.append([str(it.index), period.id] + cells)
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
        for c in range(len(header))
    ]
    lines = [
        "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
        for row in [header] + rows
    ]
    return "\n".join(lines) + "\n"


def write_realizations(path: str | Path, inst: NetworkInstance, trace: CcgTrace) -> None:
    Path(path).write_text(realization_matrix(inst, trace))


# --- metrics ------------------------------------------------------------------

def _binding_block(solution: MasterSolution) -> ScenarioBlock:
    if not solution.blocks:
        raise ValueError("solution carries no dispatch blocks")
    return max(solution.blocks, key=lambda b: b.operating_cost)


def _region_of_node(inst: NetworkInstance) -> dict[str, str]:
    return {n.id: inst.region_of_node(n.id) for n in inst.nodes}


def report_metrics(inst: NetworkInstance, solution: MasterSolution) -> dict:
    """System and per-region result metrics.

    Costs and energies are taken from the binding dispatch block (the one
    whose operating cost meets the recourse bound), so the regional picture
    describes the event the plan is built to survive. Line investment is
    split half and half between the endpoint regions. The demand total of
    the modeled horizon stands in for annual demand.
    """
    block = _binding_block(solution)
    grid = inst.timegrid
    T, dt = grid.step_count, grid.step_hours
    caps = solution.capacities
    region = _region_of_node(inst)
    regions = inst.region_ids()

    def cap(kind: str, entity: str) -> float:
        return caps.get((kind, entity), 0.0)

    def energy(family: str, entity: str) -> float:
        return sum(block.values.get((family, entity, t), 0.0) for t in range(T))

    # per-region cost split; sums reproduce the system totals exactly
    inv = {g: 0.0 for g in regions}
    fuel = {g: 0.0 for g in regions}
    shed = {g: 0.0 for g in regions}
    for u in inst.renewables:
        inv[region[u.node]] += u.annualized_cost * cap("ren", u.id)
    for b in inst.batteries:
        inv[region[b.node]] += (
            b.inverter_cost * cap("bat_inv", b.id)
            + b.storage_cost * cap("bat_stor", b.id)
        )
    for h in inst.hydrogens:
        inv[region[h.node]] += (
            h.ocgt_cost * cap("h2_ocgt", h.id)
            + h.electrolyzer_cost * cap("h2_el", h.id)
            + h.storage_cost * cap("h2_stor", h.id)
        )
    for l in inst.lines:
        half = 0.5 * l.expansion_cost * cap("line", l.id)
        inv[region[l.from_node]] += half
        inv[region[l.to_node]] += half
    for c in inst.conventionals:
        fuel[region[c.node]] += c.variable_cost * energy("gen", c.id)
    for n in inst.nodes:
        costs = inst.shedding.costs_at(n.id)
        shed[region[n.id]] += sum(
            costs[k] * energy(family, n.id)
            for k, family in enumerate(("ls1", "ls2", "ls3"))
        )

    system_cost = sum(inv.values()) + sum(fuel.values()) + sum(shed.values())
    share_base = system_cost if system_cost > 0 else 1.0
    region_costs = {
        g: {
            "investment": inv[g],
            "fuel": fuel[g],
            "shedding": shed[g],
            "total": inv[g] + fuel[g] + shed[g],
        }
        for g in regions
    }

    # installed capacity mix over nameplate MW, existing units included
    mw: dict[str, float] = {}
    for u in inst.renewables:
        mw[u.technology] = mw.get(u.technology, 0.0) + cap("ren", u.id)
    mw["battery_inverter"] = sum(cap("bat_inv", b.id) for b in inst.batteries)
    mw["h2_ocgt"] = sum(cap("h2_ocgt", h.id) for h in inst.hydrogens)
    mw["h2_electrolyzer"] = sum(cap("h2_el", h.id) for h in inst.hydrogens)
    mw["conventional"] = sum(c.existing_cap for c in inst.conventionals)
    mw["hydro"] = sum(h.existing_cap for h in inst.hydros)
    total_mw = sum(mw.values())
    mix_pct = {
        k: (100.0 * v / total_mw if total_mw > 0 else 0.0) for k, v in mw.items()
    }

    # per-region energy balance in the binding block
    gen_units: dict[str, list[str]] = {g: [] for g in regions}
    store_units: dict[str, list[str]] = {g: [] for g in regions}
    for u in inst.renewables:
        gen_units[region[u.node]].append(u.id)
    for c in inst.conventionals:
        gen_units[region[c.node]].append(c.id)
    for h in inst.hydros:
        gen_units[region[h.node]].append(h.id)
        if h.kind == "psp":
            store_units[region[h.node]].append(h.id)
    for b in inst.batteries:
        gen_units[region[b.node]].append(b.id)
        store_units[region[b.node]].append(b.id)
    for h in inst.hydrogens:
        gen_units[region[h.node]].append(h.id)
        store_units[region[h.node]].append(h.id)

    demand_mwh = {g: 0.0 for g in regions}
    shed_mwh = {g: 0.0 for g in regions}
    for n in inst.nodes:
        g = region[n.id]
        demand_mwh[g] += sum(inst.demand.at(n.id, t) for t in range(T))
        shed_mwh[g] += sum(
            energy(family, n.id) for family in ("ls1", "ls2", "ls3")
        )
    region_energy = {}
    for g in regions:
        generation = sum(energy("gen", uid) for uid in gen_units[g])
        charging = sum(energy("ch", uid) for uid in store_units[g])
        served = demand_mwh[g] - shed_mwh[g]
        net_export = generation - charging - served
        region_energy[g] = {
            "generation_mwh": generation,
            "demand_mwh": demand_mwh[g],
            "shed_mwh": shed_mwh[g],
            "charging_mwh": charging,
            "net_export_mwh": net_export,
            "net_exporter": bool(net_export > NET_EXPORT_TOL),
        }

    # flexibility proxies
    demand_total = inst.demand.total()
    storage_mwh = sum(cap("bat_stor", b.id) for b in inst.batteries) + sum(
        cap("h2_stor", h.id) for h in inst.hydrogens
    )
    storage_demand_ratio = storage_mwh / demand_total if demand_total > 0 else 0.0

    horizon_days = T * dt / 24.0
    h2_duration_days = {}
    for g in regions:
        deliverable = sum(
            cap("h2_stor", h.id) * h.eta_ocgt
            for h in inst.hydrogens
            if region[h.node] == g
        )
        daily = demand_mwh[g] / horizon_days if horizon_days > 0 else 0.0
        h2_duration_days[g] = deliverable / daily if daily > 0 else 0.0

    initial_mw = sum(l.existing_cap for l in inst.lines)
    expansion_mw = sum(cap("line", l.id) for l in inst.lines)
    transmission = {
        "initial_mw": initial_mw,
        "expansion_mw": expansion_mw,
        "expansion_pct": (
            100.0 * expansion_mw / initial_mw if initial_mw > 0 else None
        ),
    }

    return {
        "objective": solution.objective,
        "recourse_bound": solution.recourse_bound,
        "binding_realization": block.tag,
        "system_cost": system_cost,
        "cost_shares": {
            "investment": sum(inv.values()) / share_base,
            "fuel": sum(fuel.values()) / share_base,
            "shedding": sum(shed.values()) / share_base,
        },
        "region_costs": region_costs,
        "capacity_mw": mw,
        "capacity_mix_pct": mix_pct,
        "region_energy": region_energy,
        "storage_demand_ratio": storage_demand_ratio,
        "h2_discharge_duration_days": h2_duration_days,
        "transmission": transmission,
        "demand_mwh_total": demand_total,
    }


def write_metrics(path: str | Path, metrics: dict) -> None:
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=2)
        fh.write("\n")


# --- ladder summary -----------------------------------------------------------

def ladder_summary_rows(inst: NetworkInstance, entries: list[LadderEntry]) -> list[dict]:
    """Per-rung summary: objective, % increase over the first rung (the
    deterministic base when the ladder starts at 0), and average cost per
    MWh of demand. Rungs that failed to solve are skipped.
    """
    demand_total = inst.demand.total()
    rows = []
    base = None
    for entry in entries:
        if entry.solution is None:
            continue
        objective = entry.solution.objective
        if base is None:
            base = objective
        increase = 100.0 * (objective - base) / base if base > 0 else 0.0
        rows.append(
            {
                "gamma": entry.gamma,
                "objective": objective,
                "increase_pct_vs_gamma0": increase,
                "avg_cost_per_mwh": objective / demand_total if demand_total > 0 else 0.0,
            }
        )
    return rows


def write_ladder_summary(path: str | Path, rows: list[dict]) -> None:
    header = ["gamma", "objective", "increase_pct_vs_gamma0", "avg_cost_per_mwh"]
    _write_csv(
        path,
        header,
        [
            [str(r["gamma"])] + [fmt(r[k]) for k in header[1:]]
            for r in rows
        ],
    )
