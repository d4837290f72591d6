"""Investment master problem and per-realization dispatch blocks.

The master LP carries one set of first-stage capacity variables, one full
dispatch block per adverse realization seen so far, and a recourse variable
bounded below by every block's operating cost. The same block emitter also
builds the fixed-capacity dispatch LP (capacities folded into right-hand
sides), which is what the worst-case subproblem dualizes; in that mode each
row records how its rhs depends on the handed-over capacities and on the
availability deviation, so the dual can be assembled mechanically.

Conventions: dispatch quantities are energies per step (MWh). A power
rating K limits energy as K * step_hours; storage energy caps carry no
step factor. Flows are positive from a line's from-node to its to-node.
Voltage angles exist only when the instance has AC lines; the reference
node's angle is pinned by an equality row so every restriction lives in a
row (variables are only "free" or ">= 0"), which keeps the dual mechanical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import EQ, LE, BackendError, LinearModel, SolveResult
from .model import NetworkInstance, tech_class

__all__ = [
    "CapKey",
    "MasterBuild",
    "MasterSolution",
    "ScenarioBlock",
    "RowMeta",
    "DispatchBuild",
    "build_master",
    "solve_master",
    "build_dispatch_lp",
    "dispatch_cost",
    "solve_dispatch",
    "capacity_keys",
    "investment_cost",
    "check_block_physics",
]

CapKey = tuple[str, str]  # (kind, entity id)

ANGLE_BOUND = math.pi


def capacity_keys(inst: NetworkInstance) -> list[CapKey]:
    """Every first-stage capacity decision of the instance, in build order."""
    keys: list[CapKey] = [("ren", r.id) for r in inst.renewables]
    for b in inst.batteries:
        keys += [("bat_inv", b.id), ("bat_stor", b.id)]
    for h in inst.hydrogens:
        keys += [("h2_ocgt", h.id), ("h2_el", h.id), ("h2_stor", h.id)]
    keys += [("line", l.id) for l in inst.lines]
    return keys


def _capacity_costs(inst: NetworkInstance) -> dict[CapKey, float]:
    costs: dict[CapKey, float] = {}
    for r in inst.renewables:
        costs[("ren", r.id)] = r.annualized_cost
    for b in inst.batteries:
        costs[("bat_inv", b.id)] = b.inverter_cost
        costs[("bat_stor", b.id)] = b.storage_cost
    for h in inst.hydrogens:
        costs[("h2_ocgt", h.id)] = h.ocgt_cost
        costs[("h2_el", h.id)] = h.electrolyzer_cost
        costs[("h2_stor", h.id)] = h.storage_cost
    for l in inst.lines:
        costs[("line", l.id)] = l.expansion_cost
    return costs


def _capacity_limits(inst: NetworkInstance) -> dict[CapKey, float]:
    inf = math.inf
    lim: dict[CapKey, float] = {}
    for r in inst.renewables:
        lim[("ren", r.id)] = inf if r.expansion_limit is None else r.expansion_limit
    for b in inst.batteries:
        lim[("bat_inv", b.id)] = inf if b.inverter_limit is None else b.inverter_limit
        lim[("bat_stor", b.id)] = inf if b.storage_limit is None else b.storage_limit
    for h in inst.hydrogens:
        lim[("h2_ocgt", h.id)] = inf if h.ocgt_limit is None else h.ocgt_limit
        lim[("h2_el", h.id)] = inf if h.el_limit is None else h.el_limit
        lim[("h2_stor", h.id)] = inf if h.storage_limit is None else h.storage_limit
    for l in inst.lines:
        lim[("line", l.id)] = l.expansion_limit
    return lim


def investment_cost(inst: NetworkInstance, capacities: dict[CapKey, float]) -> float:
    costs = _capacity_costs(inst)
    return float(sum(costs[k] * capacities.get(k, 0.0) for k in costs))


@dataclass(frozen=True)
class RowMeta:
    """How one dispatch row's rhs is assembled (fixed-capacity mode only).

    rhs = base_rhs + sum(coef * capacity[key] for key, coef in cap_terms),
    and for renewable limit rows the realized availability can further
    lower it: rhs -= dev_rhs when the row's flag triple is selected.
    """

    index: int
    name: str
    sense: str
    kind: str
    entity: str
    t: int
    base_rhs: float
    cap_terms: tuple[tuple[CapKey, float], ...] = ()
    dev_rhs: float = 0.0
    flag: tuple[str, str, str] | None = None  # (tech, region, period id)


@dataclass
class BlockBuild:
    """Column registry and cost terms of one dispatch block inside a model."""

    tag: str
    cf: dict[str, tuple[float, ...]]
    cols: dict[tuple, int] = field(default_factory=dict)
    fuel_terms: list[tuple[int, float]] = field(default_factory=list)
    shed_terms: list[tuple[int, float]] = field(default_factory=list)

    @property
    def cost_terms(self) -> list[tuple[int, float]]:
        return self.fuel_terms + self.shed_terms


@dataclass
class MasterBuild:
    instance: NetworkInstance
    model: LinearModel
    inv: dict[CapKey, int]
    eta: int
    blocks: list[BlockBuild]


@dataclass
class DispatchBuild:
    instance: NetworkInstance
    model: LinearModel
    capacities: dict[CapKey, float]
    block: BlockBuild
    row_meta: list[RowMeta]


@dataclass
class ScenarioBlock:
    """Solved dispatch of one realization: values, costs, realized cf."""

    tag: str
    realized_cf: dict[str, tuple[float, ...]]
    values: dict[tuple, float]
    operating_cost: float
    fuel_cost: float
    shedding_cost: float

    def series(self, family: str, entity: str, steps: int) -> list[float]:
        return [self.values.get((family, entity, t), 0.0) for t in range(steps)]


@dataclass
class MasterSolution:
    capacities: dict[CapKey, float]
    investment_cost: float
    recourse_bound: float
    objective: float
    blocks: list[ScenarioBlock]


class _BlockEmitter:
    """Emits one dispatch block into a LinearModel.

    Exactly one of inv (capacity variable indices) or caps (fixed capacity
    values) is given. With inv, capacity-dependent limits put the capacity
    variable on the left-hand side; with caps, its contribution lands in
    the rhs and row_meta records the dependence.
    """

    def __init__(
        self,
        model: LinearModel,
        inst: NetworkInstance,
        cf: dict[str, tuple[float, ...]],
        tag: str,
        inv: dict[CapKey, int] | None = None,
        caps: dict[CapKey, float] | None = None,
    ):
        if (inv is None) == (caps is None):
            raise ValueError("exactly one of inv or caps must be given")
        self.model = model
        self.inst = inst
        self.tag = tag
        self.inv = inv
        self.caps = caps
        self.block = BlockBuild(tag=tag, cf=cf)
        self.row_meta: list[RowMeta] = []
        T = inst.timegrid.step_count
        for unit in inst.renewables:
            if unit.id not in cf:
                raise ValueError(f"realization {tag!r} misses unit {unit.id!r}")
            if len(cf[unit.id]) != T:
                raise ValueError(
                    f"realization {tag!r}, unit {unit.id!r}: series length "
                    f"{len(cf[unit.id])} != {T}"
                )

    # -- low-level helpers -------------------------------------------------

    def var(self, family: str, entity: str, t: int, free: bool = False) -> int:
        j = self.model.add_var(
            f"{self.tag}:{family}[{entity},{t}]",
            lb=-math.inf if free else 0.0,
        )
        self.block.cols[(family, entity, t)] = j
        return j

    def col(self, family: str, entity: str, t: int) -> int:
        return self.block.cols[(family, entity, t)]

    def row(
        self,
        name: str,
        coeffs: list[tuple[int, float]],
        sense: str,
        base_rhs: float,
        kind: str,
        entity: str,
        t: int,
        cap_terms: tuple[tuple[CapKey, float], ...] = (),
        dev_rhs: float = 0.0,
        flag: tuple[str, str, str] | None = None,
    ) -> int:
        rhs = base_rhs
        if self.inv is not None:
            coeffs = coeffs + [(self.inv[key], -coef) for key, coef in cap_terms]
        else:
            rhs += sum(coef * self.caps.get(key, 0.0) for key, coef in cap_terms)
        idx = self.model.add_row(coeffs, sense, rhs, name=f"{self.tag}:{name}")
        self.row_meta.append(
            RowMeta(
                index=idx,
                name=name,
                sense=sense,
                kind=kind,
                entity=entity,
                t=t,
                base_rhs=base_rhs,
                cap_terms=cap_terms,
                dev_rhs=dev_rhs,
                flag=flag,
            )
        )
        return idx

    # -- the block itself ----------------------------------------------------

    def emit(self) -> None:
        inst = self.inst
        grid = inst.timegrid
        T, dt = grid.step_count, grid.step_hours
        cf = self.block.cf
        has_ac = any(l.kind == "ac" for l in inst.lines)

        # variables
        for r in inst.renewables:
            for t in range(T):
                self.var("gen", r.id, t)
        for c in inst.conventionals:
            for t in range(T):
                j = self.var("gen", c.id, t)
                self.block.fuel_terms.append((j, c.variable_cost))
        for h in inst.hydros:
            for t in range(T):
                self.var("gen", h.id, t)
                if h.kind == "psp":
                    self.var("ch", h.id, t)
                    self.var("lvl", h.id, t)
        for b in inst.batteries:
            for t in range(T):
                self.var("gen", b.id, t)
                self.var("ch", b.id, t)
                self.var("lvl", b.id, t)
        for h in inst.hydrogens:
            for t in range(T):
                self.var("gen", h.id, t)
                self.var("ch", h.id, t)
                self.var("lvl", h.id, t)
        for l in inst.lines:
            for t in range(T):
                self.var("pf", l.id, t, free=True)
        if has_ac:
            for n in inst.nodes:
                for t in range(T):
                    self.var("theta", n.id, t, free=True)
        for n in inst.nodes:
            costs = inst.shedding.costs_at(n.id)
            for t in range(T):
                if inst.demand.at(n.id, t) <= 0.0:
                    continue
                for k, family in enumerate(("ls1", "ls2", "ls3")):
                    j = self.var(family, n.id, t)
                    self.block.shed_terms.append((j, costs[k]))

        # energy balance at every node and step
        units_at: dict[str, list] = {n.id: [] for n in inst.nodes}
        for r in inst.renewables:
            units_at[r.node].append(("gen_only", r.id))
        for c in inst.conventionals:
            units_at[c.node].append(("gen_only", c.id))
        for h in inst.hydros:
            units_at[h.node].append(
                ("storage", h.id) if h.kind == "psp" else ("gen_only", h.id)
            )
        for b in inst.batteries:
            units_at[b.node].append(("storage", b.id))
        for h in inst.hydrogens:
            units_at[h.node].append(("storage", h.id))

        for n in inst.nodes:
            for t in range(T):
                coeffs: list[tuple[int, float]] = []
                for role, uid in units_at[n.id]:
                    coeffs.append((self.col("gen", uid, t), 1.0))
                    if role == "storage":
                        coeffs.append((self.col("ch", uid, t), -1.0))
                for l in inst.lines:
                    if l.to_node == n.id:
                        coeffs.append((self.col("pf", l.id, t), 1.0))
                    if l.from_node == n.id:
                        coeffs.append((self.col("pf", l.id, t), -1.0))
                dem = inst.demand.at(n.id, t)
                if dem > 0.0:
                    for family in ("ls1", "ls2", "ls3"):
                        coeffs.append((self.col(family, n.id, t), 1.0))
                self.row(
                    f"balance[{n.id},{t}]", coeffs, EQ, dem,
                    kind="balance", entity=n.id, t=t,
                )

        # renewable availability limits (the uncertainty-sensitive rows)
        for r in inst.renewables:
            key = ("ren", r.id)
            tech = tech_class(r.technology)
            for t in range(T):
                period = grid.period_of(t)
                flag = (tech, r.region, period.id) if period is not None else None
                self.row(
                    f"ren_cap[{r.id},{t}]",
                    [(self.col("gen", r.id, t), 1.0)],
                    LE,
                    0.0,
                    kind="ren_cap", entity=r.id, t=t,
                    cap_terms=((key, cf[r.id][t] * dt),),
                    dev_rhs=r.cf.deviation[t] * dt,
                    flag=flag,
                )

        # conventional and hydro power limits
        for c in inst.conventionals:
            for t in range(T):
                self.row(
                    f"conv_cap[{c.id},{t}]",
                    [(self.col("gen", c.id, t), 1.0)],
                    LE, c.existing_cap * dt,
                    kind="conv_cap", entity=c.id, t=t,
                )
        for h in inst.hydros:
            if h.kind in ("ror", "rsv"):
                for t in range(T):
                    self.row(
                        f"hydro_cap[{h.id},{t}]",
                        [(self.col("gen", h.id, t), 1.0)],
                        LE, h.availability[t] * h.existing_cap * dt,
                        kind="hydro_cap", entity=h.id, t=t,
                    )
            else:  # pumped storage
                energy_cap = h.existing_cap * h.storage_scale
                for t in range(T):
                    self.row(
                        f"psp_gen_cap[{h.id},{t}]",
                        [(self.col("gen", h.id, t), 1.0)],
                        LE, h.existing_cap * dt,
                        kind="psp_gen_cap", entity=h.id, t=t,
                    )
                    self.row(
                        f"psp_ch_cap[{h.id},{t}]",
                        [(self.col("ch", h.id, t), 1.0)],
                        LE, h.existing_cap * dt,
                        kind="psp_ch_cap", entity=h.id, t=t,
                    )
                    self.row(
                        f"psp_lvl_cap[{h.id},{t}]",
                        [(self.col("lvl", h.id, t), 1.0)],
                        LE, energy_cap,
                        kind="psp_lvl_cap", entity=h.id, t=t,
                    )
                    # level recursion; starts half full
                    coeffs = [
                        (self.col("lvl", h.id, t), 1.0),
                        (self.col("ch", h.id, t), -h.efficiency),
                        (self.col("gen", h.id, t), 1.0),
                    ]
                    if t == 0:
                        self.row(
                            f"psp_lvl[{h.id},0]", coeffs, EQ, energy_cap / 2.0,
                            kind="psp_lvl", entity=h.id, t=0,
                        )
                    else:
                        coeffs.append((self.col("lvl", h.id, t - 1), -1.0))
                        self.row(
                            f"psp_lvl[{h.id},{t}]", coeffs, EQ, 0.0,
                            kind="psp_lvl", entity=h.id, t=t,
                        )

        # batteries: power through the inverter, energy in the store, empty start
        for b in inst.batteries:
            inv_key = ("bat_inv", b.id)
            stor_key = ("bat_stor", b.id)
            for t in range(T):
                self.row(
                    f"bat_gen_cap[{b.id},{t}]",
                    [(self.col("gen", b.id, t), 1.0)],
                    LE, 0.0,
                    kind="bat_gen_cap", entity=b.id, t=t,
                    cap_terms=((inv_key, dt),),
                )
                self.row(
                    f"bat_ch_cap[{b.id},{t}]",
                    [(self.col("ch", b.id, t), 1.0)],
                    LE, 0.0,
                    kind="bat_ch_cap", entity=b.id, t=t,
                    cap_terms=((inv_key, dt),),
                )
                self.row(
                    f"bat_lvl_cap[{b.id},{t}]",
                    [(self.col("lvl", b.id, t), 1.0)],
                    LE, 0.0,
                    kind="bat_lvl_cap", entity=b.id, t=t,
                    cap_terms=((stor_key, 1.0),),
                )
                coeffs = [
                    (self.col("lvl", b.id, t), 1.0),
                    (self.col("ch", b.id, t), -b.efficiency),
                    (self.col("gen", b.id, t), 1.0),
                ]
                if t > 0:
                    coeffs.append((self.col("lvl", b.id, t - 1), -1.0))
                self.row(
                    f"bat_lvl[{b.id},{t}]", coeffs, EQ, 0.0,
                    kind="bat_lvl", entity=b.id, t=t,
                )

        # hydrogen chain: electrolyzer in, tank, turbine out
        for h in inst.hydrogens:
            for t in range(T):
                self.row(
                    f"h2_gen_cap[{h.id},{t}]",
                    [(self.col("gen", h.id, t), 1.0)],
                    LE, 0.0,
                    kind="h2_gen_cap", entity=h.id, t=t,
                    cap_terms=((("h2_ocgt", h.id), dt),),
                )
                self.row(
                    f"h2_ch_cap[{h.id},{t}]",
                    [(self.col("ch", h.id, t), 1.0)],
                    LE, 0.0,
                    kind="h2_ch_cap", entity=h.id, t=t,
                    cap_terms=((("h2_el", h.id), dt),),
                )
                self.row(
                    f"h2_lvl_cap[{h.id},{t}]",
                    [(self.col("lvl", h.id, t), 1.0)],
                    LE, 0.0,
                    kind="h2_lvl_cap", entity=h.id, t=t,
                    cap_terms=((("h2_stor", h.id), 1.0),),
                )
                # tank balance: stored hydrogen, in via electrolysis,
                # out via the turbine at its heat rate
                coeffs = [
                    (self.col("lvl", h.id, t), 1.0),
                    (self.col("ch", h.id, t), -h.eta_el),
                    (self.col("gen", h.id, t), 1.0 / h.eta_ocgt),
                ]
                if t > 0:
                    coeffs.append((self.col("lvl", h.id, t - 1), -1.0))
                self.row(
                    f"h2_lvl[{h.id},{t}]", coeffs, EQ, 0.0,
                    kind="h2_lvl", entity=h.id, t=t,
                )

        # network: flow definition on AC lines, capacity both ways, angles
        for l in inst.lines:
            key = ("line", l.id)
            for t in range(T):
                if l.kind == "ac":
                    self.row(
                        f"flow_def[{l.id},{t}]",
                        [
                            (self.col("pf", l.id, t), 1.0),
                            (self.col("theta", l.from_node, t), -l.susceptance * dt),
                            (self.col("theta", l.to_node, t), l.susceptance * dt),
                        ],
                        EQ, 0.0,
                        kind="flow_def", entity=l.id, t=t,
                    )
                self.row(
                    f"flow_hi[{l.id},{t}]",
                    [(self.col("pf", l.id, t), 1.0)],
                    LE, l.existing_cap * dt,
                    kind="flow_hi", entity=l.id, t=t,
                    cap_terms=((key, dt),),
                )
                self.row(
                    f"flow_lo[{l.id},{t}]",
                    [(self.col("pf", l.id, t), -1.0)],
                    LE, l.existing_cap * dt,
                    kind="flow_lo", entity=l.id, t=t,
                    cap_terms=((key, dt),),
                )
        if has_ac:
            ref = inst.reference_node().id
            for t in range(T):
                self.row(
                    f"slack[{t}]",
                    [(self.col("theta", ref, t), 1.0)],
                    EQ, 0.0,
                    kind="slack", entity=ref, t=t,
                )
            for n in inst.nodes:
                for t in range(T):
                    self.row(
                        f"ang_hi[{n.id},{t}]",
                        [(self.col("theta", n.id, t), 1.0)],
                        LE, ANGLE_BOUND,
                        kind="ang_hi", entity=n.id, t=t,
                    )
                    self.row(
                        f"ang_lo[{n.id},{t}]",
                        [(self.col("theta", n.id, t), -1.0)],
                        LE, ANGLE_BOUND,
                        kind="ang_lo", entity=n.id, t=t,
                    )

        # shedding tier caps
        fractions = inst.shedding.fractions
        for n in inst.nodes:
            for t in range(T):
                dem = inst.demand.at(n.id, t)
                if dem <= 0.0:
                    continue
                for k, family in enumerate(("ls1", "ls2", "ls3")):
                    self.row(
                        f"{family}_cap[{n.id},{t}]",
                        [(self.col(family, n.id, t), 1.0)],
                        LE, fractions[k] * dem,
                        kind=f"{family}_cap", entity=n.id, t=t,
                    )


def build_master(
    inst: NetworkInstance,
    realizations: list[dict[str, tuple[float, ...]]],
    tags: list[str] | None = None,
) -> MasterBuild:
    """Master LP: investment variables, one block per realization, epigraph."""
    if not realizations:
        raise ValueError("need at least one realization (the reference counts)")
    if tags is None:
        tags = [f"s{k}" for k in range(len(realizations))]
    model = LinearModel(name="master")
    costs = _capacity_costs(inst)
    limits = _capacity_limits(inst)
    inv = {
        key: model.add_var(f"cap[{key[0]},{key[1]}]", ub=limits[key], obj=costs[key])
        for key in capacity_keys(inst)
    }
    eta = model.add_var("recourse", obj=1.0)
    blocks = []
    for tag, cf in zip(tags, realizations):
        emitter = _BlockEmitter(model, inst, cf, tag, inv=inv)
        emitter.emit()
        # recourse epigraph: eta at least this block's operating cost
        coeffs = [(j, c) for j, c in emitter.block.cost_terms]
        coeffs.append((eta, -1.0))
        model.add_row(coeffs, LE, 0.0, name=f"{tag}:recourse_bound")
        blocks.append(emitter.block)
    return MasterBuild(instance=inst, model=model, inv=inv, eta=eta, blocks=blocks)


def _extract_block(block: BlockBuild, x: np.ndarray) -> ScenarioBlock:
    values = {key: float(x[j]) for key, j in block.cols.items()}
    fuel = float(sum(c * x[j] for j, c in block.fuel_terms))
    shed = float(sum(c * x[j] for j, c in block.shed_terms))
    return ScenarioBlock(
        tag=block.tag,
        realized_cf=block.cf,
        values=values,
        operating_cost=fuel + shed,
        fuel_cost=fuel,
        shedding_cost=shed,
    )


def solve_master(build: MasterBuild, backend) -> MasterSolution:
    res: SolveResult = backend.solve_lp(build.model)
    if res.status != "optimal":
        raise BackendError(
            f"master solve ended {res.status}; with shedding tiers covering "
            "demand this indicates corrupt input data"
        )
    capacities = {key: max(0.0, float(res.x[j])) for key, j in build.inv.items()}
    blocks = [_extract_block(b, res.x) for b in build.blocks]
    eta = float(res.x[build.eta])
    return MasterSolution(
        capacities=capacities,
        investment_cost=investment_cost(build.instance, capacities),
        recourse_bound=eta,
        objective=float(res.objective),
        blocks=blocks,
    )


def build_dispatch_lp(
    inst: NetworkInstance,
    capacities: dict[CapKey, float],
    cf: dict[str, tuple[float, ...]],
    tag: str = "d",
) -> DispatchBuild:
    """Single-block dispatch LP with capacities fixed into the rhs."""
    for key, v in capacities.items():
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"capacity {key}: bad value {v}")
    model = LinearModel(name=f"dispatch:{tag}")
    emitter = _BlockEmitter(model, inst, cf, tag, caps=capacities)
    emitter.emit()
    for j, c in emitter.block.cost_terms:
        model.add_obj(j, c)
    return DispatchBuild(
        instance=inst,
        model=model,
        capacities=dict(capacities),
        block=emitter.block,
        row_meta=emitter.row_meta,
    )


def solve_dispatch(
    inst: NetworkInstance,
    capacities: dict[CapKey, float],
    cf: dict[str, tuple[float, ...]],
    backend,
) -> tuple[float, ScenarioBlock]:
    build = build_dispatch_lp(inst, capacities, cf)
    res = backend.solve_lp(build.model)
    if res.status != "optimal":
        raise BackendError(f"dispatch solve ended {res.status}")
    return float(res.objective), _extract_block(build.block, res.x)


def dispatch_cost(
    inst: NetworkInstance,
    capacities: dict[CapKey, float],
    cf: dict[str, tuple[float, ...]],
    backend,
) -> float:
    """Optimal operating cost at fixed capacities under one realization."""
    cost, _ = solve_dispatch(inst, capacities, cf, backend)
    return cost


def check_block_physics(
    inst: NetworkInstance,
    capacities: dict[CapKey, float],
    block: ScenarioBlock,
    tol: float = 1e-6,
) -> list[str]:
    """Physical-consistency audit of one solved block; returns violations."""
    grid = inst.timegrid
    T, dt = grid.step_count, grid.step_hours
    out: list[str] = []
    val = block.values

    def v(family, entity, t):
        return val.get((family, entity, t), 0.0)

    storage_ids = {h.id for h in inst.hydros if h.kind == "psp"}
    storage_ids |= {b.id for b in inst.batteries}
    storage_ids |= {h.id for h in inst.hydrogens}
    unit_node = {}
    for coll in (inst.renewables, inst.conventionals, inst.hydros,
                 inst.batteries, inst.hydrogens):
        for u in coll:
            unit_node[u.id] = u.node

    for n in inst.nodes:
        for t in range(T):
            total = 0.0
            for uid, node in unit_node.items():
                if node != n.id:
                    continue
                total += v("gen", uid, t)
                if uid in storage_ids:
                    total -= v("ch", uid, t)
            for l in inst.lines:
                if l.to_node == n.id:
                    total += v("pf", l.id, t)
                if l.from_node == n.id:
                    total -= v("pf", l.id, t)
            dem = inst.demand.at(n.id, t)
            total += v("ls1", n.id, t) + v("ls2", n.id, t) + v("ls3", n.id, t)
            if abs(total - dem) > tol * max(1.0, dem):
                out.append(f"balance[{n.id},{t}]: residual {total - dem:.3e}")

    for r in inst.renewables:
        cap = capacities.get(("ren", r.id), 0.0)
        for t in range(T):
            limit = cap * block.realized_cf[r.id][t] * dt
            if v("gen", r.id, t) > limit + tol * max(1.0, limit):
                out.append(f"ren_cap[{r.id},{t}]: above availability")

    for h in inst.hydros:
        if h.kind != "psp":
            continue
        energy_cap = h.existing_cap * h.storage_scale
        prev = energy_cap / 2.0
        for t in range(T):
            lvl = v("lvl", h.id, t)
            expect = prev + h.efficiency * v("ch", h.id, t) - v("gen", h.id, t)
            if abs(lvl - expect) > tol * max(1.0, energy_cap):
                out.append(f"psp_lvl[{h.id},{t}]: recursion residual")
            if lvl < -tol or lvl > energy_cap + tol * max(1.0, energy_cap):
                out.append(f"psp_lvl[{h.id},{t}]: level outside [0, cap]")
            prev = lvl

    for b in inst.batteries:
        stor = capacities.get(("bat_stor", b.id), 0.0)
        prev = 0.0
        for t in range(T):
            lvl = v("lvl", b.id, t)
            expect = prev + b.efficiency * v("ch", b.id, t) - v("gen", b.id, t)
            if abs(lvl - expect) > tol * max(1.0, stor):
                out.append(f"bat_lvl[{b.id},{t}]: recursion residual")
            if lvl < -tol or lvl > stor + tol * max(1.0, stor):
                out.append(f"bat_lvl[{b.id},{t}]: level outside [0, cap]")
            prev = lvl

    for h in inst.hydrogens:
        stor = capacities.get(("h2_stor", h.id), 0.0)
        prev = 0.0
        for t in range(T):
            lvl = v("lvl", h.id, t)
            expect = prev + h.eta_el * v("ch", h.id, t) - v("gen", h.id, t) / h.eta_ocgt
            if abs(lvl - expect) > tol * max(1.0, stor):
                out.append(f"h2_lvl[{h.id},{t}]: recursion residual")
            if lvl < -tol or lvl > stor + tol * max(1.0, stor):
                out.append(f"h2_lvl[{h.id},{t}]: level outside [0, cap]")
            prev = lvl

    fractions = inst.shedding.fractions
    for n in inst.nodes:
        for t in range(T):
            dem = inst.demand.at(n.id, t)
            for k, family in enumerate(("ls1", "ls2", "ls3")):
                if v(family, n.id, t) > fractions[k] * dem + tol * max(1.0, dem):
                    out.append(f"{family}[{n.id},{t}]: above tier cap")

    for l in inst.lines:
        cap = l.existing_cap + capacities.get(("line", l.id), 0.0)
        for t in range(T):
            pf = v("pf", l.id, t)
            if abs(pf) > cap * dt + tol * max(1.0, cap * dt):
                out.append(f"pf[{l.id},{t}]: above line capacity")
            if l.kind == "ac":
                target = l.susceptance * dt * (
                    v("theta", l.from_node, t) - v("theta", l.to_node, t)
                )
                if abs(pf - target) > tol * max(1.0, abs(target)):
                    out.append(f"flow_def[{l.id},{t}]: residual")
    if any(l.kind == "ac" for l in inst.lines):
        for n in inst.nodes:
            for t in range(T):
                if abs(v("theta", n.id, t)) > ANGLE_BOUND + tol:
                    out.append(f"theta[{n.id},{t}]: outside +-pi")

    return out
