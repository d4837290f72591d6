"""Worst-case identification: the dualized dispatch under budgeted drops.

For fixed capacities the dispatch LP is dualized mechanically, row by row:
every equality row contributes a free multiplier, every <= row a nonnegative
one, and the dual objective weighs them with the numeric right-hand sides
the capacities produced. Availability is the only place a realization can
touch the primal, so in the dual it surfaces as a bilinear product of the
availability multiplier and the region flag binary; each such product is
replaced by an auxiliary variable pinned down exactly by four big-M rows.
Maximizing over the multipliers and the flags, subject to the per-period
budgets, prices the worst realization the budget allows.

The mechanical route means there is no hand-maintained dual formulation
that could drift from the primal: adding a row to the dispatch builder
automatically carries it here. Strong duality at fixed flags is the
arbiter that the construction is right, and verify_strong_duality checks
it on demand.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .backend import EQ, LE, BackendError, LinearModel
from .master import CapKey, DispatchBuild, build_dispatch_lp, dispatch_cost
from .model import NetworkInstance, PV, WIND
from .uncertainty import Flag, UncertaintyBudget, WorstCaseRealization, realize

__all__ = [
    "CapacityHandoff",
    "DualSolution",
    "SubproblemBuild",
    "default_big_m",
    "build_subproblem",
    "solve_subproblem",
    "verify_strong_duality",
]

log = logging.getLogger(__name__)

# Balance multipliers are bounded by the top shedding cost, and the
# availability multipliers by the balance ones, so one order of magnitude
# of headroom over the steepest tier is a safe linearization constant.
DEFAULT_BIGM_FACTOR = 10.0

# A multiplier this close to the linearization constant means the constant
# may be clipping the dual; treated as an error unless strong duality shows
# the objective is unharmed (degenerate rays can park on the bound).
SATURATION_RTOL = 1e-6


def default_big_m(inst: NetworkInstance) -> float:
    top = max(inst.shedding.costs_at(n.id)[2] for n in inst.nodes)
    return DEFAULT_BIGM_FACTOR * top


@dataclass(frozen=True)
class CapacityHandoff:
    """First-stage capacities handed to the worst-case search.

    Same keys as the master's capacity map, except that line entries carry
    the total transfer capacity (existing plus expansion).
    """

    values: dict[CapKey, float]

    def __post_init__(self):
        for key, v in self.values.items():
            if not math.isfinite(v):
                raise ValueError(f"handoff {key}: non-finite value {v}")
            if v < -1e-9:
                raise ValueError(f"handoff {key}: negative value {v}")

    @staticmethod
    def from_master(
        inst: NetworkInstance, capacities: dict[CapKey, float]
    ) -> "CapacityHandoff":
        existing = {("line", l.id): l.existing_cap for l in inst.lines}
        return CapacityHandoff(
            values={
                key: max(0.0, v) + existing.get(key, 0.0)
                for key, v in capacities.items()
            }
        )

    def expansions(self, inst: NetworkInstance) -> dict[CapKey, float]:
        """Back to the dispatch builder's convention (lines as expansion)."""
        existing = {("line", l.id): l.existing_cap for l in inst.lines}
        return {
            key: max(0.0, max(0.0, v) - existing.get(key, 0.0))
            for key, v in self.values.items()
        }


@dataclass
class DualSolution:
    """Multipliers of the worst-case solve, keyed by primal row name."""

    objective: float
    z: dict[Flag, float]
    lam: dict[str, float] = field(default_factory=dict)
    mu: dict[str, float] = field(default_factory=dict)
    phi: dict[str, float] = field(default_factory=dict)
    big_m: float = 0.0


@dataclass
class SubproblemBuild:
    instance: NetworkInstance
    handoff: CapacityHandoff
    budget: UncertaintyBudget
    big_m: float
    model: LinearModel
    dual_var: list[int]
    z: dict[Flag, int]
    phi: dict[int, int]  # primal row index -> auxiliary variable
    dispatch: DispatchBuild


def build_subproblem(
    inst: NetworkInstance,
    handoff: CapacityHandoff,
    budget: UncertaintyBudget,
    big_m: float | None = None,
) -> SubproblemBuild:
    """Dualize the fixed-capacity dispatch LP and couple it to the flags."""
    if big_m is None:
        big_m = default_big_m(inst)
    if not big_m > 0:
        raise ValueError(f"big_m must be positive, got {big_m}")
    caps = handoff.expansions(inst)
    reference = {r.id: r.cf.reference for r in inst.renewables}
    disp = build_dispatch_lp(inst, caps, reference, tag="d")
    pm = disp.model

    model = LinearModel(name="worst_case", sense="max")

    # one multiplier per primal row, weighted by that row's numeric rhs
    dual_var: list[int] = []
    for meta in disp.row_meta:
        name = pm.row_names[meta.index]
        rhs = pm.row_rhs[meta.index]
        if meta.sense == EQ:
            j = model.add_var(f"lam[{name}]", lb=-math.inf, obj=rhs)
        else:
            j = model.add_var(f"mu[{name}]", obj=-rhs)
        dual_var.append(j)

    # dual constraints: transpose of the primal rows, one per primal column
    cols_of: list[list[tuple[int, float]]] = [[] for _ in range(pm.n_vars)]
    for i, row in enumerate(pm.rows):
        for j, a in row:
            cols_of[j].append((i, a))
    for j in range(pm.n_vars):
        coeffs = [
            (dual_var[i], a if pm.row_sense[i] == EQ else -a)
            for i, a in cols_of[j]
        ]
        sense = EQ if pm.var_lb[j] == -math.inf else LE
        model.add_row(coeffs, sense, pm.var_obj[j], name=f"dc[{pm.var_names[j]}]")

    # flag binaries, only where flipping one changes the dispatch at all
    candidates: dict[Flag, list[int]] = {}
    for meta in disp.row_meta:
        if meta.kind != "ren_cap" or meta.flag is None:
            continue
        cap = caps.get(("ren", meta.entity), 0.0)
        if cap * meta.dev_rhs > 0.0:
            candidates.setdefault(meta.flag, []).append(meta.index)
    z = {
        flag: model.add_var(f"z[{flag[0]},{flag[1]},{flag[2]}]", binary=True)
        for flag in sorted(candidates)
    }

    # per-period budget on the number of flagged regions per technology
    periods = sorted({flag[2] for flag in z})
    for tech in (PV, WIND):
        for pid in periods:
            members = [z[f] for f in z if f[0] == tech and f[2] == pid]
            if members:
                model.add_row(
                    [(j, 1.0) for j in members],
                    LE,
                    float(budget.limit(tech)),
                    name=f"budget[{tech},{pid}]",
                )

    # bilinear term per affected availability row: phi stands for mu * z,
    # pinned by four big-M rows, and recovers the deviation in the objective
    phi: dict[int, int] = {}
    for flag, row_ids in candidates.items():
        zj = z[flag]
        for i in row_ids:
            meta = disp.row_meta[i]
            name = pm.row_names[i]
            cap = caps.get(("ren", meta.entity), 0.0)
            pj = model.add_var(f"phi[{name}]", obj=cap * meta.dev_rhs)
            mj = dual_var[i]
            model.add_row([(pj, 1.0), (zj, -big_m)], LE, 0.0, name=f"lin1[{name}]")
            model.add_row([(pj, -1.0), (zj, -big_m)], LE, 0.0, name=f"lin2[{name}]")
            model.add_row(
                [(mj, 1.0), (pj, -1.0), (zj, big_m)], LE, big_m, name=f"lin3[{name}]"
            )
            model.add_row(
                [(mj, -1.0), (pj, 1.0), (zj, big_m)], LE, big_m, name=f"lin4[{name}]"
            )
            phi[i] = pj

    return SubproblemBuild(
        instance=inst,
        handoff=handoff,
        budget=budget,
        big_m=big_m,
        model=model,
        dual_var=dual_var,
        z=z,
        phi=phi,
        dispatch=disp,
    )


def _extract_dual(build: SubproblemBuild, x) -> DualSolution:
    pm = build.dispatch.model
    sol = DualSolution(
        objective=0.0,
        z={flag: float(x[j]) for flag, j in build.z.items()},
        big_m=build.big_m,
    )
    for meta, j in zip(build.dispatch.row_meta, build.dual_var):
        name = pm.row_names[meta.index]
        if meta.sense == EQ:
            sol.lam[name] = float(x[j])
        else:
            sol.mu[name] = float(x[j])
    for i, pj in build.phi.items():
        sol.phi[pm.row_names[i]] = float(x[pj])
    return sol


def _check_saturation(build: SubproblemBuild, x, objective: float, backend) -> None:
    """Error out if the linearization constant clipped a binding multiplier.

    A multiplier parked at the constant is harmless when it sits on a
    payoff-neutral ray (full deviation makes the availability multiplier's
    net objective coefficient vanish), so before failing the solve is
    cross-checked against the primal dispatch at the chosen flags; only a
    real duality gap raises.
    """
    threshold = build.big_m * (1.0 - SATURATION_RTOL)
    hot = [
        build.dispatch.model.row_names[i]
        for i, pj in build.phi.items()
        if x[pj] >= threshold or x[build.dual_var[i]] >= threshold
    ]
    if not hot:
        return
    flags = frozenset(flag for flag, j in build.z.items() if x[j] > 0.5)
    realized = realize(build.instance, WorstCaseRealization(flags=flags))
    primal = dispatch_cost(
        build.instance, build.handoff.expansions(build.instance), realized, backend
    )
    gap = abs(objective - primal) / max(1.0, abs(primal))
    if gap > 1e-6:
        raise BackendError(
            f"big-M saturation on {len(hot)} multiplier(s) (first: {hot[0]}) "
            f"with a duality gap of {gap:.2e}; increase big_m beyond "
            f"{build.big_m:g}"
        )
    log.debug(
        "big-M saturation on %d multiplier(s) is payoff-neutral "
        "(duality gap %.2e); solution accepted", len(hot), gap
    )


def solve_subproblem(
    build: SubproblemBuild, backend, gap_tol: float = 1e-9
) -> tuple[WorstCaseRealization, DualSolution]:
    """Maximize the dual over multipliers and flags; return the worst case."""
    res = backend.solve_milp(build.model, gap_tol=gap_tol)
    if res.status != "optimal":
        raise BackendError(f"worst-case solve ended {res.status}")
    _check_saturation(build, res.x, float(res.objective), backend)
    flags = frozenset(flag for flag, j in build.z.items() if res.x[j] > 0.5)
    realized = realize(build.instance, WorstCaseRealization(flags=flags), build.budget)
    dual = _extract_dual(build, res.x)
    dual.objective = float(res.objective)
    worst = WorstCaseRealization(
        flags=flags,
        realized_cf=realized,
        dual_objective=float(res.objective),
    )
    return worst, dual


def verify_strong_duality(
    inst: NetworkInstance,
    handoff: CapacityHandoff,
    realization: WorstCaseRealization,
    backend,
) -> float:
    """Relative gap between the dual at fixed flags and the primal dispatch.

    Flags that cannot affect the dispatch (no capacity, no deviation, or
    outside every period) carry no binary and are skipped; they change
    neither side of the comparison.
    """
    permissive = UncertaintyBudget(
        gamma_pv=len(inst.regions), gamma_wind=len(inst.regions)
    )
    build = build_subproblem(inst, handoff, permissive)
    for flag, j in build.z.items():
        value = 1.0 if flag in realization.flags else 0.0
        build.model.var_lb[j] = value
        build.model.var_ub[j] = value
    res = backend.solve_milp(build.model, gap_tol=1e-12)
    if res.status != "optimal":
        raise BackendError(f"fixed-flag dual solve ended {res.status}")
    realized = realize(inst, realization)
    primal = dispatch_cost(inst, handoff.expansions(inst), realized, backend)
    return abs(float(res.objective) - primal) / max(1.0, abs(primal))
