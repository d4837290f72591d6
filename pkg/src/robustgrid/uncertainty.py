"""Cardinality-budgeted low-availability events.

An adverse realization picks, independently for every declared period, up
to gamma_pv weather regions whose solar units and up to gamma_wind regions
whose wind units drop from the reference capacity factor to the synthetic
lower bound (reference minus deviation) for every step of that period.
Deviations are downward only: more availability never hurts a
cost-minimizing dispatcher, so upward branches would never be active.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

from .model import PV, WIND, NetworkInstance, tech_class

__all__ = [
    "TECH_CLASSES",
    "EnumerationCapError",
    "UncertaintyBudget",
    "WorstCaseRealization",
    "check_flags",
    "count_realizations",
    "enumerate_set",
    "is_dunkelflaute",
    "realize",
]

log = logging.getLogger(__name__)

TECH_CLASSES = (PV, WIND)

DEFAULT_ENUMERATION_CAP = 1_000_000


class EnumerationCapError(RuntimeError):
    """The realization set is too large to enumerate explicitly."""


@dataclass(frozen=True)
class UncertaintyBudget:
    """Per-period budgets: how many regions each technology class can lose."""

    gamma_pv: int = 0
    gamma_wind: int = 0

    def __post_init__(self):
        for name, g in (("gamma_pv", self.gamma_pv), ("gamma_wind", self.gamma_wind)):
            if not isinstance(g, int) or g < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {g!r}")

    def limit(self, tech: str) -> int:
        if tech == PV:
            return self.gamma_pv
        if tech == WIND:
            return self.gamma_wind
        raise ValueError(f"unknown technology class {tech!r}")

    def clamp(self, region_count: int) -> "UncertaintyBudget":
        """Cap both budgets at the region count, warning when that bites."""
        pv = min(self.gamma_pv, region_count)
        wind = min(self.gamma_wind, region_count)
        if (pv, wind) != (self.gamma_pv, self.gamma_wind):
            log.warning(
                "budget (%d, %d) exceeds the %d available regions; clamped to (%d, %d)",
                self.gamma_pv, self.gamma_wind, region_count, pv, wind,
            )
        return UncertaintyBudget(pv, wind)


Flag = tuple[str, str, str]  # (tech class, region id, period id)


@dataclass(frozen=True)
class WorstCaseRealization:
    """One member of the uncertainty set.

    flags holds the (tech, region, period) triples whose availability drops
    to the lower bound. realized_cf and dual_objective are filled in once a
    subproblem (or realize) has processed the flags.
    """

    flags: frozenset[Flag] = frozenset()
    realized_cf: dict[str, tuple[float, ...]] | None = field(
        default=None, compare=False
    )
    dual_objective: float | None = field(default=None, compare=False)

    @staticmethod
    def reference() -> "WorstCaseRealization":
        return WorstCaseRealization(frozenset())

    def hits(self, tech: str, region: str, period_id: str) -> bool:
        return (tech, region, period_id) in self.flags

    def key(self) -> tuple[Flag, ...]:
        return tuple(sorted(self.flags))

    def summary(self) -> str:
        if not self.flags:
            return "-"
        return " ".join(f"{t}:{g}@{p}" for t, g, p in self.key())


def check_flags(
    inst: NetworkInstance,
    flags: frozenset[Flag],
    budget: UncertaintyBudget | None = None,
) -> None:
    """Reject flags naming unknown entities or exceeding the budget."""
    regions = set(inst.region_ids())
    periods = {p.id for p in inst.timegrid.periods}
    counts: dict[tuple[str, str], int] = {}
    for tech, region, period in flags:
        if tech not in TECH_CLASSES:
            raise ValueError(f"unknown technology class {tech!r}")
        if region not in regions:
            raise ValueError(f"unknown region {region!r}")
        if period not in periods:
            raise ValueError(f"unknown period {period!r}")
        counts[tech, period] = counts.get((tech, period), 0) + 1
    if budget is not None:
        for (tech, period), n in counts.items():
            if n > budget.limit(tech):
                raise ValueError(
                    f"budget violation: {n} regions flagged for {tech} in "
                    f"period {period}, budget allows {budget.limit(tech)}"
                )


def realize(
    inst: NetworkInstance,
    realization: WorstCaseRealization,
    budget: UncertaintyBudget | None = None,
) -> dict[str, tuple[float, ...]]:
    """Per-unit capacity-factor series under the given realization.

    On flagged (tech, region, period) triples the unit's series drops by
    its deviation for every step of that period; everywhere else it stays
    at the reference. Values are floored at 0 against roundoff.
    """
    check_flags(inst, realization.flags, budget)
    grid = inst.timegrid
    out: dict[str, tuple[float, ...]] = {}
    for unit in inst.renewables:
        tech = tech_class(unit.technology)
        values = []
        for t in range(grid.step_count):
            v = unit.cf.reference[t]
            period = grid.period_of(t)
            if period is not None and realization.hits(tech, unit.region, period.id):
                v -= unit.cf.deviation[t]
            values.append(max(0.0, v))
        out[unit.id] = tuple(values)
    return out


def _per_period_choices(regions: list[str], gamma: int) -> list[frozenset[str]]:
    picks: list[frozenset[str]] = []
    for k in range(min(gamma, len(regions)) + 1):
        picks.extend(frozenset(c) for c in itertools.combinations(regions, k))
    return picks


def count_realizations(inst: NetworkInstance, budget: UncertaintyBudget) -> int:
    """Closed-form cardinality of the realization set."""
    G = len(inst.regions)
    per_tech = []
    for gamma in (budget.gamma_pv, budget.gamma_wind):
        per_tech.append(sum(math.comb(G, k) for k in range(min(gamma, G) + 1)))
    per_period = per_tech[0] * per_tech[1]
    return per_period ** max(1, len(inst.timegrid.periods)) if inst.timegrid.periods else 1


def enumerate_set(
    inst: NetworkInstance,
    budget: UncertaintyBudget,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[WorstCaseRealization]:
    """Every realization the budget admits, duplicate-free.

    Raises EnumerationCapError when the closed-form count exceeds cap, so
    callers never start a hopeless enumeration.
    """
    total = count_realizations(inst, budget)
    if total > cap:
        raise EnumerationCapError(
            f"{total} realizations exceed the enumeration cap of {cap}"
        )
    regions = inst.region_ids()
    periods = [p.id for p in inst.timegrid.periods]
    if not periods:
        return [WorstCaseRealization.reference()]
    pv_choices = _per_period_choices(regions, budget.gamma_pv)
    wind_choices = _per_period_choices(regions, budget.gamma_wind)
    per_period: list[list[frozenset[Flag]]] = []
    for pid in periods:
        options = []
        for pv_set, wind_set in itertools.product(pv_choices, wind_choices):
            options.append(
                frozenset(
                    [(PV, g, pid) for g in pv_set]
                    + [(WIND, g, pid) for g in wind_set]
                )
            )
        per_period.append(options)
    out = []
    for combo in itertools.product(*per_period):
        out.append(WorstCaseRealization(frozenset().union(*combo)))
    return out


def is_dunkelflaute(
    realization: WorstCaseRealization, region: str, period_id: str
) -> bool:
    """True when both technology classes are down in the region and period."""
    return realization.hits(PV, region, period_id) and realization.hits(
        WIND, region, period_id
    )
