"""Brute-force certification of the decomposition on small instances.

With a finite uncertainty set the robust problem collapses to one LP: a
dispatch block for every member plus the recourse epigraph. Enumerating
members and solving that LP gives the exact robust optimum with no
decomposition, no duality, and no big-M involved, which makes it a fair
referee for the iterative pipeline. The only shared machinery is the block
builder and the LP backend, both tested independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backend import BackendError
from .ccg import CcgTrace
from .master import MasterSolution, build_master, dispatch_cost, solve_master
from .model import NetworkInstance
from .subproblem import CapacityHandoff, build_subproblem, solve_subproblem
from .uncertainty import (
    DEFAULT_ENUMERATION_CAP,
    UncertaintyBudget,
    WorstCaseRealization,
    enumerate_set,
    realize,
)

__all__ = [
    "robust_optimum_by_enumeration",
    "worst_case_by_enumeration",
    "CertificationCheck",
    "CertificationReport",
    "certify_run",
]


def robust_optimum_by_enumeration(
    inst: NetworkInstance,
    budget: UncertaintyBudget,
    backend,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Exact robust optimum: one LP with a block per enumerated realization."""
    members = enumerate_set(inst, budget, cap=cap)
    cfs = [realize(inst, m) for m in members]
    sol = solve_master(build_master(inst, cfs), backend)
    return sol.objective


def worst_case_by_enumeration(
    inst: NetworkInstance,
    capacities: dict,
    budget: UncertaintyBudget,
    backend,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[list[WorstCaseRealization], float]:
    """Evaluate the dispatch under every realization; return the argmax set.

    Ties within 1e-9 relative of the maximum are all reported, so symmetric
    instances surface every equally bad realization.
    """
    members = enumerate_set(inst, budget, cap=cap)
    costs = [
        dispatch_cost(inst, capacities, realize(inst, m), backend) for m in members
    ]
    worst = max(costs)
    tol = 1e-9 * max(1.0, abs(worst))
    argmax = [m for m, c in zip(members, costs) if c >= worst - tol]
    return argmax, worst


@dataclass
class CertificationCheck:
    name: str
    passed: bool
    value: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "detail": self.detail,
        }


@dataclass
class CertificationReport:
    checks: list[CertificationCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def certify_run(
    inst: NetworkInstance,
    budget: UncertaintyBudget,
    ccg_result: tuple[MasterSolution, CcgTrace],
    backend,
    tolerance: float = 1e-6,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> CertificationReport:
    """Referee a finished run against exhaustive enumeration.

    Three checks: the objective matches the enumerated optimum, the final
    recourse bound covers the dispatch cost of every member, and the
    worst-case search at the final capacities agrees with the enumerated
    maximum. Failures are report entries, never exceptions.
    """
    solution, _ = ccg_result
    report = CertificationReport()

    exact = robust_optimum_by_enumeration(inst, budget, backend, cap=cap)
    gap = abs(solution.objective - exact) / max(1.0, abs(exact))
    report.checks.append(
        CertificationCheck(
            name="objective_matches_enumeration",
            passed=gap <= tolerance,
            value=gap,
            detail=f"run {solution.objective:.10g} vs exact {exact:.10g}",
        )
    )

    members = enumerate_set(inst, budget, cap=cap)
    costs = [
        dispatch_cost(inst, solution.capacities, realize(inst, m), backend)
        for m in members
    ]
    bound = solution.recourse_bound + tolerance * max(1.0, solution.recourse_bound)
    uncovered = [
        (m, c) for m, c in zip(members, costs) if c > bound
    ]
    worst_excess = max(
        (c - solution.recourse_bound for c in costs), default=0.0
    )
    report.checks.append(
        CertificationCheck(
            name="recourse_covers_all_realizations",
            passed=not uncovered,
            value=worst_excess,
            detail=(
                f"{len(uncovered)} of {len(members)} realization(s) above the "
                f"recourse bound, first: {uncovered[0][0].summary()}"
                if uncovered
                else f"all {len(members)} realization(s) covered"
            ),
        )
    )

    handoff = CapacityHandoff.from_master(inst, solution.capacities)
    try:
        sub = build_subproblem(inst, handoff, budget)
        worst, _ = solve_subproblem(sub, backend, gap_tol=tolerance / 10.0)
        enum_max = max(costs)
        sub_gap = abs(worst.dual_objective - enum_max) / max(1.0, abs(enum_max))
        report.checks.append(
            CertificationCheck(
                name="worst_case_agrees_with_enumeration",
                passed=sub_gap <= tolerance,
                value=sub_gap,
                detail=(
                    f"search {worst.dual_objective:.10g} vs enumerated "
                    f"{enum_max:.10g}"
                ),
            )
        )
    except BackendError as err:
        report.checks.append(
            CertificationCheck(
                name="worst_case_agrees_with_enumeration",
                passed=False,
                value=float("nan"),
                detail=f"worst-case solve failed: {err}",
            )
        )

    return report
