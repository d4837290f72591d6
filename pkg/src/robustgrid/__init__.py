"""Robust capacity expansion planning for electricity networks.

The package plans generation, storage, and transmission investments that stay
feasible and cost-optimal under endogenously identified worst-case regional
low-availability events for solar and wind. The decision problem is a
two-stage robust program: investments are chosen first, an adversary then
picks which weather regions drop to their historical lower-bound capacity
factors (subject to per-technology budgets), and dispatch reacts. It is
solved by column-and-constraint generation alternating an investment master
problem with a dualized worst-case identification subproblem.
"""

from robustgrid.model import NetworkInstance, annualize_cost, validate
from robustgrid.io import load_instance, save_instance
from robustgrid.uncertainty import UncertaintyBudget
from robustgrid.ccg import CcgConfig, run_ccg, run_gamma_ladder
from robustgrid.oracle import certify_run, robust_optimum_by_enumeration

__all__ = [
    "NetworkInstance",
    "annualize_cost",
    "validate",
    "load_instance",
    "save_instance",
    "UncertaintyBudget",
    "CcgConfig",
    "run_ccg",
    "run_gamma_ladder",
    "certify_run",
    "robust_optimum_by_enumeration",
]

__version__ = "0.1.0"
