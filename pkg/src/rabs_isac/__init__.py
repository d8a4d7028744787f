"""Robust placement and OFDM subcarrier allocation for an aerial ISAC base station."""

from .link import LinkCoefficients, build_coefficients
from .scenario import RadioConfig, Scenario, build_scenario
from .solve import (Assignment, branch_and_bound, evaluate_assignment, exact_enumeration,
                    solve_subproblem_rounding, sweep_locations)

__all__ = [
    "Assignment", "LinkCoefficients", "RadioConfig", "Scenario", "branch_and_bound",
    "build_coefficients", "build_scenario", "evaluate_assignment", "exact_enumeration",
    "solve_subproblem_rounding", "sweep_locations",
]
__version__ = "0.1.0"
