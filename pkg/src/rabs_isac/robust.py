"""Cardinality-constrained robust satisfaction rates and their LP/MILP models.

The worst-case loss ("protection") of a grid is the largest total bias that an
adversary can realise by pushing at most ``floor(G)`` assigned coefficients to
their lower bound plus one more by the fractional remainder of ``G``. It is
available greedily, as an LP and as that LP's dual; the dual form is what turns
the robust constraint into linear rows.

Inside the LP models the per-grid rows are divided by the grid demand and the
dual variables are expressed in demand units (``alpha / M_i``, ``beta / M_i``),
which keeps every coefficient of order one without changing the feasible set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .link import LinkCoefficients
from .lp import EQ, GE, LE, LpBuilder, LpModel
from .scenario import Scenario
from .simplex import DEFAULT_TOL, Status, Tolerances, solve_lp

SENSING, COMMUNICATION = "sensing", "communication"
TASKS = (SENSING, COMMUNICATION)


@dataclass(frozen=True)
class ProtectionInput:
    """Non-negative weighted biases ``M_hat * x`` and a protection level."""
    values: np.ndarray
    gamma: float
    keys: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if np.any(v < 0):
            raise ValueError("weighted biases must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def clamped_gamma(self) -> float:
        return min(max(float(self.gamma), 0.0), float(len(self.values)))


def protection_value_greedy(inp: ProtectionInput) -> float:
    v = inp.values
    gamma = inp.clamped_gamma
    if v.size == 0 or gamma == 0.0:
        return 0.0
    order = np.argsort(-v, kind="stable")  # ties: lower (j, k) first
    top = v[order]
    whole = int(math.floor(gamma))
    total = float(top[:whole].sum())
    if whole < top.size:
        total += (gamma - whole) * float(top[whole])
    return total


def protection_values_batch(values: np.ndarray, gamma: float) -> np.ndarray:
    """Greedy protection for each row of a ``(N, n)`` array."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    gamma = min(max(float(gamma), 0.0), float(n))
    if n == 0 or gamma == 0.0:
        return np.zeros(values.shape[:-1])
    top = -np.sort(-values, axis=-1)
    whole = int(math.floor(gamma))
    out = top[..., :whole].sum(axis=-1)
    if whole < n:
        out = out + (gamma - whole) * top[..., whole]
    return out


def protection_primal_model(inp: ProtectionInput) -> LpModel:
    """``max sum(v_e u_e)  s.t.  sum(u_e) <= G``, ``0 <= u_e <= 1``."""
    b = LpBuilder("max")
    cols = [b.add_var(f"u[{e}]", 0.0, 1.0, v) for e, v in enumerate(inp.values)]
    b.add_row({c: 1.0 for c in cols}, LE, inp.clamped_gamma, "budget")
    return b.build()


def protection_value_primal_lp(inp: ProtectionInput, tol: Tolerances = DEFAULT_TOL) -> float:
    if inp.values.size == 0:
        return 0.0
    sol = solve_lp(protection_primal_model(inp), tol=tol)
    if sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"protection LP ended with status {sol.status.value}")
    return sol.objective


def protection_dual_point(inp: ProtectionInput) -> Tuple[float, np.ndarray]:
    """Optimal ``(alpha, beta)`` of the dual read off the sorted values."""
    v = inp.values
    whole = int(math.floor(inp.clamped_gamma))
    if v.size == 0:
        return 0.0, v.copy()
    top = np.sort(v)[::-1]
    alpha = float(top[whole]) if whole < v.size else 0.0
    return alpha, np.maximum(v - alpha, 0.0)


def protection_dual_model(inp: ProtectionInput) -> LpModel:
    """``min sum(beta) + G alpha  s.t.  alpha + beta_e >= v_e``, all variables >= 0."""
    b = LpBuilder("min")
    a = b.add_var("alpha", 0.0, np.inf, inp.clamped_gamma)
    for e, v in enumerate(inp.values):
        be = b.add_var(f"beta[{e}]", 0.0, np.inf, 1.0)
        b.add_row({a: 1.0, be: 1.0}, GE, v)
    return b.build()


def protection_value_dual_lp(inp: ProtectionInput, tol: Tolerances = DEFAULT_TOL) -> float:
    if inp.values.size == 0:
        return 0.0
    sol = solve_lp(protection_dual_model(inp), tol=tol)
    if sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"protection dual LP ended with status {sol.status.value}")
    return sol.objective


def robust_sr(x_row: np.ndarray, bar: np.ndarray, hat: np.ndarray, demand: float,
              gamma: float, clamp: bool = True) -> float:
    """Robust satisfaction rate of one grid for a binary assignment row."""
    if demand <= 0:
        raise ValueError("demand must be positive")
    x = np.asarray(x_row, dtype=float).ravel()
    served = float(np.asarray(bar, float).ravel() @ x)
    prot = protection_value_greedy(ProtectionInput(np.asarray(hat, float).ravel() * x, gamma))
    sr = (served - prot) / demand
    return min(max(sr, 0.0), 1.0) if clamp else sr


@dataclass(frozen=True)
class RobustSrResult:
    sr_per_grid: np.ndarray
    protection_per_grid: np.ndarray
    min_sr: float


def robust_sr_table(x: np.ndarray, bar: np.ndarray, hat: np.ndarray, demand: np.ndarray,
                    level: np.ndarray) -> RobustSrResult:
    """Per-grid robust SRs for an ``(I, n)`` assignment against ``(I, n)`` coefficients."""
    x = np.asarray(x, float)
    I = x.shape[0]
    prot = np.array([protection_value_greedy(ProtectionInput(hat[i] * x[i], level[i]))
                     for i in range(I)])
    served = np.einsum("in,in->i", np.asarray(bar, float), x)
    sr = np.clip((served - prot) / np.asarray(demand, float), 0.0, 1.0)
    return RobustSrResult(sr, prot, float(sr.min()) if I else 0.0)


@dataclass(frozen=True)
class TaskData:
    """Coefficients of one task restricted to a single candidate location."""
    task: str
    location: int
    bar: np.ndarray      # (I, K)
    hat: np.ndarray      # (I, K)
    demand: np.ndarray   # (I,)
    level: np.ndarray    # (I,) protection levels
    weight: float

    @property
    def num_grids(self) -> int:
        return self.bar.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.bar.shape[1]

    def grid_srs(self, x: np.ndarray, clamp: bool = True) -> np.ndarray:
        return np.array([robust_sr(x[i], self.bar[i], self.hat[i], self.demand[i],
                                   self.level[i], clamp) for i in range(self.num_grids)])

    def min_sr(self, x: np.ndarray) -> float:
        if self.num_grids == 0:
            return 0.0
        return float(self.grid_srs(x).min())


def task_data(scenario: Scenario, coeffs: LinkCoefficients, j: int, task: str) -> TaskData:
    """Slice one task at location ``j``.

    Only the ``K`` coefficients of the deployed location can carry a bias, so
    levels above ``K`` protect exactly as much as ``K`` itself; clamping them
    keeps the LP coefficients on the same scale as the rest of the row.
    """
    mu = scenario.radio.mu
    K = coeffs.shape[2]
    if task == SENSING:
        return TaskData(task, j, coeffs.m_bar[:, j, :], coeffs.m_hat[:, j, :],
                        np.asarray(scenario.demands.m_sen, float),
                        np.minimum(np.asarray(scenario.protection.gamma, float), K), mu)
    if task == COMMUNICATION:
        return TaskData(task, j, coeffs.r_bar[:, j, :], coeffs.r_hat[:, j, :],
                        np.asarray(scenario.demands.r_com, float),
                        np.minimum(np.asarray(scenario.protection.lam, float), K), 1.0 - mu)
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class SubproblemLayout:
    """Column positions inside a per-location subproblem model."""
    num_grids: int
    num_subcarriers: int

    def x(self, i: int, k: int) -> int:
        return i * self.num_subcarriers + k

    @property
    def x_slice(self) -> slice:
        return slice(0, self.num_grids * self.num_subcarriers)

    @property
    def sr(self) -> int:
        return self.num_grids * self.num_subcarriers

    def alpha(self, i: int) -> int:
        return self.sr + 1 + i

    def beta(self, i: int, k: int) -> int:
        return self.sr + 1 + self.num_grids + i * self.num_subcarriers + k


def assemble_task_lp(data: TaskData, integer: bool = False) -> Tuple[LpModel, SubproblemLayout]:
    """Per-location model for one task; relaxation unless ``integer``."""
    I, K = data.num_grids, data.num_subcarriers
    lay = SubproblemLayout(I, K)
    sym = "x" if data.task == SENSING else "y"
    sr_name = "M_sr" if data.task == SENSING else "R_sr"
    j = data.location
    b = LpBuilder("max")
    for i in range(I):
        for k in range(K):
            b.add_var(f"{sym}[{i},{j},{k}]", 0.0, 1.0, integer=integer)
    b.add_var(sr_name, 0.0, 1.0, data.weight)
    for i in range(I):
        b.add_var(f"alpha_{sym}[{i}]", 0.0, np.inf)
    for i in range(I):
        for k in range(K):
            b.add_var(f"beta_{sym}[{i},{j},{k}]", 0.0, np.inf)

    for i in range(I):
        row = [(lay.x(i, k), data.bar[i, k] / data.demand[i]) for k in range(K)]
        row += [(lay.beta(i, k), -1.0) for k in range(K)]
        row += [(lay.alpha(i), -float(data.level[i])), (lay.sr, -1.0)]
        b.add_row(row, GE, 0.0, f"sr_{sym}[{i}]")
    for i in range(I):
        for k in range(K):
            b.add_row([(lay.alpha(i), 1.0), (lay.beta(i, k), 1.0),
                       (lay.x(i, k), -data.hat[i, k] / data.demand[i])],
                      GE, 0.0, f"prot_{sym}[{i},{k}]")
    for k in range(K):
        b.add_row([(lay.x(i, k), 1.0) for i in range(I)], LE, 1.0, f"one_{sym}[{k}]")
    return b.build(), lay


def assemble_subproblem_lp(j: int, task: str, scenario: Scenario,
                           coeffs: LinkCoefficients) -> LpModel:
    """LP relaxation of the single-location, single-task problem."""
    return assemble_task_lp(task_data(scenario, coeffs, j, task))[0]


def structural_counts(scenario: Scenario) -> dict:
    """Variable/row counts of one subproblem relaxation.

    ``rows_with_x_bounds`` also counts the ``x <= 1`` and ``SR <= 1`` bounds as
    rows, which reproduces the published constraint count.
    """
    I, K = scenario.num_grids, scenario.num_subcarriers
    return {
        "variables": 2 * I * K + I + 1,
        "rows": I + I * K + K,
        "rows_with_x_bounds": 2 * I * K + I + K + 1,
    }


def assemble_full_milp(scenario: Scenario, coeffs: LinkCoefficients,
                       fixed_location: Optional[int] = None) -> LpModel:
    """Joint placement/allocation MILP over every candidate location.

    ``fixed_location`` forces ``z`` to that index (all other ``z`` fixed to 0);
    ``fixed_location=-1`` forces every ``z`` to 0.
    """
    I, J, K = coeffs.shape
    mu = scenario.radio.mu
    b = LpBuilder("max")
    idx = {}
    for sym in ("x", "y"):
        for i in range(I):
            for j in range(J):
                for k in range(K):
                    idx[sym, i, j, k] = b.add_var(f"{sym}[{i},{j},{k}]", 0.0, 1.0, integer=True)
    for j in range(J):
        lo = hi = None
        if fixed_location is not None:
            lo = hi = 1.0 if j == fixed_location else 0.0
        idx["z", j] = b.add_var(f"z[{j}]", 0.0 if lo is None else lo, 1.0 if hi is None else hi,
                                integer=True)
    idx["M"] = b.add_var("M_sr", 0.0, 1.0, mu)
    idx["R"] = b.add_var("R_sr", 0.0, 1.0, 1.0 - mu)
    for sym in ("x", "y"):
        for i in range(I):
            idx["alpha", sym, i] = b.add_var(f"alpha_{sym}[{i}]", 0.0, np.inf)
        for i in range(I):
            for j in range(J):
                for k in range(K):
                    idx["beta", sym, i, j, k] = b.add_var(f"beta_{sym}[{i},{j},{k}]", 0.0, np.inf)

    tables = {"x": (coeffs.m_bar, coeffs.m_hat, scenario.demands.m_sen, scenario.protection.gamma, "M"),
              "y": (coeffs.r_bar, coeffs.r_hat, scenario.demands.r_com, scenario.protection.lam, "R")}
    for sym, (bar, hat, dem, level, sr) in tables.items():
        for i in range(I):
            row = []
            for j in range(J):
                for k in range(K):
                    row.append((idx[sym, i, j, k], bar[i, j, k] / dem[i]))
                    row.append((idx["beta", sym, i, j, k], -1.0))
            row += [(idx["alpha", sym, i], -float(level[i])), (idx[sr], -1.0)]
            b.add_row(row, GE, 0.0, f"sr_{sym}[{i}]")
        for i in range(I):
            for j in range(J):
                for k in range(K):
                    b.add_row([(idx["alpha", sym, i], 1.0), (idx["beta", sym, i, j, k], 1.0),
                               (idx[sym, i, j, k], -hat[i, j, k] / dem[i])],
                              GE, 0.0, f"prot_{sym}[{i},{j},{k}]")
        for k in range(K):
            b.add_row([(idx[sym, i, j, k], 1.0) for i in range(I) for j in range(J)],
                      LE, 1.0, f"one_{sym}[{k}]")
        for j in range(J):
            row = [(idx[sym, i, j, k], 1.0) for i in range(I) for k in range(K)]
            row.append((idx["z", j], -float(I * K)))
            b.add_row(row, LE, 0.0, f"link_{sym}[{j}]")
    b.add_row([(idx["z", j], 1.0) for j in range(J)], LE, 1.0, "one_rabs")
    return b.build()


def full_milp_assignment(model: LpModel, x: np.ndarray, shape: Sequence[int]):
    """Split a full-MILP solution vector into ``(x, y, z)`` arrays."""
    I, J, K = shape
    n = I * J * K
    xs = np.asarray(x[:n]).reshape(I, J, K)
    ys = np.asarray(x[n:2 * n]).reshape(I, J, K)
    zs = np.asarray(x[2 * n:2 * n + J])
    return xs, ys, zs


__all__ = [
    "SENSING", "COMMUNICATION", "TASKS", "ProtectionInput", "protection_value_greedy",
    "protection_values_batch", "protection_primal_model", "protection_value_primal_lp",
    "protection_dual_point", "protection_dual_model", "protection_value_dual_lp",
    "RobustSrResult", "robust_sr_table",
    "robust_sr", "TaskData", "task_data", "SubproblemLayout", "assemble_task_lp",
    "assemble_subproblem_lp", "structural_counts", "assemble_full_milp",
    "full_milp_assignment", "EQ", "LE", "GE", "LpModel",
]
