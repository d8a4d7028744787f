"""Placement and subcarrier allocation solvers.

Once the serving location is fixed, sensing and communication decouple into two
independent single-location problems of identical shape (see
:func:`rabs_isac.robust.task_data`). Everything here works location by
location and task by task:

* :func:`solve_subproblem_rounding` runs the iterative LP-rounding heuristic;
* :func:`sweep_locations` scores every candidate with it and keeps the best;
* :func:`exact_enumeration` and :func:`branch_and_bound` are exact references.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .link import LinkCoefficients
from .lp import LpModel
from .robust import (COMMUNICATION, SENSING, TASKS, TaskData, assemble_task_lp,
                     protection_values_batch, task_data)
from .scenario import Scenario
from .simplex import DEFAULT_TOL, Basis, BoundedSimplex, LpSolution, Status, Tolerances

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """The LP engine failed on a relaxation that must be solvable."""


class BudgetExceeded(RuntimeError):
    pass


class ConstraintViolation(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class RoundingStep:
    lp_objective: float
    fixed: Optional[Tuple[int, int]]
    feasible: bool
    solved: bool = True      # False when the fix left nothing for an LP to decide


@dataclass
class RoundingTrace:
    steps: List[RoundingStep] = field(default_factory=list)
    simplex_iterations: int = 0
    root_basis: Optional[Basis] = None

    @property
    def lp_count(self) -> int:
        return sum(1 for s in self.steps if s.solved)


@dataclass
class TaskSolution:
    task: str
    location: int
    x: np.ndarray            # (I, K) binary
    sr: float                # min robust SR over grids
    weighted: float          # weight * sr
    root_bound: float        # weighted LP relaxation value
    trace: Optional[RoundingTrace] = None
    certified: bool = True
    bound: float = float("nan")  # weighted upper bound (exact methods)
    nodes: int = 0
    carried: bool = False    # x came from a carried-over solution, not this rounding


@dataclass
class Assignment:
    x: np.ndarray                   # (I, K) sensing allocation at the chosen location
    y: np.ndarray                   # (I, K) communication allocation
    location: Optional[int]
    sr_sense: float = 0.0
    sr_comm: float = 0.0
    objective: float = 0.0
    per_location: Dict[int, Tuple[TaskSolution, TaskSolution]] = field(default_factory=dict)
    certified: bool = True
    bound: float = float("nan")
    nodes: int = 0

    @classmethod
    def empty(cls, num_grids: int, num_subcarriers: int) -> "Assignment":
        z = np.zeros((num_grids, num_subcarriers), dtype=np.int8)
        return cls(z, z.copy(), None)

    @classmethod
    def from_tensors(cls, x: np.ndarray, y: np.ndarray, z: np.ndarray,
                     tol: float = 1e-6) -> "Assignment":
        """Collapse full ``(I, J, K)`` tensors onto the deployed location."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        z = np.asarray(z, float)
        problems = []
        for name, arr in (("x", x), ("y", y), ("z", z)):
            off = np.abs(arr - np.round(arr)) > tol
            if off.any():
                problems.append(f"{name} is not binary at {np.argwhere(off)[0].tolist()}")
        zb = np.round(z).astype(int)
        if zb.sum() > 1:
            problems.append(f"more than one location deployed: {np.flatnonzero(zb).tolist()}")
        xb, yb = np.round(x).astype(np.int8), np.round(y).astype(np.int8)
        for name, arr in (("x", xb), ("y", yb)):
            for j in np.flatnonzero(arr.sum(axis=(0, 2)) > 0):
                if zb[j] == 0:
                    problems.append(f"{name} allocates at location {j} which is not deployed")
        if problems:
            raise ConstraintViolation(problems)
        if zb.sum() == 0:
            I, _, K = x.shape
            return cls.empty(I, K)
        j = int(np.flatnonzero(zb)[0])
        return cls(xb[:, j, :], yb[:, j, :], j)


@dataclass
class Evaluation:
    objective: float
    sr_sense: float
    sr_comm: float
    grid_sr_sense: np.ndarray
    grid_sr_comm: np.ndarray


# ---------------------------------------------------------------------------
# rounding heuristic


def _fixed_counts(lb_x: np.ndarray) -> np.ndarray:
    return (lb_x >= 0.5).sum(axis=1)


def _pick_rounding_candidate(xs: np.ndarray, frac: np.ndarray, fixed_per_grid: np.ndarray):
    """Largest fractional value, preferring grids that hold no subcarrier yet.

    Ties go to the grid with fewer fixed subcarriers, then lower grid, then
    lower subcarrier index.
    """
    pool = frac & (fixed_per_grid == 0)[:, None]
    if not pool.any():
        pool = frac
    ii, kk = np.nonzero(pool)
    vals = xs[ii, kk]
    order = np.lexsort((kk, ii, fixed_per_grid[ii], -vals))
    return int(ii[order[0]]), int(kk[order[0]])


def _binary_from(xs: np.ndarray, lb_x: np.ndarray, itol: float) -> np.ndarray:
    return ((lb_x >= 0.5) | (xs >= 1.0 - itol)).astype(np.int8)


def _empty_task(data: TaskData) -> TaskSolution:
    I, K = data.num_grids, data.num_subcarriers
    return TaskSolution(data.task, data.location, np.zeros((I, K), np.int8), 0.0, 0.0, 0.0,
                        RoundingTrace(), bound=0.0)


def round_task(data: TaskData, tol: Tolerances = DEFAULT_TOL,
               basis: Optional[Basis] = None) -> TaskSolution:
    """Iterative LP rounding for one task at one location."""
    I, K = data.num_grids, data.num_subcarriers
    if I == 0 or K == 0:
        return _empty_task(data)
    model, lay = assemble_task_lp(data)
    eng = BoundedSimplex(model, tol=tol)
    lb, ub = model.lb.copy(), model.ub.copy()
    nx = I * K
    trace = RoundingTrace()
    iters = 0

    sol = eng.solve(lb, ub, basis=basis)
    iters += sol.iterations
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"root relaxation ended with status {sol.status.value}")
    root = sol.objective
    trace.root_basis = sol.basis
    trace.steps.append(RoundingStep(sol.objective, None, True))
    itol = tol.integrality
    while True:
        xs = sol.x[:nx].reshape(I, K)
        lb_x = lb[:nx].reshape(I, K)
        ub_x = ub[:nx].reshape(I, K)
        undecided = lb_x < ub_x
        at_one = undecided & (xs >= 1.0 - itol)
        lb_x[at_one] = 1.0
        frac = undecided & ~at_one & (xs > itol)
        if not frac.any():
            x = _binary_from(xs, lb_x, itol)
            break
        i0, k0 = _pick_rounding_candidate(xs, frac, _fixed_counts(lb_x))
        lb_x[i0, k0] = 1.0
        open_cols = ~(lb_x >= 0.5).any(axis=0)
        if not (undecided & open_cols[None, :]).any():
            # every subcarrier now holds a fixed grid, so the one-grid-per-subcarrier
            # rows zero the rest and a re-solve could only return this point
            x = (lb_x >= 0.5).astype(np.int8)
            trace.steps.append(RoundingStep(data.weight * data.min_sr(x), (i0, k0), True,
                                            solved=False))
            break
        trial = eng.solve(lb, ub, basis=sol.basis)
        iters += trial.iterations
        if trial.status is Status.OPTIMAL:
            trace.steps.append(RoundingStep(trial.objective, (i0, k0), True))
            sol = trial
            continue
        if trial.status is not Status.INFEASIBLE:
            raise SolverError(f"rounding LP ended with status {trial.status.value}")
        trace.steps.append(RoundingStep(float("nan"), (i0, k0), False))
        lb_x[i0, k0] = 0.0
        ub_x[i0, k0] = 0.0
        # remaining fractional entries go down, which keeps one grid per subcarrier
        x = _binary_from(xs, lb_x, itol)
        x[i0, k0] = 0
        break
    trace.simplex_iterations = iters
    sr = data.min_sr(x)
    return TaskSolution(data.task, data.location, x, sr, data.weight * sr,
                        root, trace, bound=root)


def solve_subproblem_rounding(j: int, task: str, scenario: Scenario,
                              coeffs: LinkCoefficients, tol: Tolerances = DEFAULT_TOL,
                              basis: Optional[Basis] = None) -> TaskSolution:
    """Round one task at location ``j``; ``basis`` warm-starts the first relaxation."""
    return round_task(task_data(scenario, coeffs, j, task), tol, basis)


def _combine(scenario: Scenario, sense: TaskSolution, comm: TaskSolution,
             j: int) -> Assignment:
    return Assignment(sense.x, comm.x, j, sense.sr, comm.sr,
                      sense.weighted + comm.weighted)


def _keep_better(ts: TaskSolution, carried: Optional[TaskSolution], scenario: Scenario,
                 coeffs: LinkCoefficients) -> TaskSolution:
    """Swap in a carried allocation when it scores strictly higher here."""
    if carried is None or carried.x.shape != ts.x.shape:
        return ts
    data = task_data(scenario, coeffs, ts.location, ts.task)
    sr = data.min_sr(carried.x)
    if data.weight * sr <= ts.weighted:
        return ts
    return TaskSolution(ts.task, ts.location, carried.x.copy(), sr, data.weight * sr,
                        ts.root_bound, ts.trace, bound=ts.bound, carried=True)


def solve_at_location(j: int, scenario: Scenario, coeffs: LinkCoefficients,
                      tol: Tolerances = DEFAULT_TOL,
                      bases: Optional[Dict[str, Basis]] = None,
                      carry: Optional[Tuple[TaskSolution, TaskSolution]] = None) -> Assignment:
    """Fixed-cell mode: deploy at ``j`` and round both tasks there.

    ``carry`` holds allocations found for the same location under another
    protection level; each replaces the rounded one only if it scores higher.
    """
    bases = bases or {}
    sense = solve_subproblem_rounding(j, SENSING, scenario, coeffs, tol, bases.get(SENSING))
    comm = solve_subproblem_rounding(j, COMMUNICATION, scenario, coeffs, tol,
                                     bases.get(COMMUNICATION))
    if carry is not None:
        sense = _keep_better(sense, carry[0], scenario, coeffs)
        comm = _keep_better(comm, carry[1], scenario, coeffs)
    a = _combine(scenario, sense, comm, j)
    a.per_location[j] = (sense, comm)
    return a


def sweep_locations(scenario: Scenario, coeffs: LinkCoefficients,
                    tol: Tolerances = DEFAULT_TOL,
                    locations: Optional[Sequence[int]] = None,
                    carry: Optional[Assignment] = None) -> Assignment:
    """Round both tasks at every candidate and keep the best-scoring location.

    Each relaxation starts from the previous location's optimal root basis;
    the subproblems share their sparsity pattern, so this skips most of the
    cold-start pivots.

    ``carry`` is a sweep result for the same grids and candidates at a higher
    protection level. Its allocations stay feasible here and cannot score
    lower, so offering them keeps a descending-δ series non-increasing.
    """
    J = scenario.num_locations
    if J < 1:
        raise ValueError("at least one candidate location is required")
    best: Optional[Assignment] = None
    per_location = {}
    bases: Dict[str, Basis] = {}
    for j in (range(J) if locations is None else locations):
        prior = carry.per_location.get(j) if carry is not None else None
        a = solve_at_location(j, scenario, coeffs, tol, bases, prior)
        per_location.update(a.per_location)
        for ts in a.per_location[j]:
            if ts.trace is not None and ts.trace.root_basis is not None:
                bases[ts.task] = ts.trace.root_basis
        if best is None or a.objective > best.objective:
            best = a
    best.per_location = per_location
    return best


# ---------------------------------------------------------------------------
# evaluation


def evaluate_assignment(assignment: Assignment, scenario: Scenario,
                        coeffs: LinkCoefficients) -> Evaluation:
    """Recompute robust SRs from scratch; raise :class:`ConstraintViolation` on bad input."""
    I, J, K = coeffs.shape
    problems = []
    for name, arr in (("x", assignment.x), ("y", assignment.y)):
        arr = np.asarray(arr)
        if arr.shape != (I, K):
            problems.append(f"{name} has shape {arr.shape}, expected {(I, K)}")
            continue
        if not np.all((arr == 0) | (arr == 1)):
            problems.append(f"{name} is not binary")
        for k in np.flatnonzero(arr.sum(axis=0) > 1):
            grids = np.flatnonzero(arr[:, k]).tolist()
            problems.append(f"{name}: subcarrier {k} assigned to grids {grids}")
        if assignment.location is None and arr.any():
            problems.append(f"{name} allocates subcarriers but no location is deployed")
    loc = assignment.location
    if loc is not None and not 0 <= loc < J:
        problems.append(f"location {loc} outside [0, {J})")
    if problems:
        raise ConstraintViolation(problems)
    if loc is None:
        zeros = np.zeros(I)
        return Evaluation(0.0, 0.0, 0.0, zeros, zeros.copy())
    sd = task_data(scenario, coeffs, loc, SENSING)
    cd = task_data(scenario, coeffs, loc, COMMUNICATION)
    gs = sd.grid_srs(np.asarray(assignment.x)) if I else np.zeros(0)
    gc = cd.grid_srs(np.asarray(assignment.y)) if I else np.zeros(0)
    ms = float(gs.min()) if I else 0.0
    mc = float(gc.min()) if I else 0.0
    return Evaluation(sd.weight * ms + cd.weight * mc, ms, mc, gs, gc)


# ---------------------------------------------------------------------------
# exhaustive enumeration


def enumerate_task(data: TaskData, chunk: int = 1 << 15) -> Tuple[np.ndarray, float]:
    """Best allocation over every map from subcarriers to ``{none} U grids``."""
    I, K = data.num_grids, data.num_subcarriers
    if I == 0 or K == 0:
        return np.zeros((I, K), np.int8), 0.0
    best_val, best_code = -np.inf, None
    total = (I + 1) ** K
    grids = np.arange(I)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk))
        # digit k (base I+1) is the grid owning subcarrier k, I meaning unassigned
        digits = (codes[:, None] // (I + 1) ** np.arange(K)[None, :]) % (I + 1)
        onehot = (digits[:, None, :] == grids[None, :, None]).astype(float)  # (N, I, K)
        served = np.einsum("nik,ik->ni", onehot, data.bar)
        sr = np.empty_like(served)
        for i in range(I):
            prot = protection_values_batch(onehot[:, i, :] * data.hat[i], data.level[i])
            sr[:, i] = (served[:, i] - prot) / data.demand[i]
        vals = np.clip(sr, 0.0, 1.0).min(axis=1)
        n = int(np.argmax(vals))
        if vals[n] > best_val:
            best_val, best_code = float(vals[n]), digits[n]
    x = (best_code[None, :] == grids[:, None]).astype(np.int8)
    return x, data.min_sr(x)


def exact_enumeration(scenario: Scenario, coeffs: LinkCoefficients,
                      budget: int = 1_000_000) -> Assignment:
    I, J, K = coeffs.shape
    size = (I + 1) ** K * J
    if size > budget:
        raise BudgetExceeded(f"enumeration needs {size} evaluations per task, budget is {budget}")
    best = None
    per_location = {}
    for j in range(J):
        sols = []
        for task in TASKS:
            data = task_data(scenario, coeffs, j, task)
            x, sr = enumerate_task(data)
            sols.append(TaskSolution(task, j, x, sr, data.weight * sr, float("nan")))
        per_location[j] = tuple(sols)
        a = _combine(scenario, sols[0], sols[1], j)
        if best is None or a.objective > best.objective:
            best = a
    if best is None:
        best = Assignment.empty(I, K)
    best.per_location = per_location
    best.bound = best.objective
    return best


# ---------------------------------------------------------------------------
# branch and bound


@dataclass
class MilpResult:
    status: str                 # "optimal", "infeasible", "node-limit", "cutoff"
    x: Optional[np.ndarray]
    objective: float            # incumbent value (model sense)
    bound: float                # best proven bound
    nodes: int
    lp_iterations: int

    @property
    def certified(self) -> bool:
        return self.status in ("optimal", "infeasible", "cutoff")


def _within_gap(bound: float, incumbent: float, gap_tol: float) -> bool:
    return bound <= incumbent + max(gap_tol * abs(incumbent), 1e-9)


def branch_and_bound_milp(
        model: LpModel, gap_tol: float = 1e-6, node_limit: int = 20_000,
        tol: Tolerances = DEFAULT_TOL,
        incumbent: Optional[Tuple[np.ndarray, float]] = None,
        cutoff: float = -np.inf,
        value_fn: Optional[Callable[[np.ndarray], float]] = None,
        select_fn: Optional[Callable[[np.ndarray, np.ndarray], int]] = None) -> MilpResult:
    """Best-first branch-and-bound for a maximisation model with integer marks.

    ``incumbent`` seeds the search with a known feasible ``(x, value)``;
    ``cutoff`` prunes every node that cannot beat it (reported as "cutoff" if
    nothing better exists). ``value_fn`` re-evaluates integral LP points
    exactly, ``select_fn(x, candidates)`` chooses the branching column.
    """
    if model.sense != "max":
        raise ValueError("branch_and_bound_milp expects a maximisation model")
    eng = BoundedSimplex(model, tol=tol)
    ints = np.flatnonzero(model.integer)
    itol = tol.integrality
    best_x, best_val = (None, -np.inf) if incumbent is None else incumbent
    floor_val = max(best_val, cutoff)
    counter = itertools.count()
    heap: list = []
    nodes = 0
    lp_iters = 0

    def process(lb, ub, basis) -> Optional[LpSolution]:
        nonlocal lp_iters
        sol = eng.solve(lb, ub, basis=basis)
        lp_iters += sol.iterations
        if sol.status is Status.INFEASIBLE:
            return None
        if sol.status is not Status.OPTIMAL:
            raise SolverError(f"node LP ended with status {sol.status.value}")
        return sol

    # ``nodes`` counts branched children; an integral root needs none
    root = process(model.lb.copy(), model.ub.copy(), None)
    if root is None:
        return MilpResult("infeasible", best_x, best_val, -np.inf, nodes, lp_iters)
    heapq.heappush(heap, (-root.objective, next(counter), model.lb.copy(), model.ub.copy(), root))
    status = "optimal"
    open_bound = -np.inf   # best bound among nodes left unexplored
    while heap:
        neg_bound, _, lb, ub, sol = heapq.heappop(heap)
        bound = -neg_bound
        if _within_gap(bound, floor_val, gap_tol):
            open_bound = bound
            break
        x = sol.x
        frac_part = np.abs(x[ints] - np.round(x[ints]))
        cand = ints[frac_part > itol]
        if cand.size == 0:
            xi = x.copy()
            xi[ints] = np.round(xi[ints])
            val = value_fn(xi) if value_fn is not None else sol.objective
            if val > best_val:
                best_x, best_val = xi, val
                floor_val = max(floor_val, val)
            continue
        if nodes + 2 > node_limit:
            open_bound = bound
            status = "node-limit"
            break
        if select_fn is not None:
            q = select_fn(x, cand)
        else:
            f = x[cand] - np.floor(x[cand])
            score = np.minimum(f, 1.0 - f)
            q = int(cand[np.argmax(score)])
        down_ub = ub.copy()
        down_ub[q] = math.floor(x[q])
        up_lb = lb.copy()
        up_lb[q] = math.ceil(x[q])
        for child_lb, child_ub in ((lb, down_ub), (up_lb, ub)):
            child = process(child_lb, child_ub, sol.basis)
            nodes += 1
            if child is None:
                continue
            if _within_gap(child.objective, floor_val, gap_tol):
                open_bound = max(open_bound, child.objective)
                continue
            heapq.heappush(heap, (-child.objective, next(counter), child_lb, child_ub, child))
    bound = max(best_val, open_bound)
    if status == "optimal":
        if best_val < cutoff or best_x is None:
            status = "cutoff" if np.isfinite(cutoff) else "infeasible"
    return MilpResult(status, best_x, best_val, bound, nodes, lp_iters)


def _task_select_fn(I: int, K: int):
    def select(x: np.ndarray, cand: np.ndarray) -> int:
        xs = x[:I * K]
        fixed = (np.abs(xs.reshape(I, K) - 1.0) <= 1e-6).sum(axis=1)
        f = x[cand] - np.floor(x[cand])
        score = np.minimum(f, 1.0 - f)
        ii, kk = cand // K, cand % K
        order = np.lexsort((kk, ii, fixed[ii], -score))
        return int(cand[order[0]])
    return select


def bnb_task(data: TaskData, gap_tol: float = 1e-6, node_limit: int = 20_000,
             tol: Tolerances = DEFAULT_TOL, cutoff: float = -np.inf,
             incumbent: Optional[TaskSolution] = None) -> TaskSolution:
    """Exact (within ``gap_tol``) optimum of one task at one location."""
    I, K = data.num_grids, data.num_subcarriers
    if I == 0 or K == 0:
        return _empty_task(data)
    model, lay = assemble_task_lp(data, integer=True)
    nx = I * K

    def value(xv):
        return data.weight * data.min_sr(np.round(xv[:nx]).reshape(I, K).astype(np.int8))

    seed = None
    if incumbent is not None:
        seed_x = np.zeros(model.num_vars)
        seed_x[:nx] = incumbent.x.ravel()
        seed = (seed_x, incumbent.weighted)
    res = branch_and_bound_milp(model, gap_tol, node_limit, tol, incumbent=seed, cutoff=cutoff,
                                value_fn=value, select_fn=_task_select_fn(I, K))
    if res.x is None:
        x = np.zeros((I, K), np.int8)
    else:
        x = np.round(res.x[:nx]).reshape(I, K).astype(np.int8)
    sr = data.min_sr(x)
    return TaskSolution(data.task, data.location, x, sr, data.weight * sr, float("nan"),
                        certified=res.certified, bound=res.bound, nodes=res.nodes)


def _root_bound(data: TaskData, tol: Tolerances) -> float:
    if data.num_grids == 0 or data.num_subcarriers == 0:
        return 0.0
    model, _ = assemble_task_lp(data)
    sol = BoundedSimplex(model, tol=tol).solve()
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"root relaxation ended with status {sol.status.value}")
    return sol.objective


def branch_and_bound(scenario: Scenario, coeffs: LinkCoefficients, gap_tol: float = 1e-6,
                     node_limit: int = 20_000, tol: Tolerances = DEFAULT_TOL,
                     incumbent: Optional[Assignment] = None) -> Assignment:
    """Certified optimum of the joint problem via per-location decomposition.

    Locations are visited in decreasing order of their relaxation bound and
    skipped once that bound cannot beat the incumbent. ``node_limit`` is
    shared by all task trees; when it runs out the incumbent is returned with
    ``certified=False`` and ``bound`` set to the best proven upper bound.
    """
    I, J, K = coeffs.shape
    if incumbent is None:
        incumbent = sweep_locations(scenario, coeffs, tol)
    best = incumbent
    inc_val = best.objective
    roots = {}
    for j in range(J):
        roots[j] = {}
        for task in TASKS:
            prev = incumbent.per_location.get(j)
            idx = 0 if task == SENSING else 1
            if prev is not None and np.isfinite(prev[idx].root_bound):
                roots[j][task] = prev[idx].root_bound
            else:
                roots[j][task] = _root_bound(task_data(scenario, coeffs, j, task), tol)
    order = sorted(range(J), key=lambda j: (-(roots[j][SENSING] + roots[j][COMMUNICATION]), j))
    nodes_left = node_limit
    certified = True
    global_bound = inc_val
    per_location = {}
    for j in order:
        ub_j = roots[j][SENSING] + roots[j][COMMUNICATION]
        if _within_gap(ub_j, inc_val, gap_tol):
            continue
        if nodes_left <= 0:
            certified = False
            global_bound = max(global_bound, ub_j)
            continue
        prev = incumbent.per_location.get(j)
        sd = task_data(scenario, coeffs, j, SENSING)
        s = bnb_task(sd, gap_tol, nodes_left, tol, cutoff=inc_val - roots[j][COMMUNICATION],
                     incumbent=prev[0] if prev else None)
        nodes_left -= s.nodes
        s_bound = s.bound if np.isfinite(s.bound) else roots[j][SENSING]
        if not s.certified:
            certified = False
        if _within_gap(s_bound + roots[j][COMMUNICATION], inc_val, gap_tol):
            continue
        cd = task_data(scenario, coeffs, j, COMMUNICATION)
        c = bnb_task(cd, gap_tol, max(nodes_left, 0), tol, cutoff=inc_val - s.weighted,
                     incumbent=prev[1] if prev else None)
        nodes_left -= c.nodes
        c_bound = c.bound if np.isfinite(c.bound) else roots[j][COMMUNICATION]
        if not c.certified:
            certified = False
        global_bound = max(global_bound, min(ub_j, s_bound + c_bound))
        per_location[j] = (s, c)
        total = s.weighted + c.weighted
        if total > inc_val:
            best = _combine(scenario, s, c, j)
            inc_val = total
    result = Assignment(best.x, best.y, best.location, best.sr_sense, best.sr_comm,
                        best.objective, per_location, certified,
                        max(global_bound, inc_val) if not certified else inc_val,
                        node_limit - nodes_left)
    return result
