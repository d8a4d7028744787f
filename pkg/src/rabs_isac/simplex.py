"""Revised bounded-variable simplex.

Every row gets a slack so the working form is ``[A | I] (x, s) = b`` with
bounds on all columns; row relations turn into slack bounds. Bounds are handled
natively: nonbasic columns sit at a bound (or at zero when free) and boxed
columns may flip between bounds without a basis change.

Cold starts run a composite primal simplex (phase 1 minimises the sum of
infeasibilities, phase 2 the objective) with Dantzig pricing, a Harris
two-pass ratio test and a switch to Bland's rule while the objective stalls.
Warm starts after bound changes (rounding, branch-and-bound) usually leave the
basis dual feasible but primal infeasible, which the dual simplex repairs in a
handful of pivots before a final primal pass confirms optimality.

The basis is held as a sparse LU factorization plus a product-form eta file,
refactorized every ``refactor_every`` updates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.sparse.linalg import splu

from .lp import EQ, GE, LE, LpModel

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3
_REL_PIVOT = 1e-7   # pivots smaller than this times the largest candidate are refused


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-7
    opt: float = 1e-7
    pivot: float = 1e-9
    integrality: float = 1e-6


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Basis:
    """Basic column indices plus the status of every column (slacks last)."""
    head: np.ndarray
    status: np.ndarray


@dataclass
class LpSolution:
    status: Status
    objective: float
    x: np.ndarray
    iterations: int
    basis: Optional[Basis] = None
    duals: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class SingularBasis(RuntimeError):
    pass


class _Factor:
    """Sparse LU of the basis plus product-form eta updates.

    Columns are first permuted onto a zero-free diagonal so the symmetric
    minimum-degree ordering keeps fill-in low.
    """

    def __init__(self, B: sp.csc_matrix):
        perm = maximum_bipartite_matching(B, perm_type="column")
        if np.any(perm < 0):
            raise SingularBasis("basis is structurally singular")
        self.perm = perm
        try:
            self.lu = splu(B[:, perm].tocsc(), permc_spec="MMD_AT_PLUS_A",
                           diag_pivot_thresh=0.1)
        except RuntimeError as exc:
            raise SingularBasis(str(exc)) from exc
        self.etas: list = []

    def solve(self, v: np.ndarray) -> np.ndarray:
        w = np.empty_like(v)
        w[self.perm] = self.lu.solve(v)
        return w

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.solve(v)
        for r, col in self.etas:
            wr = w[r] / col[r]
            if wr != 0.0:
                w -= wr * col
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        u = np.array(v, dtype=float)
        for r, col in reversed(self.etas):
            s = col @ u - col[r] * u[r]
            u[r] = (u[r] - s) / col[r]
        return self.lu.solve(np.ascontiguousarray(u[self.perm]), trans="T")


class BoundedSimplex:
    """Simplex engine bound to one constraint matrix.

    Bounds and the starting basis may change between calls to :meth:`solve`,
    which is what the rounding loop and branch-and-bound rely on.
    """

    def __init__(self, model: LpModel, tol: Tolerances = DEFAULT_TOL,
                 max_iter: Optional[int] = None, refactor_every: int = 40,
                 stall_threshold: int = 50):
        self.model = model
        self.tol = tol
        m, n = model.A.shape
        self.m, self.n = m, n
        self.N = n + m
        self.max_iter = max_iter if max_iter is not None else 50 * (self.N + 10)
        self.refactor_every = refactor_every
        self.stall_threshold = stall_threshold

        self.Af = sp.hstack([model.A.tocsc(), sp.identity(m, format="csc")],
                            format="csc")
        self.AfT = self.Af.T.tocsr()
        sign = -1.0 if model.sense == "max" else 1.0
        self.cost = np.concatenate([sign * model.c, np.zeros(m)])
        self.b = np.asarray(model.rhs, dtype=float)
        rel = np.array(model.relations, dtype=object)
        self.slack_lb = np.where(rel == LE, 0.0, np.where(rel == GE, -np.inf, 0.0))
        self.slack_ub = np.where(rel == LE, np.inf, np.where(rel == EQ, 0.0, 0.0))
        self.slack_lb = self.slack_lb.astype(float)
        self.slack_ub = self.slack_ub.astype(float)

    # public ------------------------------------------------------------

    def solve(self, lb: Optional[np.ndarray] = None, ub: Optional[np.ndarray] = None,
              basis: Optional[Basis] = None) -> LpSolution:
        lb = self.model.lb if lb is None else np.asarray(lb, dtype=float)
        ub = self.model.ub if ub is None else np.asarray(ub, dtype=float)
        self.lb = np.concatenate([lb, self.slack_lb])
        self.ub = np.concatenate([ub, self.slack_ub])
        self.iters = 0
        if np.any(self.lb > self.ub + self.tol.feas):
            return self._result(Status.INFEASIBLE)
        if self.m == 0:
            return self._solve_unconstrained()

        if basis is not None and len(basis.head) == self.m and len(basis.status) == self.N:
            try:
                self._load_basis(basis)
            except SingularBasis:
                self._slack_basis()
        else:
            self._slack_basis()

        try:
            status = self._run()
        except SingularBasis:
            # numerically lost; start over from the all-slack basis
            self._slack_basis()
            status = self._run()
        return self._result(status)

    def _run(self) -> Status:
        status = None
        if not self._primal_feasible() and self._make_dual_feasible():
            status = self._dual()
        if status is not Status.INFEASIBLE:
            status = self._primal()
        return status

    # setup -------------------------------------------------------------

    def _default_status(self, cols: np.ndarray) -> np.ndarray:
        lbf = np.isfinite(self.lb[cols])
        ubf = np.isfinite(self.ub[cols])
        return np.where(lbf, AT_LB, np.where(ubf, AT_UB, FREE)).astype(np.int8)

    def _slack_basis(self):
        self.status = np.full(self.N, BASIC, dtype=np.int8)
        self.status[:self.n] = self._default_status(np.arange(self.n))
        self.head = np.arange(self.n, self.N)
        self._init_values()

    def _load_basis(self, basis: Basis):
        self.head = np.array(basis.head, dtype=np.int64)
        st = np.array(basis.status, dtype=np.int8)
        # a previous bound may have become infinite
        stale = (st != BASIC) & (((st == AT_LB) & ~np.isfinite(self.lb)) |
                                 ((st == AT_UB) & ~np.isfinite(self.ub)) | (st == FREE))
        idx = np.flatnonzero(stale)
        st[idx] = self._default_status(idx)
        self.status = st
        self._init_values()

    def _init_values(self):
        self.x = np.zeros(self.N)
        st = self.status
        self.x[st == AT_LB] = self.lb[st == AT_LB]
        self.x[st == AT_UB] = self.ub[st == AT_UB]
        self._refactor()

    def _refactor(self):
        B = self.Af[:, self.head]
        self.factor = _Factor(B.tocsc())
        xn = self.x.copy()
        xn[self.head] = 0.0
        self.x[self.head] = self.factor.solve(self.b - self.Af @ xn)

    def _pivot_update(self, r: int, w: np.ndarray):
        self.factor.etas.append((r, w))
        if len(self.factor.etas) >= self.refactor_every:
            self._refactor()

    # helpers -----------------------------------------------------------

    def _reduced_costs(self, cB: np.ndarray, cost: np.ndarray) -> np.ndarray:
        y = self.factor.btran(cB)
        self._y = y
        return cost - self.AfT @ y

    def _infeasibility(self):
        xb = self.x[self.head]
        below = self.lb[self.head] - xb
        above = xb - self.ub[self.head]
        return below, above

    def _primal_feasible(self) -> bool:
        below, above = self._infeasibility()
        return bool(max(below.max(initial=0.0), above.max(initial=0.0)) <= self.tol.feas)

    def _make_dual_feasible(self) -> bool:
        """Flip boxed nonbasics to their profitable bound; report dual feasibility."""
        d = self._reduced_costs(self.cost[self.head], self.cost)
        t = self.tol.opt
        st = self.status
        fixed = self.lb == self.ub
        wrong_lb = (st == AT_LB) & (d < -t) & ~fixed
        wrong_ub = (st == AT_UB) & (d > t) & ~fixed
        wrong_free = (st == FREE) & (np.abs(d) > t)
        if np.any(wrong_free):
            return False
        if np.any(wrong_lb & ~np.isfinite(self.ub)) or np.any(wrong_ub & ~np.isfinite(self.lb)):
            return False
        if np.any(wrong_lb) or np.any(wrong_ub):
            st[wrong_lb] = AT_UB
            self.x[wrong_lb] = self.ub[wrong_lb]
            st[wrong_ub] = AT_LB
            self.x[wrong_ub] = self.lb[wrong_ub]
            self._refactor()
        return True

    def _column(self, q: int) -> np.ndarray:
        a = np.zeros(self.m)
        lo, hi = self.Af.indptr[q], self.Af.indptr[q + 1]
        a[self.Af.indices[lo:hi]] = self.Af.data[lo:hi]
        return a

    def _swap(self, r: int, q: int, leave_status: int, leave_value: float, w: np.ndarray):
        leaving = self.head[r]
        self.head[r] = q
        self.status[q] = BASIC
        self.status[leaving] = leave_status
        self.x[leaving] = leave_value
        self._pivot_update(r, w)

    # primal simplex ----------------------------------------------------

    def _primal(self) -> Status:
        tol = self.tol
        bland = False
        best = np.inf
        since_improve = 0
        verified = False
        while True:
            if self.iters >= self.max_iter:
                return Status.ITERATION_LIMIT
            below, above = self._infeasibility()
            lo_bad = below > tol.feas
            hi_bad = above > tol.feas
            phase1 = bool(lo_bad.any() or hi_bad.any())
            if phase1:
                cB = np.where(lo_bad, -1.0, np.where(hi_bad, 1.0, 0.0))
                d = self._reduced_costs(cB, np.zeros(self.N))
                progress = float(below[lo_bad].sum() + above[hi_bad].sum())
            else:
                d = self._reduced_costs(self.cost[self.head], self.cost)
                progress = float(self.cost @ self.x)

            if progress < best - 1e-12 * max(1.0, abs(best)):
                best = progress
                since_improve = 0
                bland = False
            else:
                since_improve += 1
                if since_improve > self.stall_threshold:
                    bland = True

            st = self.status
            movable = self.lb < self.ub
            inc = ((st == AT_LB) | (st == FREE)) & (d < -tol.opt) & movable
            dec = ((st == AT_UB) | (st == FREE)) & (d > tol.opt) & movable
            elig = inc | dec
            if not elig.any():
                # confirm on a fresh factorization before declaring a verdict
                if not verified and self.factor.etas:
                    self._refactor()
                    verified = True
                    continue
                if phase1:
                    return Status.INFEASIBLE
                return Status.OPTIMAL
            verified = False

            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            direction = 1.0 if inc[q] else -1.0

            w = self.factor.ftran(self._column(q))
            delta = -direction * w
            xb = self.x[self.head]
            lbB = self.lb[self.head]
            ubB = self.ub[self.head]
            if phase1:
                lo_b, hi_b = lo_bad[:], hi_bad[:]
            else:
                lo_b = hi_b = np.zeros(self.m, dtype=bool)

            piv = max(tol.pivot, _REL_PIVOT * float(np.abs(delta).max(initial=0.0)))
            down = delta < -piv
            up = delta > piv
            # target bound reached by each basic variable along the ray
            tgt = np.full(self.m, np.nan)
            relax = np.full(self.m, np.inf)
            exact = np.full(self.m, np.inf)
            with np.errstate(invalid="ignore", divide="ignore"):
                m_down_hi = down & hi_b
                m_down_ok = down & ~hi_b & ~lo_b & np.isfinite(lbB)
                m_up_lo = up & lo_b
                m_up_ok = up & ~lo_b & ~hi_b & np.isfinite(ubB)

                exact[m_down_ok] = (xb[m_down_ok] - lbB[m_down_ok]) / -delta[m_down_ok]
                relax[m_down_ok] = (xb[m_down_ok] - lbB[m_down_ok] + tol.feas) / -delta[m_down_ok]
                tgt[m_down_ok] = lbB[m_down_ok]

                exact[m_up_ok] = (ubB[m_up_ok] - xb[m_up_ok]) / delta[m_up_ok]
                relax[m_up_ok] = (ubB[m_up_ok] - xb[m_up_ok] + tol.feas) / delta[m_up_ok]
                tgt[m_up_ok] = ubB[m_up_ok]

                # infeasible vars become feasible at the violated bound
                exact[m_down_hi] = (xb[m_down_hi] - ubB[m_down_hi]) / -delta[m_down_hi]
                relax[m_down_hi] = exact[m_down_hi]
                tgt[m_down_hi] = ubB[m_down_hi]
                exact[m_up_lo] = (lbB[m_up_lo] - xb[m_up_lo]) / delta[m_up_lo]
                relax[m_up_lo] = exact[m_up_lo]
                tgt[m_up_lo] = lbB[m_up_lo]

            flip = self.ub[q] - self.lb[q]
            t_max = relax.min() if self.m else np.inf
            if not np.isfinite(t_max) and not np.isfinite(flip):
                if phase1:
                    # cannot happen in exact arithmetic; refresh and retry
                    self._refactor()
                    self.iters += 1
                    continue
                return Status.UNBOUNDED

            self.iters += 1
            if flip <= t_max:
                self.x[self.head] = xb + delta * flip
                self.x[q] += direction * flip
                self.status[q] = AT_UB if direction > 0 else AT_LB
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                continue

            cand = np.flatnonzero(exact <= t_max)
            if bland:
                tmin = exact[cand].min()
                ties = cand[exact[cand] <= tmin + 1e-12]
                r = int(ties[np.argmin(self.head[ties])])
            else:
                r = int(cand[np.argmax(np.abs(delta[cand]))])
            t = max(exact[r], 0.0)
            self.x[self.head] = xb + delta * t
            self.x[q] += direction * t
            leave_status = AT_LB if tgt[r] == lbB[r] else AT_UB
            self._swap(r, q, leave_status, tgt[r], w)

    # dual simplex ------------------------------------------------------

    def _perturbed_cost(self) -> np.ndarray:
        """Costs nudged towards strict dual feasibility of the nonbasic columns.

        Breaks the ties that make the dual ratio test stall on degenerate
        problems; the closing primal pass restores the true costs.
        """
        rng = np.random.default_rng(self.N)
        eps = 1e-6 * (1.0 + np.abs(self.cost)) * rng.uniform(0.5, 1.0, self.N)
        st = self.status
        sign = np.where(st == AT_LB, 1.0, np.where(st == AT_UB, -1.0, 0.0))
        sign[self.lb == self.ub] = 0.0
        return self.cost + sign * eps

    def _dual(self) -> Optional[Status]:
        """Dual simplex from a dual feasible basis.

        Returns INFEASIBLE when a dual ray proves primal infeasibility, None
        once the basis is primal feasible (or the attempt is abandoned) so the
        primal pass can finish.
        """
        tol = self.tol
        cost = self._perturbed_cost()
        limit = self.iters + max(1000, 3 * self.m)
        d = None
        # dual Devex reference weights, one per basis row
        weights = np.ones(self.m)
        while True:
            if self.iters >= min(self.max_iter, limit):
                return None
            below, above = self._infeasibility()
            infeas = np.maximum(below, above)
            if infeas.max(initial=0.0) <= tol.feas:
                return None
            score = np.where(infeas > tol.feas, infeas * infeas / weights, 0.0)
            r = int(np.argmax(score))
            to_lb = below[r] > above[r]

            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self.factor.btran(e)
            alpha = self.AfT @ rho
            if d is None or not self.factor.etas:
                d = self._reduced_costs(cost[self.head], cost)

            st = self.status
            nonbasic = (st != BASIC) & (self.lb < self.ub)
            piv = max(tol.pivot, _REL_PIVOT * float(np.abs(alpha[nonbasic]).max(initial=0.0)))
            # orient so that every candidate needs sgn * alpha > 0 and keeps sgn * d >= 0
            a_dir = alpha if not to_lb else -alpha
            at_lb = (st == AT_LB) & nonbasic
            at_ub = (st == AT_UB) & nonbasic
            free = (st == FREE) & nonbasic
            cand = np.flatnonzero((at_lb & (a_dir > piv)) | (at_ub & (a_dir < -piv)) |
                                  (free & (np.abs(alpha) > piv)))
            if cand.size == 0:
                if self.factor.etas:
                    self._refactor()
                    self.iters += 1
                    continue
                return Status.INFEASIBLE
            sgn = np.where(st[cand] == AT_UB, -1.0, 1.0)
            dj = sgn * d[cand]
            dj = np.where(st[cand] == FREE, np.abs(d[cand]), dj)
            aj = np.abs(alpha[cand])
            # Harris: bound the step with relaxed reduced costs, then take the largest pivot
            t_max = ((np.maximum(dj, 0.0) + tol.opt) / aj).min()
            pick = np.flatnonzero(dj / aj <= t_max)
            k = pick[np.argmax(aj[pick])]
            q = int(cand[k])
            if dj[k] < 0.0:
                # slightly infeasible reduced cost: shift the cost so the step is zero
                cost[q] -= d[q]
                d[q] = 0.0

            w = self.factor.ftran(self._column(q))
            # row- and column-wise pivots disagree: the factors have drifted
            if abs(w[r] - alpha[q]) > 1e-6 * (1.0 + abs(alpha[q])):
                if self.factor.etas:
                    self._refactor()
                    d = None
                    self.iters += 1
                    continue
            xb = self.x[self.head]
            target = self.lb[self.head[r]] if to_lb else self.ub[self.head[r]]
            theta = (xb[r] - target) / w[r]
            self.x[self.head] = xb - theta * w
            self.x[q] += theta
            self.iters += 1
            d = d - (d[q] / alpha[q]) * alpha
            d[q] = 0.0
            ratio = w / w[r]
            wr = max(weights[r], 1.0)
            weights = np.maximum(weights, ratio * ratio * wr)
            weights[r] = max(wr / (w[r] * w[r]), 1.0)
            self._swap(r, q, AT_LB if to_lb else AT_UB, target, w)

    # wrap-up -----------------------------------------------------------

    def _solve_unconstrained(self) -> LpSolution:
        x = np.zeros(self.n)
        for j in range(self.n):
            cj = self.cost[j]
            lo, hi = self.lb[j], self.ub[j]
            if cj > 0:
                if not np.isfinite(lo):
                    return self._result(Status.UNBOUNDED)
                x[j] = lo
            elif cj < 0:
                if not np.isfinite(hi):
                    return self._result(Status.UNBOUNDED)
                x[j] = hi
            else:
                x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
        sign = -1.0 if self.model.sense == "max" else 1.0
        obj = sign * float(self.cost[:self.n] @ x)
        return LpSolution(Status.OPTIMAL, obj, x, 0)

    def _result(self, status: Status) -> LpSolution:
        n = self.n
        if status is not Status.OPTIMAL or self.m == 0:
            return LpSolution(status, float("nan"), np.full(n, np.nan), self.iters,
                              basis=self._basis() if hasattr(self, "head") and self.m else None)
        x = self.x[:n].copy()
        obj = float(self.model.c @ x)
        sign = -1.0 if self.model.sense == "max" else 1.0
        return LpSolution(status, obj, x, self.iters, basis=self._basis(),
                          duals=sign * self._y.copy() if hasattr(self, "_y") else None)

    def _basis(self) -> Basis:
        return Basis(self.head.copy(), self.status.copy())


def solve_lp(model: LpModel, tol: Tolerances = DEFAULT_TOL,
             basis: Optional[Basis] = None, max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``model``; ``basis`` warm-starts from an earlier solution of the same shape."""
    return BoundedSimplex(model, tol=tol, max_iter=max_iter).solve(basis=basis)
