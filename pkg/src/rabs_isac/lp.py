"""Bounded-variable linear program container and builder.

An :class:`LpModel` stores ``sense c^T x`` subject to ``A x (<=|>=|=) b`` and
``lb <= x <= ub``. Integrality marks are carried along for branch-and-bound
but ignored by the LP engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

LE, GE, EQ = "<=", ">=", "="
_RELATIONS = (LE, GE, EQ)

Coeffs = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


@dataclass(frozen=True)
class LpModel:
    sense: str
    c: np.ndarray
    A: sp.csr_matrix
    relations: Tuple[str, ...]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    names: Tuple[str, ...]
    integer: np.ndarray
    row_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        m, n = self.A.shape
        if len(self.c) != n or len(self.lb) != n or len(self.ub) != n:
            raise ValueError("column count mismatch between A, c and bounds")
        if len(self.rhs) != m or len(self.relations) != m:
            raise ValueError("row count mismatch between A, rhs and relations")
        bad = [r for r in self.relations if r not in _RELATIONS]
        if bad:
            raise ValueError(f"unknown relation {bad[0]!r}")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"variable {self.names[j]} has lb > ub")

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "LpModel":
        return replace(self, lb=np.asarray(lb, dtype=float).copy(),
                       ub=np.asarray(ub, dtype=float).copy())

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of any row or bound at ``x``."""
        x = np.asarray(x, dtype=float)
        act = self.A @ x
        viol = 0.0
        rel = np.array(self.relations)
        if len(act):
            le = rel == LE
            ge = rel == GE
            eq = rel == EQ
            parts = [np.maximum(act[le] - self.rhs[le], 0.0),
                     np.maximum(self.rhs[ge] - act[ge], 0.0),
                     np.abs(act[eq] - self.rhs[eq])]
            viol = max((float(p.max()) for p in parts if p.size), default=0.0)
        bound_viol = max(float(np.max(self.lb - x, initial=0.0)),
                         float(np.max(x - self.ub, initial=0.0)))
        return max(viol, bound_viol)

    def to_lp_text(self) -> str:
        """Render in CPLEX LP format for cross-checking with external solvers."""
        def term(coef: float, name: str) -> str:
            sign = "-" if coef < 0 else "+"
            return f"{sign} {abs(coef):.17g} {name}"

        lines = ["Maximize" if self.sense == "max" else "Minimize"]
        obj = [term(v, self.names[j]) for j, v in enumerate(self.c) if v != 0]
        lines.append(" obj: " + (" ".join(obj) if obj else "0 " + self.names[0]))
        lines.append("Subject To")
        A = self.A.tocsr()
        for i in range(self.num_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            body = " ".join(term(v, self.names[j])
                            for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
            rname = self.row_names[i] if self.row_names else f"r{i}"
            lines.append(f" {rname}: {body or '0 ' + self.names[0]} "
                         f"{self.relations[i]} {self.rhs[i]:.17g}")
        lines.append("Bounds")
        for j, name in enumerate(self.names):
            lo = "-inf" if np.isneginf(self.lb[j]) else f"{self.lb[j]:.17g}"
            hi = "+inf" if np.isposinf(self.ub[j]) else f"{self.ub[j]:.17g}"
            lines.append(f" {lo} <= {name} <= {hi}")
        ints = [self.names[j] for j in np.flatnonzero(self.integer)]
        if ints:
            lines.append("General")
            lines.append(" " + " ".join(ints))
        lines.append("End")
        return "\n".join(lines) + "\n"


class LpBuilder:
    """Incremental construction of an :class:`LpModel`."""

    def __init__(self, sense: str = "max"):
        self.sense = sense
        self._names: List[str] = []
        self._c: List[float] = []
        self._lb: List[float] = []
        self._ub: List[float] = []
        self._int: List[bool] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []
        self._rel: List[str] = []
        self._rhs: List[float] = []
        self._row_names: List[str] = []

    @property
    def num_vars(self) -> int:
        return len(self._names)

    @property
    def num_rows(self) -> int:
        return len(self._rhs)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf,
                obj: float = 0.0, integer: bool = False) -> int:
        self._names.append(name)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._c.append(float(obj))
        self._int.append(bool(integer))
        return len(self._names) - 1

    def add_row(self, coeffs: Coeffs, rel: str, rhs: float,
                name: Optional[str] = None) -> int:
        if rel not in _RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        i = len(self._rhs)
        for j, v in items:
            if v != 0:
                self._rows.append(i)
                self._cols.append(int(j))
                self._vals.append(float(v))
        self._rel.append(rel)
        self._rhs.append(float(rhs))
        self._row_names.append(name if name is not None else f"r{i}")
        return i

    def build(self) -> LpModel:
        n = len(self._names)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)),
                          shape=(len(self._rhs), n))
        A.sum_duplicates()
        return LpModel(
            sense=self.sense,
            c=np.array(self._c, dtype=float),
            A=A,
            relations=tuple(self._rel),
            rhs=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            names=tuple(self._names),
            integer=np.array(self._int, dtype=bool),
            row_names=tuple(self._row_names),
        )


def from_arrays(c: Sequence[float], A, relations: Sequence[str],
                rhs: Sequence[float], lb: Sequence[float], ub: Sequence[float],
                sense: str = "max", integer: Optional[Sequence[bool]] = None,
                names: Optional[Sequence[str]] = None) -> LpModel:
    """Build a model directly from dense or sparse arrays."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    if len(rhs) == 0:
        A = sp.csr_matrix((0, n))
    else:
        A = sp.csr_matrix(A if sp.issparse(A) else np.atleast_2d(A),
                          shape=(len(rhs), n))
    return LpModel(
        sense=sense, c=c, A=A, relations=tuple(relations),
        rhs=np.asarray(rhs, dtype=float),
        lb=np.asarray(lb, dtype=float), ub=np.asarray(ub, dtype=float),
        names=tuple(names) if names is not None else tuple(f"x{j}" for j in range(n)),
        integer=np.zeros(n, bool) if integer is None else np.asarray(integer, bool),
        row_names=tuple(f"r{i}" for i in range(len(rhs))),
    )
