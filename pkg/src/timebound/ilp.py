"""Small exact integer linear programming solver.

Dense two-phase simplex over :class:`fractions.Fraction` with Bland's rule
(IPET models are highly degenerate), wrapped in best-bound branch and bound.
All variables are non-negative.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import AnalysisError, InternalError

NODE_LIMIT = 10**5


@dataclass
class Constraint:
    name: str
    coeffs: dict[str, Fraction]
    op: str  # "<=", ">=", "="
    rhs: Fraction


@dataclass
class IlpModel:
    variables: list[str] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    integer: set[str] = field(default_factory=set)

    def add_var(self, name: str, integer: bool = True) -> str:
        if name in self.variables:
            raise InternalError(f"duplicate ILP variable {name}")
        self.variables.append(name)
        if integer:
            self.integer.add(name)
        return name

    def add_constraint(self, name: str, coeffs: dict, op: str, rhs) -> None:
        if op not in ("<=", ">=", "="):
            raise InternalError(f"bad constraint operator {op}")
        coeffs = {v: Fraction(c) for v, c in coeffs.items() if c != 0}
        self.constraints.append(Constraint(name, coeffs, op, Fraction(rhs)))

    def set_objective(self, var: str, coeff) -> None:
        self.objective[var] = self.objective.get(var, Fraction(0)) + Fraction(coeff)

    def dump(self) -> str:
        """One constraint per line: ``<name>: c·v + ... <op> rhs``."""
        def fmt(coeffs):
            terms = [f"{c}·{v}" for v, c in coeffs.items()]
            return " + ".join(terms) if terms else "0"
        lines = [f"max: {fmt(self.objective)}"]
        lines += [f"{c.name}: {fmt(c.coeffs)} {c.op} {c.rhs}" for c in self.constraints]
        return "\n".join(lines) + "\n"


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    x: list[Fraction] | None = None


def _pivot(T: list[list[Fraction]], obj: list[Fraction], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        row[:] = [v / p for v in row]
    for i, other in enumerate(T):
        if i != r and other[c] != 0:
            f = other[c]
            other[:] = [a - f * b for a, b in zip(other, row)]
    if obj[c] != 0:
        f = obj[c]
        obj[:] = [a - f * b for a, b in zip(obj, row)]
    basis[r] = c


def _run(T, obj, basis, allowed: int) -> str:
    """Maximise; obj holds reduced costs with obj[-1] = -value."""
    while True:
        enter = next((j for j in range(allowed) if obj[j] > 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(T, obj, basis, best[1], enter)


def solve_lp(c: list[Fraction], rows: list[tuple[list[Fraction], str, Fraction]]) -> LpResult:
    """maximise c·x subject to rows, x >= 0 (exact)."""
    n = len(c)
    norm = []
    for coeffs, op, rhs in rows:
        if rhs < 0:
            coeffs, rhs = [-a for a in coeffs], -rhs
            op = {"<=": ">=", ">=": "<=", "=": "="}[op]
        norm.append((coeffs, op, rhs))
    n_slack = sum(op != "=" for _, op, _ in norm)
    n_art = sum(op != "<=" for _, op, _ in norm)
    width = n + n_slack + n_art
    T, basis = [], []
    s_col, a_col = n, n + n_slack
    art_cols = []
    for coeffs, op, rhs in norm:
        row = list(coeffs) + [Fraction(0)] * (width - n) + [rhs]
        if op == "<=":
            row[s_col] = Fraction(1)
            basis.append(s_col)
            s_col += 1
        else:
            if op == ">=":
                row[s_col] = Fraction(-1)
                s_col += 1
            row[a_col] = Fraction(1)
            basis.append(a_col)
            art_cols.append(a_col)
            a_col += 1
        T.append(row)

    if art_cols:
        obj = [Fraction(0)] * (width + 1)
        for j in art_cols:
            obj[j] = Fraction(-1)
        for i, bcol in enumerate(basis):
            if bcol in art_cols:
                obj = [a + b for a, b in zip(obj, T[i])]
        _run(T, obj, basis, width)
        if obj[-1] != 0:
            return LpResult("infeasible")
        # drive remaining artificials out of the basis
        first_art = n + n_slack
        for i in reversed(range(len(T))):
            if basis[i] >= first_art:
                col = next((j for j in range(first_art) if T[i][j] != 0), None)
                if col is None:
                    del T[i], basis[i]
                else:
                    _pivot(T, [Fraction(0)] * (width + 1), basis, i, col)
        allowed = first_art
    else:
        allowed = width

    obj = [Fraction(v) for v in c] + [Fraction(0)] * (width - n + 1)
    for i, bcol in enumerate(basis):
        if obj[bcol] != 0:
            f = obj[bcol]
            obj = [a - f * b for a, b in zip(obj, T[i])]
    if _run(T, obj, basis, allowed) == "unbounded":
        return LpResult("unbounded")
    x = [Fraction(0)] * n
    for i, bcol in enumerate(basis):
        if bcol < n:
            x[bcol] = T[i][-1]
    return LpResult("optimal", -obj[-1], x)


@dataclass
class IlpSolution:
    optimum: Fraction
    assignment: dict[str, Fraction]
    lp_bound: Fraction
    nodes: int


def _rows(model: IlpModel, index: dict[str, int], extra) -> list:
    n = len(model.variables)
    rows = []
    for con in model.constraints:
        coeffs = [Fraction(0)] * n
        for v, a in con.coeffs.items():
            coeffs[index[v]] = a
        rows.append((coeffs, con.op, con.rhs))
    for j, op, rhs in extra:
        coeffs = [Fraction(0)] * n
        coeffs[j] = Fraction(1)
        rows.append((coeffs, op, Fraction(rhs)))
    return rows


def solve_ilp(model: IlpModel, node_limit: int = NODE_LIMIT) -> IlpSolution:
    """Maximise the model objective over integer-constrained variables.

    Branches on the most fractional integer variable (lowest index on ties)
    and explores nodes best-bound first, so the result is deterministic.
    """
    index = {v: i for i, v in enumerate(model.variables)}
    c = [model.objective.get(v, Fraction(0)) for v in model.variables]
    int_idx = [index[v] for v in model.variables if v in model.integer]

    root = solve_lp(c, _rows(model, index, ()))
    if root.status == "infeasible":
        raise AnalysisError("conflicting constraints (no feasible path)")
    if root.status == "unbounded":
        raise InternalError("unbounded path problem (missing loop bound?)")

    tick = itertools.count()
    heap = [(-root.value, next(tick), (), root)]
    best: LpResult | None = None
    nodes = 0
    while heap:
        neg, _, extra, res = heapq.heappop(heap)
        if best is not None and -neg <= best.value:
            break
        nodes += 1
        if nodes > node_limit:
            raise AnalysisError(f"ILP node limit {node_limit} exceeded")
        frac = None
        for j in int_idx:
            f = res.x[j] - math.floor(res.x[j])
            if f:
                dist = abs(f - Fraction(1, 2))
                if frac is None or dist < frac[0]:
                    frac = (dist, j)
        if frac is None:
            if best is None or res.value > best.value:
                best = res
            continue
        j = frac[1]
        for op, rhs in (("<=", math.floor(res.x[j])), (">=", math.ceil(res.x[j]))):
            child_extra = extra + ((j, op, rhs),)
            child = solve_lp(c, _rows(model, index, child_extra))
            if child.status == "optimal" and (best is None or child.value > best.value):
                heapq.heappush(heap, (-child.value, next(tick), child_extra, child))
    if best is None:
        raise AnalysisError("conflicting constraints (no integral path)")
    assignment = {v: best.x[i] for v, i in index.items()}
    return IlpSolution(best.value, assignment, root.value, nodes)
