"""Implicit path enumeration: one ILP per function, composed bottom-up."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .cfg import Edge, Function, Program
from .errors import AnalysisError, InternalError
from .ilp import IlpModel, IlpSolution, solve_ilp
from .timing import BlockTime


def block_var(b: int) -> str:
    return f"x_{b:x}"


def edge_var(e: Edge) -> str:
    return f"f_{e.src:x}_{e.dst:x}_{e.kind}"


def exit_var(b: int) -> str:
    return f"exit_{b:x}"


def build_ilp(f: Function, times: Mapping[int, BlockTime], bounds: Mapping[int, int],
              infeasible=frozenset(), callee_wcet: Mapping[int, int] | None = None,
              may_halt=frozenset()) -> IlpModel:
    """Flow conservation, loop bounds and infeasible edges for ``f``.

    ``bounds`` maps loop headers to header executions per loop entry.
    ``may_halt`` lists callees that can stop the program, whose call
    blocks therefore get a virtual exit.
    """
    callee_wcet = callee_wcet or {}
    m = IlpModel()
    for b in f.blocks:
        m.add_var(block_var(b))
    for e in f.edges:
        m.add_var(edge_var(e))
    exits = []
    for b, blk in f.blocks.items():
        if blk.terminator in ("return", "halt") or (
                blk.terminator == "call" and blk.last.target in may_halt):
            exits.append(b)
            m.add_var(exit_var(b))

    for b, blk in f.blocks.items():
        t = times[b]
        cost = t.base_cycles
        if blk.terminator == "call":
            callee = blk.last.target
            if callee not in callee_wcet:
                raise InternalError(f"callee 0x{callee:x} has no WCET yet")
            cost += callee_wcet[callee]
        m.set_objective(block_var(b), cost)
        for e in f.out_edges(b):
            if e.kind == "taken" and blk.last.is_branch and t.taken_extra:
                m.set_objective(edge_var(e), t.taken_extra)

        inflow = {edge_var(e): 1 for e in f.in_edges(b)}
        inflow[block_var(b)] = -1
        m.add_constraint(f"in_{b:x}", inflow, "=", -1 if b == f.entry else 0)
        outflow = {edge_var(e): 1 for e in f.out_edges(b)}
        if b in exits:
            outflow[exit_var(b)] = 1
        outflow[block_var(b)] = -1
        m.add_constraint(f"out_{b:x}", outflow, "=", 0)

    for lp in f.loops:
        if lp.header not in bounds:
            raise InternalError(f"loop at 0x{lp.header:x} has no bound")
        k = bounds[lp.header]
        coeffs = {block_var(lp.header): 1}
        for e in lp.entry_edges:
            coeffs[edge_var(e)] = coeffs.get(edge_var(e), 0) - k
        m.add_constraint(f"loop_{lp.header:x}", coeffs, "<=", k if lp.header == f.entry else 0)

    for e in sorted(f.edges):
        if e in infeasible:
            m.add_constraint(f"infeasible_{e.src:x}_{e.dst:x}_{e.kind}", {edge_var(e): 1}, "=", 0)
    return m


@dataclass
class WcetResult:
    global_wcet: int
    function_wcet: dict[int, int]
    block_counts: dict[int, int] = field(default_factory=dict)
    edge_counts: dict[Edge, int] = field(default_factory=dict)
    status: dict[int, str] = field(default_factory=dict)
    lp_bounds: dict[int, Fraction] = field(default_factory=dict)
    models: dict[int, IlpModel] = field(default_factory=dict)


def _may_halt(program: Program, order: list[int]) -> set[int]:
    halting: set[int] = set()
    for fa in order:
        f = program.functions[fa]
        for blk in f.blocks.values():
            if blk.terminator == "halt" or (blk.terminator == "call" and blk.last.target in halting):
                halting.add(fa)
    return halting


def check_assignment(f: Function, model: IlpModel, sol: IlpSolution, bounds) -> None:
    """Re-verify flow conservation and loop bounds on a solved assignment."""
    x = sol.assignment
    for v, val in x.items():
        if val < 0 or val.denominator != 1:
            raise InternalError(f"non-integral or negative count {v}={val}")
    for b in f.blocks:
        inflow = sum(x[edge_var(e)] for e in f.in_edges(b)) + (1 if b == f.entry else 0)
        outflow = sum(x[edge_var(e)] for e in f.out_edges(b)) + x.get(exit_var(b), 0)
        if not inflow == x[block_var(b)] == outflow:
            raise InternalError(f"flow not conserved at 0x{b:x}")
    for lp in f.loops:
        entries = sum(x[edge_var(e)] for e in lp.entry_edges) + (1 if lp.header == f.entry else 0)
        if x[block_var(lp.header)] > bounds[lp.header] * entries:
            raise InternalError(f"loop bound violated at 0x{lp.header:x}")


def program_wcet(program: Program, times: Mapping[int, BlockTime], bounds: Mapping[int, int],
                 infeasible=frozenset(), callee_bounds: Mapping[int, int] | None = None) -> WcetResult:
    """Solve functions callees-first; the entry function's optimum is the
    global WCET."""
    callee_bounds = callee_bounds or {}
    order = program.callgraph.bottom_up()
    halting = _may_halt(program, order)
    res = WcetResult(0, {})
    for fa in order:
        if fa in callee_bounds:
            res.function_wcet[fa] = callee_bounds[fa]
            res.status[fa] = "annotated"
            continue
        f = program.functions[fa]
        model = build_ilp(f, times, bounds, infeasible, res.function_wcet, halting)
        try:
            sol = solve_ilp(model)
        except AnalysisError as exc:
            raise AnalysisError(f"{exc} in function 0x{fa:x}") from None
        check_assignment(f, model, sol, bounds)
        if sol.optimum.denominator != 1:
            raise InternalError(f"fractional optimum in function 0x{fa:x}")
        res.function_wcet[fa] = int(sol.optimum)
        res.status[fa] = "optimal"
        res.lp_bounds[fa] = sol.lp_bound
        res.models[fa] = model
        for b in f.blocks:
            res.block_counts[b] = int(sol.assignment[block_var(b)])
        for e in f.edges:
            res.edge_counts[e] = int(sol.assignment[edge_var(e)])
    res.global_wcet = res.function_wcet[program.entry]
    return res
