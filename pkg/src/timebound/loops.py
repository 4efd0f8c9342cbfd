"""Loop bounds for simple counted loops.

A bound counts executions of the loop header per entry into the loop.  A
loop is *simple* when its header ends in a conditional branch with one edge
leaving the loop, one operand ``r`` of that branch is written inside the
loop by exactly one ``ADDI r, r, c`` (c != 0) that runs once per iteration,
and nothing the loop calls writes ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .cfg import Function, Loop, Program, dominates
from .errors import AnalysisError
from .interval import INT_MAX, INT_MIN, Interval
from .isa import SP


@dataclass(frozen=True)
class LoopBound:
    header: int
    bound: int
    source: str  # "derived" | "annotated"


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _callee_writes(program: Program, f: Function, blocks) -> set[int]:
    """Registers possibly written by functions called from ``blocks``."""
    regs: set[int] = set()
    seen: set[int] = set()
    work = [f.blocks[b].last.target for b in blocks if f.blocks[b].last.kind == "CALL"]
    while work:
        g = work.pop()
        if g in seen:
            continue
        seen.add(g)
        for blk in program.functions[g].blocks.values():
            for i in blk.instructions:
                regs |= i.writes()
            if blk.last.kind == "CALL":
                work.append(blk.last.target)
    return regs


# (branch kind, stays-in-loop-when-taken) -> relation rs1 ? rs2 that keeps looping
_STAY = {
    ("BLT", True): "LT", ("BLT", False): "GE",
    ("BGE", True): "GE", ("BGE", False): "LT",
    ("BEQ", True): "EQ", ("BEQ", False): "NE",
    ("BNE", True): "NE", ("BNE", False): "EQ",
}


def _count(rel: str, step: int, init: Interval, limit: Interval, inc_first: int) -> int | None:
    """Header executions per entry while ``r rel limit`` holds, r advancing by
    ``step`` once per iteration (before the test when ``inc_first``)."""
    if rel == "LT" and step > 0:
        if limit.hi - 1 + step > INT_MAX:
            return None
        return max(1, _ceil_div(limit.hi - init.lo, step) + 1 - inc_first)
    if rel == "GE" and step < 0:
        if limit.lo + step < INT_MIN:
            return None
        return max(1, _ceil_div(init.hi - limit.lo + 1, -step) + 1 - inc_first)
    if rel == "NE":
        if not (init.is_singleton and limit.is_singleton):
            return None
        dist = limit.lo - init.lo
        if dist % step or dist // step < inc_first:
            return None
        return dist // step + 1 - inc_first
    return None


def derive_loop_bound(loop: Loop, f: Function, vr, program: Program | None = None) -> int | None:
    """Bound on header executions per loop entry, or None if not simple."""
    program = program or vr.program
    header = f.blocks[loop.header]
    br = header.last
    if not br.is_branch or br.rs1 == br.rs2:
        return None
    outs = f.out_edges(loop.header)
    taken_in = [e.dst in loop.body for e in outs if e.kind == "taken"]
    nt_in = [e.dst in loop.body for e in outs if e.kind == "not-taken"]
    if len(taken_in) != 1 or len(nt_in) != 1 or taken_in[0] == nt_in[0]:
        return None
    rel = _STAY[(br.kind, taken_in[0])]

    pre = vr.state_before(br.addr)
    if pre.is_bottom:
        return 0
    entry = None
    for e in loop.entry_edges:
        s = vr.edge(e)
        entry = s if entry is None else entry.join(s)
    if loop.header == f.entry:
        s = vr.function_entry[f.entry]
        entry = s if entry is None else entry.join(s)
    if entry is None or entry.is_bottom:
        return 0

    inner = [lp for lp in f.loops if lp.header != loop.header and lp.body < loop.body]
    called = _callee_writes(program, f, loop.body)
    best = None
    for r, n, swapped in ((br.rs1, br.rs2, False), (br.rs2, br.rs1, True)):
        if r == SP or r in called:
            continue
        writers = [(b, i) for b in loop.body for i in f.blocks[b].instructions if r in i.writes()]
        if len(writers) != 1:
            continue
        b, inc = writers[0]
        if inc.kind != "ADDI" or inc.rs1 != r or inc.imm == 0:
            continue
        if any(b in lp.body for lp in inner):
            continue
        if not all(dominates(f.idom, b, e.src) for e in loop.back_edges):
            continue
        limit = pre.reg(n)
        r_rel = rel
        if swapped:
            # n rel r  ->  r rel' n (+1)
            if rel == "LT":
                r_rel, limit = "GE", limit.add_const(1)
            elif rel == "GE":
                r_rel, limit = "LT", limit.add_const(1)
        if limit.is_top or limit.is_bottom:
            continue
        bound = _count(r_rel, inc.imm, entry.reg(r), limit, int(b == loop.header))
        if bound is not None and (best is None or bound < best):
            best = bound
    return best


def resolve_bounds(loops: Mapping[int, Loop], derived: Mapping[int, int | None],
                   annotations: Mapping[int, int] | None = None,
                   warnings: list | None = None) -> dict[int, LoopBound]:
    """Merge derived and annotated bounds; every loop must end up bounded.

    Annotated bounds always win.  Each trusted annotation is reported, and
    one that exceeds the derived bound is flagged.
    """
    annotations = annotations or {}
    out = {}
    for h in sorted(loops):
        d = derived.get(h)
        if h in annotations:
            a = annotations[h]
            if warnings is not None:
                warnings.append(f"trusted loop bound annotation at 0x{h:x}: {a}")
                if d is not None and a > d:
                    warnings.append(f"annotated bound {a} at 0x{h:x} exceeds derived bound {d}")
            out[h] = LoopBound(h, a, "annotated")
        elif d is not None:
            out[h] = LoopBound(h, d, "derived")
        else:
            raise AnalysisError(f"unbounded loop at 0x{h:x}")
    return out


def loop_bounds(program: Program, vr, annotations: Mapping[int, int] | None = None,
                skip_functions=(), warnings: list | None = None) -> dict[int, LoopBound]:
    loops, derived = {}, {}
    for f in program.functions.values():
        if f.entry in skip_functions:
            continue
        for lp in f.loops:
            loops[lp.header] = lp
            derived[lp.header] = derive_loop_bound(lp, f, vr, program)
    bounds = resolve_bounds(loops, derived, annotations, warnings)
    for h, lb in bounds.items():
        loops[h].bound = lb.bound
    return bounds
