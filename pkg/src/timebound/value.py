"""Interval value analysis over the interprocedural CFG.

The store tracks the 16 registers and the memory cells written through
singleton addresses.  A cell missing from the store is unknown (top).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Mapping

from .cfg import Edge, Program
from .errors import InternalError
from .interval import BOTTOM, TOP, Interval, apply
from .isa import ALU_KINDS, SP, Instruction
from .machine import MachineConfig

MAX_VISITS = 1000
WIDEN_AFTER = 2


class AbstractStore:
    __slots__ = ("regs", "cells", "is_bottom")

    def __init__(self, regs: tuple, cells: Mapping[int, Interval] | None = None,
                 is_bottom: bool = False):
        self.regs = regs
        self.cells = dict(cells or {})
        self.is_bottom = is_bottom

    @classmethod
    def top(cls, stack_init: int | None = None) -> "AbstractStore":
        regs = [TOP] * 16
        if stack_init is not None:
            regs[SP] = Interval.const(stack_init)
        return cls(tuple(regs))

    @classmethod
    def bottom(cls) -> "AbstractStore":
        return BOTTOM_STORE

    def reg(self, r: int) -> Interval:
        return BOTTOM if self.is_bottom else self.regs[r]

    def cell(self, addr: int) -> Interval:
        return self.cells.get(addr, TOP)

    def with_reg(self, r: int, value: Interval) -> "AbstractStore":
        if self.is_bottom or value.is_bottom:
            return BOTTOM_STORE
        regs = list(self.regs)
        regs[r] = value
        return AbstractStore(tuple(regs), self.cells)

    def with_cell(self, addr: int, value: Interval) -> "AbstractStore":
        cells = dict(self.cells)
        if value.is_top:
            cells.pop(addr, None)
        else:
            cells[addr] = value
        return AbstractStore(self.regs, cells)

    def forget_cells(self, lo: int, hi: int) -> "AbstractStore":
        cells = {a: v for a, v in self.cells.items() if not lo <= a <= hi}
        return AbstractStore(self.regs, cells)

    def join(self, other: "AbstractStore") -> "AbstractStore":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        regs = tuple(a.join(b) for a, b in zip(self.regs, other.regs))
        cells = {a: v.join(other.cells[a]) for a, v in self.cells.items() if a in other.cells}
        return AbstractStore(regs, cells)

    def widen(self, new: "AbstractStore") -> "AbstractStore":
        if self.is_bottom:
            return new
        if new.is_bottom:
            return self
        regs = tuple(a.widen(b) for a, b in zip(self.regs, new.regs))
        cells = {a: v.widen(new.cells[a]) for a, v in self.cells.items() if a in new.cells}
        return AbstractStore(regs, cells)

    def leq(self, other: "AbstractStore") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        if not all(a.leq(b) for a, b in zip(self.regs, other.regs)):
            return False
        return all(a in self.cells and self.cells[a].leq(v) for a, v in other.cells.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, AbstractStore):
            return NotImplemented
        if self.is_bottom or other.is_bottom:
            return self.is_bottom == other.is_bottom
        return self.regs == other.regs and self.cells == other.cells

    def __repr__(self) -> str:
        if self.is_bottom:
            return "AbstractStore(⊥)"
        regs = ", ".join(f"r{i}={v}" for i, v in enumerate(self.regs) if not v.is_top)
        cells = ", ".join(f"0x{a:x}={v}" for a, v in sorted(self.cells.items()))
        return f"AbstractStore({regs}; {cells})"


BOTTOM_STORE = AbstractStore((BOTTOM,) * 16, is_bottom=True)


@dataclass(frozen=True)
class AccessRange:
    addr: int
    interval: Interval
    kind: str = "D"
    width: int = 4


def _access_interval(base: Interval, offset: int, mcfg: MachineConfig) -> Interval:
    """Word addresses that can be accessed without trapping."""
    if base.is_bottom:
        return BOTTOM
    lo = max(base.lo + offset, 0)
    hi = min(base.hi + offset, mcfg.mem_size - 4)
    lo = (lo + 3) // 4 * 4
    hi = hi // 4 * 4
    return Interval(lo, hi) if lo <= hi else BOTTOM


def transfer(instr: Instruction, s: AbstractStore, mcfg: MachineConfig,
             warnings: set | None = None) -> tuple[AbstractStore, AccessRange | None]:
    """Abstract effect of one instruction; branches leave the store as is."""
    if s.is_bottom:
        return s, None
    k = instr.kind
    access = None
    if k == "MOVI":
        s = s.with_reg(instr.rd, Interval.const(instr.imm))
    elif k in ALU_KINDS:
        s = s.with_reg(instr.rd, apply(k, s.reg(instr.rs1), s.reg(instr.rs2)))
    elif k == "ADDI":
        s = s.with_reg(instr.rd, apply("ADD", s.reg(instr.rs1), Interval.const(instr.imm)))
    elif k in ("LD", "ST"):
        iv = _access_interval(s.reg(instr.rs1), instr.imm, mcfg)
        if iv.is_bottom:
            return AbstractStore.bottom(), None
        access = AccessRange(instr.addr, iv)
        if k == "LD":
            value = s.cell(iv.lo) if iv.is_singleton else TOP
            s = s.with_reg(instr.rd, value)
        elif iv.is_singleton:
            s = s.with_cell(iv.lo, s.reg(instr.rd))
        else:
            s = s.forget_cells(iv.lo, iv.hi)
    elif k == "CALL":
        iv = _access_interval(apply("SUB", s.reg(SP), Interval.const(4)), 0, mcfg)
        if iv.is_bottom:
            return AbstractStore.bottom(), None
        access = AccessRange(instr.addr, iv)
        if iv.is_singleton:
            s = s.with_cell(iv.lo, Interval.const(instr.addr + 4))
        else:
            s = s.forget_cells(iv.lo, iv.hi)
        s = s.with_reg(SP, iv)
    elif k == "RET":
        iv = _access_interval(s.reg(SP), 0, mcfg)
        if iv.is_bottom:
            return AbstractStore.bottom(), None
        access = AccessRange(instr.addr, iv)
        s = s.with_reg(SP, apply("ADD", iv, Interval.const(4)))
    if warnings is not None and not s.is_bottom:
        sp = s.reg(SP)
        if sp.lo < 0 or sp.hi > mcfg.mem_size:
            warnings.add(f"stack pointer {sp} partially outside memory at 0x{instr.addr:x}")
    return s, access


def _holds(rel: str, a: Interval, b: Interval) -> tuple[Interval, Interval]:
    """Narrow (a, b) assuming ``a rel b``."""
    if rel == "LT":
        return a.meet(Interval(a.lo, b.hi - 1)), b.meet(Interval(a.lo + 1, b.hi))
    if rel == "GE":
        return a.meet(Interval(b.lo, a.hi)), b.meet(Interval(b.lo, a.hi))
    if rel == "EQ":
        m = a.meet(b)
        return m, m
    # NE: only singleton endpoints can be removed
    if a.is_singleton and b.is_singleton and a.lo == b.lo:
        return BOTTOM, BOTTOM
    if b.is_singleton:
        a = _shave(a, b.lo)
    if a.is_singleton:
        b = _shave(b, a.lo)
    return a, b


def _shave(iv: Interval, v: int) -> Interval:
    if iv.lo == v:
        return Interval(iv.lo + 1, iv.hi)
    if iv.hi == v:
        return Interval(iv.lo, iv.hi - 1)
    return iv


_BRANCH_REL = {"BEQ": ("EQ", "NE"), "BNE": ("NE", "EQ"), "BLT": ("LT", "GE"), "BGE": ("GE", "LT")}


def refine_branch(instr: Instruction, s: AbstractStore) -> tuple[AbstractStore, AbstractStore]:
    """(store on the taken edge, store on the not-taken edge)."""
    out = []
    for rel in _BRANCH_REL[instr.kind]:
        if s.is_bottom:
            out.append(s)
            continue
        if instr.rs1 == instr.rs2:
            out.append(s if rel in ("EQ", "GE") else AbstractStore.bottom())
            continue
        a, b = _holds(rel, s.reg(instr.rs1), s.reg(instr.rs2))
        out.append(s.with_reg(instr.rs1, a).with_reg(instr.rs2, b))
    return out[0], out[1]


def join(a: AbstractStore, b: AbstractStore) -> AbstractStore:
    return a.join(b)


def widen(old: AbstractStore, new: AbstractStore) -> AbstractStore:
    return old.widen(new)


@dataclass
class ValueResults:
    program: Program
    mcfg: MachineConfig
    block_in: dict
    edge_store: dict
    function_entry: dict
    infeasible: frozenset
    before: dict = field(default_factory=dict)
    access: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    iterations: int = 0

    def state_before(self, addr: int) -> AbstractStore:
        return self.before.get(addr, BOTTOM_STORE)

    def edge(self, e: Edge) -> AbstractStore:
        return self.edge_store.get(e, BOTTOM_STORE)

    def reachable(self, block: int) -> bool:
        return not self.block_in.get(block, BOTTOM_STORE).is_bottom


def _flow_edges(program: Program):
    """Value-flow successors: intraprocedural edges except callret, plus
    interprocedural call and return edges."""
    out: dict[int, list[Edge]] = {b: [] for b in program.blocks}
    for e in program.intra_edges:
        if e.kind != "callret":
            out[e.src].append(e)
    for e in program.call_edges + program.return_edges:
        out[e.src].append(e)
    inn: dict[int, list[Edge]] = {b: [] for b in program.blocks}
    for es in out.values():
        for e in es:
            inn[e.dst].append(e)
    return out, inn


def flow_order(program: Program, out: Mapping[int, list[Edge]]):
    """Reverse postorder over the supergraph and the targets of retreating
    edges (every cycle passes through one of them or a function entry)."""
    seen, post, retreat = {program.entry}, [], set()
    on_stack = {program.entry}
    stack = [(program.entry, iter(out[program.entry]))]
    while stack:
        node, it = stack[-1]
        for e in it:
            if e.dst not in seen:
                seen.add(e.dst)
                on_stack.add(e.dst)
                stack.append((e.dst, iter(out[e.dst])))
                break
            if e.dst in on_stack:
                retreat.add(e.dst)
        else:
            post.append(node)
            on_stack.discard(node)
            stack.pop()
    order = post[::-1] + sorted(b for b in program.blocks if b not in seen)
    return order, retreat


def _block_out(program: Program, block, s: AbstractStore, out_edges, mcfg, warnings) -> dict:
    for instr in block.instructions[:-1]:
        s, _ = transfer(instr, s, mcfg, warnings)
    last = block.last
    if last.is_branch:
        taken, not_taken = refine_branch(last, s)
        return {e: (taken if e.kind == "taken" else not_taken) for e in out_edges}
    s, _ = transfer(last, s, mcfg, warnings)
    return {e: s for e in out_edges}


def analyze(program: Program, mcfg: MachineConfig | None = None,
            inputs: Mapping[int, tuple[int, int]] | None = None) -> ValueResults:
    """Worklist fixpoint with threshold widening and one narrowing pass."""
    mcfg = mcfg or MachineConfig()
    init = AbstractStore.top(mcfg.stack_init)
    for r, (lo, hi) in (inputs or {}).items():
        init = init.with_reg(r, Interval(lo, hi))

    out, inn = _flow_edges(program)
    order, retreat = flow_order(program, out)
    prio = {b: i for i, b in enumerate(order)}
    widen_at = retreat | set(program.functions)
    block_in = {b: BOTTOM_STORE for b in program.blocks}
    edge_store: dict[Edge, AbstractStore] = {}
    visits = {b: 0 for b in program.blocks}
    warnings: set[str] = set()

    def incoming(b: int) -> AbstractStore:
        s = init if b == program.entry else BOTTOM_STORE
        for e in inn[b]:
            s = s.join(edge_store.get(e, BOTTOM_STORE))
        return s

    def propagate(b: int, s: AbstractStore) -> list[int]:
        changed = []
        for e, st in _block_out(program, program.blocks[b], s, out[b], mcfg, warnings).items():
            if edge_store.get(e) != st:
                edge_store[e] = st
                changed.append(e.dst)
        return changed

    heap = [(prio[program.entry], program.entry)]
    queued = {program.entry}
    total = 0
    while heap:
        _, b = heapq.heappop(heap)
        queued.discard(b)
        new = incoming(b)
        if b in widen_at and visits[b] >= WIDEN_AFTER:
            new = block_in[b].widen(new)
        if visits[b] and new == block_in[b]:
            continue
        block_in[b] = new
        visits[b] += 1
        total += 1
        if visits[b] > MAX_VISITS:
            raise InternalError(f"value analysis did not converge at block 0x{b:x}")
        for d in propagate(b, new):
            if d not in queued:
                queued.add(d)
                heapq.heappush(heap, (prio[d], d))

    # one descending pass
    for b in order:
        block_in[b] = incoming(b)
        propagate(b, block_in[b])

    # callret edges carry whatever returns to the site
    for f in program.functions.values():
        for e in f.edges:
            if e.kind == "callret":
                s = BOTTOM_STORE
                for r in inn[e.dst]:
                    if r.kind == "return":
                        s = s.join(edge_store.get(r, BOTTOM_STORE))
                edge_store[e] = s

    function_entry = {}
    for f in program.functions:
        s = init if f == program.entry else BOTTOM_STORE
        for e in inn[f]:
            if e.kind == "call":
                s = s.join(edge_store.get(e, BOTTOM_STORE))
        function_entry[f] = s

    infeasible = frozenset(e for e in program.intra_edges
                           if edge_store.get(e, BOTTOM_STORE).is_bottom)
    vr = ValueResults(program, mcfg, block_in, edge_store, function_entry, infeasible,
                      iterations=total)
    final_warnings: set[str] = set()
    for b, blk in program.blocks.items():
        s = block_in[b]
        for instr in blk.instructions:
            vr.before[instr.addr] = s
            s, acc = transfer(instr, s, mcfg, final_warnings)
            if acc is not None:
                vr.access[instr.addr] = acc
    vr.warnings = sorted(final_warnings)
    return vr
