"""Control-flow reconstruction from a program image.

Functions are the closure of CALL targets plus the entry point.  Each
function gets its own block graph; CALL blocks are linked to their return
site by an intraprocedural ``callret`` edge, while the interprocedural
``call`` and ``return`` edges live on :class:`Program`.  Return edges are
context-insensitive: every RET of a function returns to every call site.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import AnalysisError
from .isa import Instruction, ProgramImage

MAX_JR_TARGETS = 64
MAX_REFINE_ROUNDS = 8


@dataclass
class BasicBlock:
    start: int
    instructions: tuple[Instruction, ...]
    function: int = -1

    @property
    def id(self) -> int:
        return self.start

    @property
    def end(self) -> int:
        """Address of the last instruction."""
        return self.instructions[-1].addr

    @property
    def last(self) -> Instruction:
        return self.instructions[-1]

    @property
    def terminator(self) -> str:
        k = self.last.kind
        if self.last.is_branch:
            return "branch"
        return {"JMP": "jump", "CALL": "call", "RET": "return", "HALT": "halt",
                "JR": "indirect"}.get(k, "fallthrough")

    def __repr__(self) -> str:
        return f"BasicBlock(0x{self.start:x}-0x{self.end:x}, {self.terminator})"


@dataclass(frozen=True, order=True)
class Edge:
    src: int
    dst: int
    kind: str  # taken | not-taken | fallthrough | callret | call | return

    def __str__(self) -> str:
        return f"0x{self.src:x} -> 0x{self.dst:x} {self.kind}"


@dataclass
class Loop:
    header: int
    back_edges: tuple[Edge, ...]
    body: frozenset[int]
    entry_edges: tuple[Edge, ...] = ()
    bound: int | None = None


@dataclass
class Function:
    entry: int
    blocks: dict[int, BasicBlock]
    edges: list[Edge]
    idom: dict[int, int] = field(default_factory=dict)
    loops: list[Loop] = field(default_factory=list)

    def __post_init__(self):
        self._out: dict[int, list[Edge]] = {b: [] for b in self.blocks}
        self._in: dict[int, list[Edge]] = {b: [] for b in self.blocks}
        for e in self.edges:
            self._out[e.src].append(e)
            self._in[e.dst].append(e)

    def out_edges(self, b: int) -> list[Edge]:
        return self._out[b]

    def in_edges(self, b: int) -> list[Edge]:
        return self._in[b]

    def succs(self, b: int) -> list[int]:
        return [e.dst for e in self._out[b]]

    def preds(self, b: int) -> list[int]:
        return [e.src for e in self._in[b]]

    @property
    def exits(self) -> list[int]:
        return [b for b, blk in self.blocks.items() if blk.terminator in ("return", "halt")]

    def loop_at(self, header: int) -> Loop | None:
        for lp in self.loops:
            if lp.header == header:
                return lp
        return None


@dataclass
class CallGraph:
    nodes: list[int]
    edges: list[tuple[int, int]]  # (call site addr, callee entry)
    site_function: dict[int, int] = field(default_factory=dict)

    def callees(self, f: int) -> set[int]:
        return {callee for site, callee in self.edges if self.site_function[site] == f}

    def bottom_up(self) -> list[int]:
        """Functions ordered callees-first; refuses recursion."""
        ts = graphlib.TopologicalSorter({f: self.callees(f) for f in self.nodes})
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            cycle = " -> ".join(f"0x{a:x}" for a in exc.args[1])
            raise AnalysisError(f"recursion unsupported at {cycle}") from None


@dataclass
class Program:
    image: ProgramImage
    entry: int
    functions: dict[int, Function]
    callgraph: CallGraph
    call_edges: list[Edge]
    return_edges: list[Edge]
    jr_targets: dict[int, tuple[int, ...]]
    unresolved: set[int]

    def __post_init__(self):
        self.blocks: dict[int, BasicBlock] = {}
        for f in self.functions.values():
            self.blocks.update(f.blocks)
        self._block_of: dict[int, int] = {}
        for b in self.blocks.values():
            for i in b.instructions:
                self._block_of[i.addr] = b.start

    def block_of(self, addr: int) -> BasicBlock:
        return self.blocks[self._block_of[addr]]

    def contains(self, addr: int) -> bool:
        return addr in self._block_of

    def function_of(self, block: int) -> Function:
        return self.functions[self.blocks[block].function]

    @property
    def main(self) -> Function:
        return self.functions[self.entry]

    @property
    def intra_edges(self) -> list[Edge]:
        return [e for f in self.functions.values() for e in f.edges]


def _check_target(image: ProgramImage, src: int, dst: int) -> None:
    if not image.contains(dst):
        raise AnalysisError(f"control transfer at 0x{src:x} leaves the image (to 0x{dst:x})")


def _discover(image: ProgramImage, entry: int, jr_targets: Mapping[int, Iterable[int]]):
    code: dict[int, Instruction] = {}
    func_entries = {entry}
    work = [entry]
    while work:
        addr = work.pop()
        if addr in code:
            continue
        instr = image.decode_at(addr)
        code[addr] = instr
        k = instr.kind
        if k in ("HALT", "RET"):
            succ = []
        elif instr.is_branch:
            succ = [instr.target, addr + 4]
        elif k == "JMP":
            succ = [instr.target]
        elif k == "CALL":
            func_entries.add(instr.target)
            succ = [instr.target, addr + 4]
        elif k == "JR":
            succ = list(jr_targets.get(addr, ()))
        else:
            succ = [addr + 4]
        for s in succ:
            _check_target(image, addr, s)
            work.append(s)
    return code, func_entries


def _intra_succs(instr: Instruction, jr_targets) -> list[tuple[int, str]]:
    a, k = instr.addr, instr.kind
    if instr.is_branch:
        return [(instr.target, "taken"), (a + 4, "not-taken")]
    if k == "JMP":
        return [(instr.target, "taken")]
    if k == "JR":
        return [(t, "taken") for t in jr_targets.get(a, ())]
    if k == "CALL":
        return [(a + 4, "callret")]
    if k in ("RET", "HALT"):
        return []
    return [(a + 4, "fallthrough")]


def build_cfg(image: ProgramImage, entry: int | None = None,
              jr_targets: Mapping[int, Iterable[int]] | None = None) -> Program:
    """Decode reachable code and rebuild functions, blocks and the call graph.

    ``jr_targets`` supplies resolved targets for indirect jumps; a JR without
    an entry is left unresolved (no successors, address in
    ``Program.unresolved``).
    """
    entry = image.entry if entry is None else entry
    jr_targets = {a: tuple(sorted(set(ts))) for a, ts in (jr_targets or {}).items()}
    code, func_entries = _discover(image, entry, jr_targets)

    leaders = set(func_entries)
    for a, instr in code.items():
        if not instr.transfers_control:
            continue
        if a + 4 in code:
            leaders.add(a + 4)
        for t, _ in _intra_succs(instr, jr_targets):
            leaders.add(t)

    blocks: dict[int, BasicBlock] = {}
    for lead in sorted(leaders):
        instrs = [code[lead]]
        a = lead
        while not code[a].transfers_control and a + 4 in code and a + 4 not in leaders:
            a += 4
            instrs.append(code[a])
        blocks[lead] = BasicBlock(lead, tuple(instrs))

    # assign blocks to functions
    owner: dict[int, int] = {}
    for f in sorted(func_entries):
        stack = [f]
        while stack:
            b = stack.pop()
            if b in owner:
                if owner[b] != f:
                    raise AnalysisError(
                        f"code at 0x{b:x} shared between functions 0x{owner[b]:x} and 0x{f:x}")
                continue
            if b != f and b in func_entries:
                raise AnalysisError(
                    f"function 0x{f:x} flows into function entry 0x{b:x} without a call")
            owner[b] = f
            for t, _ in _intra_succs(blocks[b].last, jr_targets):
                stack.append(t)
    for b in blocks.values():
        b.function = owner[b.start]

    functions: dict[int, Function] = {}
    call_edges: list[Edge] = []
    cg_edges: list[tuple[int, int]] = []
    site_function: dict[int, int] = {}
    return_sites: dict[int, list[int]] = {}
    for f in sorted(func_entries):
        fblocks = {b: blk for b, blk in sorted(blocks.items()) if owner[b] == f}
        edges = []
        for b, blk in fblocks.items():
            for t, kind in _intra_succs(blk.last, jr_targets):
                edges.append(Edge(b, t, kind))
            if blk.last.kind == "CALL":
                callee = blk.last.target
                call_edges.append(Edge(b, callee, "call"))
                cg_edges.append((blk.last.addr, callee))
                site_function[blk.last.addr] = f
                return_sites.setdefault(callee, []).append(blk.last.addr + 4)
        functions[f] = Function(f, fblocks, edges)

    return_edges = []
    for f, fn in functions.items():
        for b in fn.exits:
            if fn.blocks[b].last.kind == "RET":
                for site in sorted(return_sites.get(f, ())):
                    return_edges.append(Edge(b, site, "return"))

    for fn in functions.values():
        fn.idom = compute_dominators(fn)
        fn.loops = find_natural_loops(fn, fn.idom)

    unresolved = {a for a, i in code.items() if i.kind == "JR" and a not in jr_targets}
    cg = CallGraph(sorted(func_entries), sorted(cg_edges), site_function)
    return Program(image, entry, functions, cg, sorted(call_edges), sorted(return_edges),
                   dict(jr_targets), unresolved)


def _rpo(f: Function) -> list[int]:
    seen, order = {f.entry}, []
    stack = [(f.entry, iter(f.succs(f.entry)))]
    while stack:
        node, it = stack[-1]
        for s in it:
            if s not in seen:
                seen.add(s)
                stack.append((s, iter(f.succs(s))))
                break
        else:
            order.append(node)
            stack.pop()
    order.reverse()
    return order


def compute_dominators(f: Function) -> dict[int, int]:
    """Immediate dominators (Cooper, Harvey & Kennedy); idom[entry] = entry."""
    order = _rpo(f)
    index = {b: i for i, b in enumerate(order)}
    idom = {f.entry: f.entry}

    def intersect(a: int, b: int) -> int:
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in order[1:]:
            preds = [p for p in f.preds(b) if p in idom]
            new = preds[0]
            for p in preds[1:]:
                new = intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    return idom


def dominates(idom: Mapping[int, int], a: int, b: int) -> bool:
    while True:
        if a == b:
            return True
        parent = idom[b]
        if parent == b:
            return False
        b = parent


def find_natural_loops(f: Function, idom: Mapping[int, int]) -> list[Loop]:
    """One loop per header; raises on irreducible control flow."""
    # retreating edges found by DFS must be back edges in a reducible graph
    state: dict[int, int] = {}
    stack = [(f.entry, iter(f.out_edges(f.entry)))]
    state[f.entry] = 1
    while stack:
        node, it = stack[-1]
        for e in it:
            st = state.get(e.dst)
            if st is None:
                state[e.dst] = 1
                stack.append((e.dst, iter(f.out_edges(e.dst))))
                break
            if st == 1 and not dominates(idom, e.dst, e.src):
                raise AnalysisError(f"irreducible control flow at 0x{e.dst:x}")
        else:
            state[node] = 2
            stack.pop()

    back: dict[int, list[Edge]] = {}
    for e in f.edges:
        if dominates(idom, e.dst, e.src):
            back.setdefault(e.dst, []).append(e)
    loops = []
    for h in sorted(back):
        body = {h}
        work = [e.src for e in back[h]]
        while work:
            b = work.pop()
            if b not in body:
                body.add(b)
                work.extend(f.preds(b))
        entries = tuple(e for e in f.in_edges(h) if e.src not in body)
        loops.append(Loop(h, tuple(sorted(back[h])), frozenset(body), entries))
    return loops


def jr_targets_from(interval, image: ProgramImage, addr: int) -> tuple[int, ...]:
    """Targets denoted by the interval of a JR register, or an error."""
    if interval.is_bottom:
        return ()
    lo = (interval.lo + 3) // 4 * 4
    hi = interval.hi // 4 * 4
    count = (hi - lo) // 4 + 1 if hi >= lo else 0
    if (count > MAX_JR_TARGETS or not image.contains(interval.lo)
            or not image.contains(interval.hi)):
        raise AnalysisError(f"unresolvable indirect jump at 0x{addr:x}")
    return tuple(range(lo, hi + 1, 4))


def resolve_indirect_jumps(program: Program, value_results) -> tuple[Program, bool]:
    """Recompute JR targets from value-analysis facts.

    Returns the rebuilt program and whether any target set changed.
    """
    targets = dict(program.jr_targets)
    for b in program.blocks.values():
        if b.last.kind == "JR":
            state = value_results.state_before(b.last.addr)
            iv = state.reg(b.last.rs1)
            targets[b.last.addr] = jr_targets_from(iv, program.image, b.last.addr)
    if targets == program.jr_targets and not program.unresolved:
        return program, False
    return build_cfg(program.image, program.entry, targets), True
