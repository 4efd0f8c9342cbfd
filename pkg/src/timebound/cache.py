"""Must/may abstract interpretation of set-associative LRU caches.

Must ages are upper bounds on LRU positions (a block in the must cache is
definitely cached); may ages are lower bounds (a block absent from the may
cache is definitely not cached).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

from .cfg import Program
from .errors import InternalError
from .machine import CacheConfig
from .value import flow_order, _flow_edges


class AbstractCacheState:
    __slots__ = ("config", "must", "may")

    def __init__(self, config: CacheConfig, must: tuple, may: tuple):
        self.config = config
        self.must = must
        self.may = may

    @classmethod
    def cold(cls, config: CacheConfig) -> "AbstractCacheState":
        empty = tuple({} for _ in range(config.sets))
        return cls(config, empty, empty)

    def blocks_of(self, lo: int, hi: int) -> list[int]:
        line = self.config.line
        return list(range(lo // line, hi // line + 1))

    def update(self, blocks: Iterable[int]) -> "AbstractCacheState":
        """Access one block, or one unknown block out of several."""
        blocks = sorted(set(blocks))
        if len(blocks) == 1:
            return self._update_one(blocks[0])
        assoc, sets = self.config.assoc, self.config.sets
        must, may = list(self.must), list(self.may)
        touched: dict[int, list[int]] = {}
        for b in blocks:
            touched.setdefault(b % sets, []).append(b)
        for s, cands in touched.items():
            must[s] = {x: a + 1 for x, a in must[s].items() if a + 1 < assoc}
            m = dict(may[s])
            for b in cands:
                m[b] = 0
            may[s] = m
        return AbstractCacheState(self.config, tuple(must), tuple(may))

    def _update_one(self, b: int) -> "AbstractCacheState":
        assoc = self.config.assoc
        s = b % self.config.sets
        old = self.must[s].get(b, assoc)
        must = {b: 0}
        for x, a in self.must[s].items():
            if x != b:
                na = a + 1 if a < old else a
                if na < assoc:
                    must[x] = na
        h = self.may[s].get(b)
        may = {b: 0}
        for x, a in self.may[s].items():
            if x != b:
                na = a + 1 if h is None or a <= h else a
                if na < assoc:
                    may[x] = na
        musts, mays = list(self.must), list(self.may)
        musts[s], mays[s] = must, may
        return AbstractCacheState(self.config, tuple(musts), tuple(mays))

    def join(self, other: "AbstractCacheState") -> "AbstractCacheState":
        if other.config != self.config:
            raise InternalError("joining cache states of different configurations")
        must = tuple({x: max(a, m2[x]) for x, a in m1.items() if x in m2}
                     for m1, m2 in zip(self.must, other.must))
        may = []
        for m1, m2 in zip(self.may, other.may):
            m = dict(m1)
            for x, a in m2.items():
                m[x] = min(a, m.get(x, a))
            may.append(m)
        return AbstractCacheState(self.config, must, tuple(may))

    def classify(self, blocks: Iterable[int]) -> str:
        blocks = list(set(blocks))
        if len(blocks) != 1:
            return "NC"
        b = blocks[0]
        s = b % self.config.sets
        if b in self.must[s]:
            return "AH"
        if b not in self.may[s]:
            return "AM"
        return "NC"

    def __eq__(self, other) -> bool:
        return (isinstance(other, AbstractCacheState) and self.config == other.config
                and self.must == other.must and self.may == other.may)

    def __repr__(self) -> str:
        return f"AbstractCacheState(must={self.must}, may={self.may})"


def acache_update(state: AbstractCacheState, accessed) -> AbstractCacheState:
    if isinstance(accessed, int):
        accessed = (accessed,)
    return state.update(accessed)


def acache_join(a: AbstractCacheState, b: AbstractCacheState) -> AbstractCacheState:
    return a.join(b)


@dataclass
class CacheResult:
    # (instruction addr, 'I' | 'D') -> 'AH' | 'AM' | 'NC'
    classification: dict
    block_in: dict

    def summary(self) -> dict[str, int]:
        counts = {"AH": 0, "AM": 0, "NC": 0}
        for c in self.classification.values():
            counts[c] += 1
        return counts


def _step(instr, istate, dstate, vr):
    iblocks = [instr.addr // istate.config.line]
    fetch = istate.classify(iblocks)
    istate = istate.update(iblocks)
    mem = None
    acc = vr.access.get(instr.addr)
    if acc is not None:
        dblocks = dstate.blocks_of(acc.interval.lo, acc.interval.hi)
        mem = dstate.classify(dblocks)
        dstate = dstate.update(dblocks)
    return istate, dstate, fetch, mem


def classify(program: Program, vr, icfg: CacheConfig, dcfg: CacheConfig) -> CacheResult:
    """Fixpoint over the interprocedural CFG from cold caches, skipping edges
    the value analysis proved infeasible."""
    out, inn = _flow_edges(program)
    order, _ = flow_order(program, out)
    prio = {b: i for i, b in enumerate(order)}

    def feasible(e) -> bool:
        return not vr.edge(e).is_bottom

    block_in: dict[int, tuple | None] = {b: None for b in program.blocks}
    block_out: dict[int, tuple | None] = {b: None for b in program.blocks}
    cold = (AbstractCacheState.cold(icfg), AbstractCacheState.cold(dcfg))

    def incoming(b):
        acc = cold if b == program.entry else None
        for e in inn[b]:
            st = block_out[e.src]
            if st is None or not feasible(e):
                continue
            acc = st if acc is None else (acc[0].join(st[0]), acc[1].join(st[1]))
        return acc

    heap = [(prio[program.entry], program.entry)]
    queued = {program.entry}
    while heap:
        _, b = heapq.heappop(heap)
        queued.discard(b)
        new = incoming(b)
        if new is None or (block_out[b] is not None and new == block_in[b]):
            continue
        block_in[b] = new
        ist, dst = new
        for instr in program.blocks[b].instructions:
            ist, dst, _, _ = _step(instr, ist, dst, vr)
        if block_out[b] != (ist, dst):
            block_out[b] = (ist, dst)
            for e in out[b]:
                if e.dst not in queued:
                    queued.add(e.dst)
                    heapq.heappush(heap, (prio[e.dst], e.dst))

    classification = {}
    for b, blk in program.blocks.items():
        state = block_in[b]
        for instr in blk.instructions:
            if state is None:
                classification[(instr.addr, "I")] = "NC"
                if instr.addr in vr.access:
                    classification[(instr.addr, "D")] = "NC"
                continue
            ist, dst, fetch, mem = _step(instr, state[0], state[1], vr)
            classification[(instr.addr, "I")] = fetch
            if mem is not None:
                classification[(instr.addr, "D")] = mem
            state = (ist, dst)
    return CacheResult(classification, block_in)
