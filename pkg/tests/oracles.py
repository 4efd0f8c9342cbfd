"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import functools
import sys

import numpy as np


def longest_path(f, times, bounds, infeasible=frozenset(), callee_wcet=None, may_halt=frozenset()):
    """Heaviest complete path through ``f`` by explicit search.

    Paths respect per-entry loop bounds (header executions counted from each
    entry), skip infeasible edges, and end at RET/HALT blocks or at a call
    to a function that may halt.  Block cost is the not-taken time plus
    callee WCET; a taken conditional edge adds the taken surcharge.
    Returns None when no complete path exists.
    """
    callee_wcet = callee_wcet or {}
    loops = sorted(f.loops, key=lambda lp: lp.header)
    idx = {lp.header: i for i, lp in enumerate(loops)}

    def cost(b):
        blk = f.blocks[b]
        c = times[b].base_cycles
        if blk.last.kind == "CALL":
            c += callee_wcet[blk.last.target]
        return c

    def is_exit(b):
        blk = f.blocks[b]
        return blk.last.kind in ("RET", "HALT") or (
            blk.last.kind == "CALL" and blk.last.target in may_halt)

    sys.setrecursionlimit(max(10000, sys.getrecursionlimit()))

    @functools.lru_cache(maxsize=None)
    def best(b, counters):
        # counters[i]: header executions of loop i since its latest entry
        # (0 when outside the loop)
        counters = list(counters)
        for i, lp in enumerate(loops):
            if b not in lp.body:
                counters[i] = 0
        counters = tuple(counters)
        here = cost(b)
        result = here if is_exit(b) else None
        for e in f.out_edges(b):
            if e in infeasible:
                continue
            nxt = list(counters)
            if e.dst in idx:
                i = idx[e.dst]
                lp = loops[i]
                nxt[i] = nxt[i] + 1 if e.src in lp.body else 1
                if nxt[i] > bounds[e.dst]:
                    continue
            sub = best(e.dst, tuple(nxt))
            if sub is None:
                continue
            extra = times[b].taken_extra if (e.kind == "taken" and f.blocks[b].last.is_branch) else 0
            total = here + extra + sub
            if result is None or total > result:
                result = total
        return result

    start = [0] * len(loops)
    if f.entry in idx:
        if bounds[f.entry] < 1:
            return None
        start[idx[f.entry]] = 1
    return best(f.entry, tuple(start))


def count_paths(f, bounds, infeasible=frozenset(), limit=10**6):
    """Number of complete paths (same rules as ``longest_path``), capped."""
    loops = sorted(f.loops, key=lambda lp: lp.header)
    idx = {lp.header: i for i, lp in enumerate(loops)}

    @functools.lru_cache(maxsize=None)
    def n(b, counters):
        counters = tuple(0 if b not in lp.body else c for lp, c in zip(loops, counters))
        total = 1 if f.blocks[b].last.kind in ("RET", "HALT") else 0
        for e in f.out_edges(b):
            if e in infeasible:
                continue
            nxt = list(counters)
            if e.dst in idx:
                i = idx[e.dst]
                nxt[i] = nxt[i] + 1 if e.src in loops[i].body else 1
                if nxt[i] > bounds[e.dst]:
                    continue
            total += n(e.dst, tuple(nxt))
        return min(total, limit)

    start = [0] * len(loops)
    if f.entry in idx:
        start[idx[f.entry]] = 1
    return n(f.entry, tuple(start))


class ConcreteLru:
    """Plain set-associative LRU over block numbers, most recent first."""

    def __init__(self, sets: int, assoc: int, contents=None):
        self.sets, self.assoc = sets, assoc
        self.lines = contents or tuple(() for _ in range(sets))

    def access(self, block: int) -> "ConcreteLru":
        s = block % self.sets
        row = [block] + [x for x in self.lines[s] if x != block]
        lines = list(self.lines)
        lines[s] = tuple(row[:self.assoc])
        return ConcreteLru(self.sets, self.assoc, tuple(lines))

    def age(self, block: int):
        row = self.lines[block % self.sets]
        return row.index(block) if block in row else None

    def key(self):
        return self.lines


# concrete 32-bit ALU semantics over numpy int64 arrays

def _wrap(v):
    v = v & 0xFFFFFFFF
    return np.where(v >= 1 << 31, v - (1 << 32), v)


def concrete_op(op: str, a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if op == "ADD":
        return _wrap(a + b)
    if op == "SUB":
        return _wrap(a - b)
    if op == "MUL":
        return _wrap(a * b)
    if op == "AND":
        return _wrap((a & 0xFFFFFFFF) & (b & 0xFFFFFFFF))
    if op == "OR":
        return _wrap((a & 0xFFFFFFFF) | (b & 0xFFFFFFFF))
    s = b & 31
    if op == "SHL":
        return _wrap((a & 0xFFFFFFFF) << s)
    if op == "SHR":
        return _wrap((a & 0xFFFFFFFF) >> s)
    raise ValueError(op)


def random_program(rng, n: int = 12, mem_ops: bool = True) -> str:
    """Loop-free source with forward branches, MULs and memory traffic."""
    lines = [f"        MOVI r{r}, {rng.randint(-8, 8)}" for r in range(1, 5)]
    lines.append("        MOVI r5, 0x1000")
    kinds = ["ALU", "MUL", "BR"] + (["LD", "ST"] if mem_ops else [])
    for i in range(n):
        k = rng.choice(kinds)
        a, b, c = (rng.randint(1, 4) for _ in range(3))
        if k == "ALU":
            op = rng.choice(["ADD", "SUB", "AND", "OR"])
            ins = f"{op} r{a}, r{b}, r{c}"
        elif k == "MUL":
            ins = f"MUL r{a}, r{b}, r{c}"
        elif k == "LD":
            ins = f"LD r{a}, [r5+{4 * rng.randint(0, 15)}]"
        elif k == "ST":
            ins = f"ST r{a}, [r5+{4 * rng.randint(0, 15)}]"
        else:
            op = rng.choice(["BEQ", "BNE", "BLT", "BGE"])
            ins = f"{op} r{b}, r{c}, L{rng.randint(i + 1, n)}"
        lines.append(f"L{i}:     {ins}")
    lines.append(f"L{n}:     HALT")
    return "\n".join(lines) + "\n"
