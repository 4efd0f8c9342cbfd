"""Worst-case stack usage from stack-pointer intervals."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cfg import Program
from .errors import AnalysisError
from .isa import SP


@dataclass
class StackResult:
    local_depth: dict[int, int]
    total_depth: dict[int, int]
    global_bound: int
    witness: list[int] = field(default_factory=list)


def _sp_lost(iv, mcfg) -> bool:
    return iv.is_top or iv.lo < 0 or iv.hi > mcfg.mem_size


def analyze_stack(program: Program, vr, mcfg=None) -> StackResult:
    """Per-function depth below SP-at-entry, composed bottom-up.

    Depth at a point is ``entry.hi - sp.lo``; a call site adds the 4-byte
    return address and the callee's total depth.
    """
    mcfg = mcfg or vr.mcfg
    order = program.callgraph.bottom_up()
    local: dict[int, int] = {}
    total: dict[int, int] = {}
    via: dict[int, int | None] = {}
    for fa in order:
        f = program.functions[fa]
        entry_sp = vr.function_entry[fa].reg(SP)
        if entry_sp.is_bottom:
            local[fa] = total[fa] = 0
            via[fa] = None
            continue
        if _sp_lost(entry_sp, mcfg):
            raise AnalysisError(f"stack pointer lost at 0x{fa:x}")
        loc, tot, best_callee = 0, 0, None
        for blk in f.blocks.values():
            for instr in blk.instructions:
                s = vr.state_before(instr.addr)
                if s.is_bottom:
                    continue
                sp = s.reg(SP)
                if _sp_lost(sp, mcfg):
                    raise AnalysisError(f"stack pointer lost at 0x{instr.addr:x}")
                depth = max(0, entry_sp.hi - sp.lo)
                loc = max(loc, depth)
                if depth > tot:
                    tot, best_callee = depth, None
                if instr.kind == "CALL":
                    through = depth + 4 + total[instr.target]
                    if through > tot:
                        tot, best_callee = through, instr.target
        local[fa], total[fa], via[fa] = loc, tot, best_callee

    chain = [program.entry]
    while via.get(chain[-1]) is not None:
        chain.append(via[chain[-1]])
    entry_sp = vr.function_entry[program.entry].reg(SP)
    offset = max(0, mcfg.stack_init - entry_sp.lo) if not entry_sp.is_bottom else 0
    return StackResult(local, total, total[program.entry] + offset, chain)
