"""Two-stage fetch/execute overlap model and per-block cycle bounds.

The recurrence below is the single definition of timing used by both the
concrete simulator and the analysis::

    fetch_done(i)   = fetch_start(i) + fetch_time(i)
    exec_start(i)   = max(fetch_done(i), exec_done(i-1))
    exec_done(i)    = exec_start(i) + exec_time(i)
    fetch_start(i+1) = exec_done(i)   after a taken transfer
                     = fetch_done(i)  otherwise

A block is timed from an empty pipeline (fetch_start = exec_done(0)), which
bounds its real contribution from above whatever backlog it inherits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .isa import ALU_KINDS, Instruction
from .machine import MachineConfig

MISS_CLASSES = ("AM", "NC")


class Pipeline:
    """Running state of the overlap recurrence."""

    __slots__ = ("fetch_start", "exec_done")

    def __init__(self, fetch_start: int = 0, exec_done: int = 0):
        self.fetch_start = fetch_start
        self.exec_done = exec_done

    def step(self, fetch_time: int, exec_time: int, redirect: bool) -> int:
        fetch_done = self.fetch_start + fetch_time
        self.exec_done = max(fetch_done, self.exec_done) + exec_time
        self.fetch_start = self.exec_done if redirect else fetch_done
        return self.exec_done


def fetch_cycles(miss: bool, mcfg: MachineConfig) -> int:
    return 1 + (mcfg.p_i if miss else 0)


def exec_cycles(kind: str, taken: bool, d_miss: bool, mcfg: MachineConfig) -> int:
    mem = mcfg.p_d if d_miss else 0
    if kind == "MUL":
        return mcfg.mul_cycles
    if kind in ALU_KINDS or kind in ("MOVI", "ADDI", "HALT"):
        return 1
    if kind in ("LD", "ST"):
        return 2 + mem
    if kind in ("CALL", "RET"):
        return 1 + mcfg.taken_flush + 2 + mem
    if kind in ("JMP", "JR"):
        return 1 + mcfg.taken_flush
    # conditional branch
    return 1 + mcfg.taken_flush if taken else 1


def redirects(kind: str, taken: bool) -> bool:
    return kind in ("JMP", "JR", "CALL", "RET") or (taken and kind in ("BEQ", "BNE", "BLT", "BGE"))


def instruction_times(instr: Instruction, fetch_class: str, mem_class: str | None,
                      mcfg: MachineConfig, taken: bool = False) -> tuple[int, int]:
    """(fetch_time, exec_time) with NC timed as a miss."""
    return (fetch_cycles(fetch_class in MISS_CLASSES, mcfg),
            exec_cycles(instr.kind, taken, mem_class in MISS_CLASSES, mcfg))


def sequence_cycles(times, backlog: int = 0) -> int:
    """Contribution exec_done(n) - exec_done(0) of a sequence of
    (fetch_time, exec_time) pairs, starting with exec_done(0) - fetch_start(1)
    equal to ``backlog``."""
    pipe = Pipeline(fetch_start=0, exec_done=backlog)
    for ft, et in times:
        pipe.step(ft, et, False)
    return pipe.exec_done - backlog


@dataclass(frozen=True)
class BlockTime:
    block: int
    wcet_cycles: int
    # extra cycles charged on a taken conditional-branch edge
    taken_extra: int = 0

    @property
    def base_cycles(self) -> int:
        return self.wcet_cycles - self.taken_extra


def block_wcet(block, classification: Mapping[tuple[int, str], str], mcfg: MachineConfig) -> BlockTime:
    """Worst-case contribution of ``block`` from an empty pipeline.

    ``wcet_cycles`` is the worse of the taken/not-taken variants of a
    conditional terminator; ``taken_extra`` is what the taken variant adds.
    """
    def run(taken: bool) -> int:
        pipe = Pipeline()
        for instr in block.instructions:
            t = taken and instr is block.instructions[-1]
            ft, et = instruction_times(instr, classification.get((instr.addr, "I"), "NC"),
                                       classification.get((instr.addr, "D")), mcfg, taken=t)
            pipe.step(ft, et, False)
        return pipe.exec_done

    not_taken = run(False)
    if block.instructions[-1].is_branch:
        taken = run(True)
        return BlockTime(block.start, max(taken, not_taken), taken - not_taken)
    return BlockTime(block.start, not_taken)
