"""Cycle-accurate reference simulator.

Concrete LRU caches plus the overlap recurrence from :mod:`timebound.timing`.
Every soundness test compares analysis results against traces produced here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .errors import TimeboundError, TrapError
from .isa import ALU_KINDS, SP, Instruction, ProgramImage
from .machine import CacheConfig, MachineConfig
from .timing import Pipeline, exec_cycles, fetch_cycles, redirects

MASK32 = 0xFFFFFFFF
DEFAULT_BUDGET = 10**7
MAX_DOMAIN = 1 << 20


def wrap32(value: int) -> int:
    value &= MASK32
    return value - (1 << 32) if value & 0x80000000 else value


def alu(kind: str, a: int, b: int) -> int:
    """Concrete ALU semantics on signed 32-bit values."""
    if kind == "ADD":
        return wrap32(a + b)
    if kind == "SUB":
        return wrap32(a - b)
    if kind == "MUL":
        return wrap32(a * b)
    if kind == "AND":
        return wrap32(a & b)
    if kind == "OR":
        return wrap32(a | b)
    if kind == "SHL":
        return wrap32(a << (b & 31))
    if kind == "SHR":  # logical
        return wrap32((a & MASK32) >> (b & 31))
    raise ValueError(kind)


def branch_taken(kind: str, a: int, b: int) -> bool:
    if kind == "BEQ":
        return a == b
    if kind == "BNE":
        return a != b
    if kind == "BLT":
        return a < b
    return a >= b


class LruCache:
    """Concrete set-associative LRU cache; each set is MRU-first."""

    def __init__(self, config: CacheConfig):
        self.config = config
        self.sets: list[list[int]] = [[] for _ in range(config.sets)]

    def access(self, addr: int) -> bool:
        block = addr // self.config.line
        ways = self.sets[block % self.config.sets]
        hit = block in ways
        if hit:
            ways.remove(block)
        elif len(ways) == self.config.assoc:
            ways.pop()
        ways.insert(0, block)
        return hit


@dataclass
class Trace:
    total_cycles: int = 0
    max_stack_depth: int = 0
    instructions: int = 0
    # (instr addr, reg) -> observed values just before the instruction executes
    observations: dict = field(default_factory=dict)
    # (control instr addr, next addr) -> per-register value sets on arrival
    arrivals: dict = field(default_factory=dict)
    access_log: list = field(default_factory=list)
    halted: bool = False
    path: list | None = None

    def registers_at(self, addr: int, reg: int) -> set:
        return self.observations.get((addr, reg), set())


class Machine:
    def __init__(self, image: ProgramImage, cfg: MachineConfig):
        self.image = image
        self.cfg = cfg
        if image.end > cfg.mem_size:
            raise TimeboundError("program image does not fit in memory")
        self.mem = bytearray(cfg.mem_size)
        self.mem[image.load_address:image.end] = image.code
        self.regs = [0] * 16
        self.regs[SP] = cfg.stack_init
        self.icache = LruCache(cfg.icache)
        self.dcache = LruCache(cfg.dcache)
        self.decoded: dict[int, Instruction] = {}

    def fetch(self, pc: int) -> Instruction:
        instr = self.decoded.get(pc)
        if instr is None:
            if pc % 4 or not self.image.contains(pc):
                raise TrapError(pc, "instruction fetch outside the program image")
            instr = self.image.decode_at(pc)
            self.decoded[pc] = instr
        return instr

    def check(self, pc: int, addr: int) -> None:
        if addr % 4:
            raise TrapError(pc, f"misaligned access to 0x{addr:x}")
        if not 0 <= addr <= self.cfg.mem_size - 4:
            raise TrapError(pc, f"access to 0x{addr:x} outside memory")

    def load(self, pc: int, addr: int) -> int:
        self.check(pc, addr)
        return wrap32(int.from_bytes(self.mem[addr:addr + 4], "little"))

    def store(self, pc: int, addr: int, value: int) -> None:
        self.check(pc, addr)
        self.mem[addr:addr + 4] = (value & MASK32).to_bytes(4, "little")


def run(image: ProgramImage, cfg: MachineConfig | None = None,
        inputs: Mapping[int, int] | None = None, cycle_budget: int = DEFAULT_BUDGET,
        observe: bool = True, record_path: bool = False, dump: list | None = None) -> Trace:
    """Execute ``image`` from its entry until HALT.

    ``inputs`` maps registers r0..r14 to initial values; everything else
    starts at zero.  Lines of the textual trace dump are appended to ``dump``
    when it is given.
    """
    cfg = cfg or MachineConfig()
    m = Machine(image, cfg)
    for reg, value in (inputs or {}).items():
        if not 0 <= reg < SP:
            raise TimeboundError(f"inputs may only set r0..r14, not r{reg}")
        m.regs[reg] = wrap32(value)
    regs = m.regs
    trace = Trace(path=[] if record_path else None)
    pipe = Pipeline()
    min_sp = regs[SP]
    pc = image.entry
    obs = trace.observations
    log = trace.access_log

    while True:
        instr = m.fetch(pc)
        if observe:
            for r in range(16):
                key = (pc, r)
                s = obs.get(key)
                if s is None:
                    obs[key] = {regs[r]}
                else:
                    s.add(regs[r])
        if record_path:
            trace.path.append(pc)
        i_hit = m.icache.access(pc)
        log.append((pc, "I", "hit" if i_hit else "miss"))
        d_hit = None
        kind = instr.kind
        next_pc = pc + 4
        taken = False

        if kind == "MOVI":
            regs[instr.rd] = instr.imm
        elif kind in ALU_KINDS:
            regs[instr.rd] = alu(kind, regs[instr.rs1], regs[instr.rs2])
        elif kind == "ADDI":
            regs[instr.rd] = wrap32(regs[instr.rs1] + instr.imm)
        elif kind == "LD":
            addr = regs[instr.rs1] + instr.imm
            value = m.load(pc, addr)
            d_hit = m.dcache.access(addr)
            regs[instr.rd] = value
        elif kind == "ST":
            addr = regs[instr.rs1] + instr.imm
            m.store(pc, addr, regs[instr.rd])
            d_hit = m.dcache.access(addr)
        elif instr.is_branch:
            taken = branch_taken(kind, regs[instr.rs1], regs[instr.rs2])
            if taken:
                next_pc = instr.target
        elif kind == "JMP":
            next_pc = instr.imm
        elif kind == "JR":
            next_pc = regs[instr.rs1]
        elif kind == "CALL":
            sp = regs[SP] - 4
            m.store(pc, sp, pc + 4)
            d_hit = m.dcache.access(sp)
            regs[SP] = wrap32(sp)
            next_pc = instr.imm
        elif kind == "RET":
            sp = regs[SP]
            next_pc = m.load(pc, sp)
            d_hit = m.dcache.access(sp)
            regs[SP] = wrap32(sp + 4)
        if d_hit is not None:
            log.append((pc, "D", "hit" if d_hit else "miss"))

        redirect = redirects(kind, taken)
        done = pipe.step(fetch_cycles(not i_hit, cfg),
                         exec_cycles(kind, taken, d_hit is False, cfg), redirect)
        trace.instructions += 1
        if regs[SP] < min_sp:
            min_sp = regs[SP]
        if dump is not None:
            d = "" if d_hit is None else f" D:{'hit' if d_hit else 'miss'}"
            dump.append(f"CYCLE {done} ADDR 0x{pc:x} {instr} I:{'hit' if i_hit else 'miss'}{d} "
                        f"SP=0x{regs[SP] & MASK32:x}")
        if kind == "HALT":
            trace.halted = True
            break
        if done > cycle_budget:
            raise TrapError(pc, f"cycle budget {cycle_budget} exhausted")
        if observe and (instr.transfers_control):
            key = (pc, next_pc)
            arr = trace.arrivals.get(key)
            if arr is None:
                trace.arrivals[key] = [{v} for v in regs]
            else:
                for s, v in zip(arr, regs):
                    s.add(v)
        pc = next_pc

    trace.total_cycles = pipe.exec_done
    trace.max_stack_depth = max(0, cfg.stack_init - min_sp)
    return trace


@dataclass
class ExhaustiveResult:
    runs: int
    max_cycles: int
    max_stack_depth: int
    worst_inputs: dict
    observations: dict
    arrivals: dict
    # (addr, 'I'|'D') -> 'hit' | 'miss' | 'mixed'
    access_classes: dict
    cycles: list
    traces: list | None = None


def input_combinations(domain: Mapping[int, tuple[int, int]]):
    regs = sorted(domain)
    size = 1
    for r in regs:
        lo, hi = domain[r]
        if hi < lo:
            raise TimeboundError(f"empty input range for r{r}")
        size *= hi - lo + 1
    if size > MAX_DOMAIN:
        raise TimeboundError(f"input domain has {size} points, more than {MAX_DOMAIN}")
    for values in itertools.product(*(range(domain[r][0], domain[r][1] + 1) for r in regs)):
        yield dict(zip(regs, values))


def exhaustive_run(image: ProgramImage, cfg: MachineConfig | None = None,
                   input_domain: Mapping[int, tuple[int, int]] | None = None,
                   keep_traces: bool = False, record_path: bool = False) -> ExhaustiveResult:
    """Run every input combination and aggregate the traces."""
    cfg = cfg or MachineConfig()
    out = ExhaustiveResult(0, 0, 0, {}, {}, {}, {}, [], [] if keep_traces else None)
    for inputs in input_combinations(input_domain or {}):
        t = run(image, cfg, inputs, record_path=record_path)
        out.runs += 1
        out.cycles.append(t.total_cycles)
        if t.total_cycles > out.max_cycles or out.runs == 1:
            out.max_cycles, out.worst_inputs = t.total_cycles, inputs
        out.max_stack_depth = max(out.max_stack_depth, t.max_stack_depth)
        for key, vals in t.observations.items():
            out.observations.setdefault(key, set()).update(vals)
        for key, per_reg in t.arrivals.items():
            merged = out.arrivals.setdefault(key, [set() for _ in range(16)])
            for s, vals in zip(merged, per_reg):
                s.update(vals)
        seen = {}
        for addr, kind, res in t.access_log:
            key = (addr, kind)
            prev = seen.get(key)
            seen[key] = res if prev in (None, res) else "mixed"
        for key, res in seen.items():
            prev = out.access_classes.get(key)
            out.access_classes[key] = res if prev in (None, res) else "mixed"
        if keep_traces:
            out.traces.append(t)
    return out
