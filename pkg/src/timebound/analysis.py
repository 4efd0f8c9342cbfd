"""Runs the analysis phases in order: CFG building (refined with value
analysis for indirect jumps), value analysis, loop bounds, stack, cache,
pipeline timing and path analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotations import Annotations
from .cache import CacheResult, classify
from .cfg import MAX_REFINE_ROUNDS, Program, build_cfg, resolve_indirect_jumps
from .errors import AnalysisError
from .ipet import WcetResult, program_wcet
from .isa import ProgramImage
from .loops import LoopBound, loop_bounds
from .machine import MachineConfig
from .stack import StackResult, analyze_stack
from .timing import BlockTime, block_wcet
from .value import ValueResults, analyze


@dataclass
class AnalysisResult:
    image: ProgramImage
    mcfg: MachineConfig
    annotations: Annotations
    program: Program
    values: ValueResults
    bounds: dict[int, LoopBound] = field(default_factory=dict)
    stack: StackResult | None = None
    cache: CacheResult | None = None
    times: dict[int, BlockTime] = field(default_factory=dict)
    wcet: WcetResult | None = None
    warnings: list[str] = field(default_factory=list)


def reconstruct(image: ProgramImage, mcfg: MachineConfig, annotations: Annotations):
    """Alternate CFG building and value analysis until JR targets settle."""
    program = build_cfg(image, annotations.entry)
    for _ in range(MAX_REFINE_ROUNDS):
        vr = analyze(program, mcfg, annotations.inputs)
        program, changed = resolve_indirect_jumps(program, vr)
        if not changed:
            return program, vr
    addrs = ", ".join(f"0x{a:x}" for a in sorted(program.jr_targets))
    raise AnalysisError(f"unresolvable indirect jump at {addrs} (targets did not settle)")


def run_phases(image: ProgramImage, annotations: Annotations | None = None,
               mcfg: MachineConfig | None = None, mode: str = "full") -> AnalysisResult:
    """``mode`` is "full", "wcet" (no stack analysis) or "stack"."""
    annotations = annotations or Annotations()
    mcfg = mcfg or annotations.machine_config()
    program, vr = reconstruct(image, mcfg, annotations)
    res = AnalysisResult(image, mcfg, annotations, program, vr)
    res.warnings.extend(vr.warnings)

    stubbed = set(annotations.callee_bounds)
    for f in sorted(stubbed):
        res.warnings.append(f"trusted callee bound for 0x{f:x}: {annotations.callee_bounds[f]} cycles")
    if mode != "stack":
        res.bounds = loop_bounds(program, vr, annotations.loop_bounds, stubbed, res.warnings)
    if mode != "wcet":
        res.stack = analyze_stack(program, vr, mcfg)
    if mode == "stack":
        return res

    res.cache = classify(program, vr, mcfg.icache, mcfg.dcache)
    res.times = {b: block_wcet(blk, res.cache.classification, mcfg)
                 for b, blk in program.blocks.items()}
    res.wcet = program_wcet(program, res.times, {h: lb.bound for h, lb in res.bounds.items()},
                            vr.infeasible, annotations.callee_bounds)
    return res
