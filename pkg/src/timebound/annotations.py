"""Line-based annotation files.

::

    # comment
    entry 0x0
    input r1 0 255
    loopbound 0x40 16          # header executions per loop entry
    callee_bound 0x80 120      # trusted WCET of a function, in cycles
    icache 16 2 16 10          # sets assoc line penalty
    dcache 16 2 16 10
    stack_init 0xFF00
    penalty_i 10
    penalty_d 10
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import AnnotationError, TimeboundError
from .interval import INT_MAX, INT_MIN
from .isa import SP
from .machine import CacheConfig, MachineConfig


@dataclass
class Annotations:
    entry: int | None = None
    inputs: dict[int, tuple[int, int]] = field(default_factory=dict)
    loop_bounds: dict[int, int] = field(default_factory=dict)
    callee_bounds: dict[int, int] = field(default_factory=dict)
    icache: CacheConfig | None = None
    dcache: CacheConfig | None = None
    stack_init: int | None = None
    penalty_i: int | None = None
    penalty_d: int | None = None

    def machine_config(self, base: MachineConfig | None = None) -> MachineConfig:
        cfg = base or MachineConfig()
        changes = {}
        if self.icache:
            changes["icache"] = self.icache
        if self.dcache:
            changes["dcache"] = self.dcache
        if self.stack_init is not None:
            changes["stack_init"] = self.stack_init
        try:
            cfg = replace(cfg, **changes)
            return cfg.with_penalties(self.penalty_i, self.penalty_d)
        except TimeboundError as exc:
            raise AnnotationError(str(exc)) from None


_ARITY = {"entry": 1, "input": 3, "loopbound": 2, "callee_bound": 2, "icache": 4, "dcache": 4,
          "stack_init": 1, "penalty_i": 1, "penalty_d": 1}


def _int(tok: str, line: int) -> int:
    try:
        return int(tok, 0)
    except ValueError:
        raise AnnotationError(f"line {line}: expected a number, got {tok!r}") from None


def _addr(tok: str, line: int) -> int:
    a = _int(tok, line)
    if a < 0 or a % 4:
        raise AnnotationError(f"line {line}: address {tok} is not 4-aligned")
    return a


def parse_annotations(text: str) -> Annotations:
    ann = Annotations()
    for n, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        key, args = toks[0], toks[1:]
        if key not in _ARITY:
            raise AnnotationError(f"line {n}: unknown key {key!r}")
        if len(args) != _ARITY[key]:
            raise AnnotationError(f"line {n}: {key} takes {_ARITY[key]} arguments")
        if key == "entry":
            ann.entry = _addr(args[0], n)
        elif key == "input":
            reg = args[0].lower()
            if not (reg.startswith("r") and reg[1:].isdigit() and 0 <= int(reg[1:]) < SP):
                raise AnnotationError(f"line {n}: input register must be r0..r14")
            r = int(reg[1:])
            lo, hi = _int(args[1], n), _int(args[2], n)
            if not INT_MIN <= lo <= hi <= INT_MAX:
                raise AnnotationError(f"line {n}: empty or out-of-range input range")
            if r in ann.inputs:
                raise AnnotationError(f"line {n}: duplicate input for r{r}")
            ann.inputs[r] = (lo, hi)
        elif key == "loopbound":
            h, k = _addr(args[0], n), _int(args[1], n)
            if k < 0:
                raise AnnotationError(f"line {n}: negative loop bound")
            if h in ann.loop_bounds:
                raise AnnotationError(f"line {n}: duplicate loopbound for 0x{h:x}")
            ann.loop_bounds[h] = k
        elif key == "callee_bound":
            f, k = _addr(args[0], n), _int(args[1], n)
            if k < 0:
                raise AnnotationError(f"line {n}: negative callee bound")
            if f in ann.callee_bounds:
                raise AnnotationError(f"line {n}: duplicate callee_bound for 0x{f:x}")
            ann.callee_bounds[f] = k
        elif key in ("icache", "dcache"):
            vals = [_int(a, n) for a in args]
            try:
                setattr(ann, key, CacheConfig(*vals))
            except TimeboundError as exc:
                raise AnnotationError(f"line {n}: {exc}") from None
        elif key == "stack_init":
            ann.stack_init = _addr(args[0], n)
        else:
            v = _int(args[0], n)
            if v < 0:
                raise AnnotationError(f"line {n}: negative penalty")
            setattr(ann, key, v)
    return ann
