"""Hardware parameters shared by the simulator and the analyses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import TimeboundError


def _pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class CacheConfig:
    sets: int = 16
    assoc: int = 2
    line: int = 16
    penalty: int = 10

    def __post_init__(self):
        if not _pow2(self.sets) or not _pow2(self.line):
            raise TimeboundError("cache sets and line size must be powers of two")
        if self.line < 4:
            raise TimeboundError("cache lines must hold at least one word")
        if not 1 <= self.assoc <= 8:
            raise TimeboundError("cache associativity must be in 1..8")
        if self.penalty < 0:
            raise TimeboundError("cache miss penalty must be >= 0")

    def block_of(self, addr: int) -> int:
        return addr // self.line

    def set_of(self, block: int) -> int:
        return block % self.sets


@dataclass(frozen=True)
class MachineConfig:
    mem_size: int = 65536
    stack_init: int = 0xFF00
    icache: CacheConfig = field(default_factory=CacheConfig)
    dcache: CacheConfig = field(default_factory=CacheConfig)
    mul_cycles: int = 3
    taken_flush: int = 2

    def __post_init__(self):
        if self.stack_init % 4 or not 0 < self.stack_init <= self.mem_size:
            raise TimeboundError("stack_init must be 4-aligned and inside memory")
        for c in (self.icache, self.dcache):
            if c.sets * c.assoc * c.line > self.mem_size:
                raise TimeboundError("cache larger than memory")
        if self.mul_cycles < 1 or self.taken_flush < 0:
            raise TimeboundError("bad timing parameters")

    # miss penalties live on the cache configs
    @property
    def p_i(self) -> int:
        return self.icache.penalty

    @property
    def p_d(self) -> int:
        return self.dcache.penalty

    def with_penalties(self, p_i: int | None = None, p_d: int | None = None) -> "MachineConfig":
        ic = self.icache if p_i is None else replace(self.icache, penalty=p_i)
        dc = self.dcache if p_d is None else replace(self.dcache, penalty=p_d)
        return replace(self, icache=ic, dcache=dc)
