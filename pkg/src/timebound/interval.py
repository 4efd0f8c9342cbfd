"""Signed 32-bit integer intervals.

Arithmetic never wraps: any operation whose exact result could leave the
signed 32-bit range yields top.
"""

from __future__ import annotations

from dataclasses import dataclass

INT_MIN = -(1 << 31)
INT_MAX = (1 << 31) - 1

WIDEN_THRESHOLDS = (INT_MIN, -1, 0, 1, 255, 65535, INT_MAX)


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: int

    @classmethod
    def top(cls) -> "Interval":
        return TOP

    @classmethod
    def bottom(cls) -> "Interval":
        return BOTTOM

    @classmethod
    def const(cls, value: int) -> "Interval":
        return cls(value, value)

    @property
    def is_bottom(self) -> bool:
        return self.lo > self.hi

    @property
    def is_top(self) -> bool:
        return self.lo <= INT_MIN and self.hi >= INT_MAX

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    @property
    def size(self) -> int:
        return 0 if self.is_bottom else self.hi - self.lo + 1

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def leq(self, other: "Interval") -> bool:
        return self.is_bottom or (other.lo <= self.lo and self.hi <= other.hi)

    def join(self, other: "Interval") -> "Interval":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else BOTTOM

    def widen(self, new: "Interval") -> "Interval":
        if self.is_bottom:
            return new
        if new.is_bottom:
            return self
        lo, hi = self.lo, self.hi
        if new.lo < lo:
            lo = max(t for t in WIDEN_THRESHOLDS if t <= new.lo)
        if new.hi > hi:
            hi = min(t for t in WIDEN_THRESHOLDS if t >= new.hi)
        return Interval(lo, hi)

    def add_const(self, c: int) -> "Interval":
        return apply("ADD", self, Interval.const(c))

    def __str__(self) -> str:
        if self.is_bottom:
            return "⊥"
        if self.is_top:
            return "⊤"
        return f"[{self.lo}, {self.hi}]"


TOP = Interval(INT_MIN, INT_MAX)
BOTTOM = Interval(1, 0)


def _hull(values) -> Interval:
    values = list(values)
    lo, hi = min(values), max(values)
    if lo < INT_MIN or hi > INT_MAX:
        return TOP
    return Interval(lo, hi)


def _low_mask(value: int) -> bool:
    # 2**k - 1 for k in 0..31
    return 0 <= value and value & (value + 1) == 0


def _shift_amounts(b: Interval):
    return sorted({v & 31 for v in range(b.lo, b.hi + 1)})


def apply(op: str, a: Interval, b: Interval) -> Interval:
    """Sound abstract counterpart of the concrete ALU operation ``op``."""
    if a.is_bottom or b.is_bottom:
        return BOTTOM
    if op == "ADD":
        return _hull((a.lo + b.lo, a.hi + b.hi))
    if op == "SUB":
        return _hull((a.lo - b.hi, a.hi - b.lo))
    if op == "MUL":
        return _hull((a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi))
    if op in ("AND", "OR"):
        if a.is_singleton and b.is_singleton:
            v = a.lo & b.lo if op == "AND" else a.lo | b.lo
            return Interval.const(v)
        if op == "AND":
            for x, m in ((a, b), (b, a)):
                if m.is_singleton and _low_mask(m.lo):
                    hi = min(m.lo, x.hi) if x.lo >= 0 else m.lo
                    return Interval(0, hi)
        return TOP
    if op in ("SHL", "SHR"):
        if b.size > 32:
            return TOP
        out = BOTTOM
        for s in _shift_amounts(b):
            out = out.join(_shift(op, a, s))
            if out.is_top:
                break
        return out
    raise ValueError(f"unknown operator {op}")


def _shift(op: str, a: Interval, s: int) -> Interval:
    if op == "SHL":
        return _hull((a.lo << s, a.hi << s))
    if s == 0:
        return a
    # logical shift: split at zero, each half is monotone in its unsigned image
    parts = []
    if a.lo < 0:
        neg_hi = min(a.hi, -1)
        parts += [(a.lo + (1 << 32)) >> s, (neg_hi + (1 << 32)) >> s]
    if a.hi >= 0:
        pos_lo = max(a.lo, 0)
        parts += [pos_lo >> s, a.hi >> s]
    return _hull(parts)
