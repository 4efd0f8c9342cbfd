"""The toy 32-bit RISC instruction set: encoding, decoding and an assembler.

Word layout (little-endian in memory)::

    [31:24] opcode  [23:20] rd  [19:16] rs1  [15:12] rs2  [11:0] imm12
    MOVI:     imm16 in [15:0]
    JMP/CALL: imm24 in [23:0], an absolute byte address

Every field an instruction does not use must be zero, so each word decodes
to at most one instruction.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AssemblyError, DecodeError, EncodingError, TimeboundError

NUM_REGS = 16
SP = 15

OPCODES = {
    "HALT": 0x00, "MOVI": 0x01, "ADD": 0x02, "SUB": 0x03, "MUL": 0x04,
    "ADDI": 0x05, "AND": 0x06, "OR": 0x07, "SHL": 0x08, "SHR": 0x09,
    "LD": 0x10, "ST": 0x11,
    "BEQ": 0x20, "BNE": 0x21, "BLT": 0x22, "BGE": 0x23,
    "JMP": 0x30, "CALL": 0x31, "RET": 0x32, "JR": 0x33,
}
KINDS = {op: kind for kind, op in OPCODES.items()}

ALU_KINDS = frozenset({"ADD", "SUB", "MUL", "AND", "OR", "SHL", "SHR"})
BRANCH_KINDS = frozenset({"BEQ", "BNE", "BLT", "BGE"})
MEMORY_KINDS = frozenset({"LD", "ST"})

# operand format per kind
_FORMAT = {
    "HALT": "N", "RET": "N",
    "MOVI": "I16",
    "ADDI": "I12", "LD": "I12", "ST": "I12",
    "JMP": "J", "CALL": "J",
    "JR": "JR",
}
_FORMAT.update({k: "R" for k in ALU_KINDS})
_FORMAT.update({k: "B" for k in BRANCH_KINDS})

IMM12_MIN, IMM12_MAX = -(1 << 11), (1 << 11) - 1
IMM16_MIN, IMM16_MAX = -(1 << 15), (1 << 15) - 1
IMM24_MAX = (1 << 24) - 1


def _sext(value: int, bits: int) -> int:
    sign = 1 << (bits - 1)
    return (value & (sign - 1)) - (value & sign)


@dataclass(frozen=True)
class Instruction:
    kind: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    addr: int = 0

    @property
    def fmt(self) -> str:
        return _FORMAT[self.kind]

    @property
    def is_branch(self) -> bool:
        return self.kind in BRANCH_KINDS

    @property
    def transfers_control(self) -> bool:
        return self.kind in BRANCH_KINDS or self.kind in ("JMP", "CALL", "RET", "JR", "HALT")

    @property
    def target(self) -> int | None:
        """Static control-transfer target, if the instruction has one."""
        if self.kind in BRANCH_KINDS:
            return self.addr + 4 + 4 * self.imm
        if self.kind in ("JMP", "CALL"):
            return self.imm
        return None

    def writes(self) -> frozenset[int]:
        """Registers this instruction may overwrite."""
        if self.kind in ALU_KINDS or self.kind in ("MOVI", "ADDI", "LD"):
            return frozenset({self.rd})
        if self.kind in ("CALL", "RET"):
            return frozenset({SP})
        return frozenset()

    def __str__(self) -> str:
        k, f = self.kind, self.fmt
        if f == "N":
            return k
        if f == "I16":
            return f"{k} r{self.rd}, {self.imm}"
        if f == "R":
            return f"{k} r{self.rd}, r{self.rs1}, r{self.rs2}"
        if k == "ADDI":
            return f"{k} r{self.rd}, r{self.rs1}, {self.imm}"
        if f == "I12":
            return f"{k} r{self.rd}, [r{self.rs1}{self.imm:+d}]"
        if f == "B":
            return f"{k} r{self.rs1}, r{self.rs2}, 0x{self.target:x}"
        if f == "J":
            return f"{k} 0x{self.imm:x}"
        return f"{k} r{self.rs1}"


def _check_fields(instr: Instruction) -> None:
    if instr.kind not in OPCODES:
        raise EncodingError(f"unknown instruction kind {instr.kind!r}")
    for name in ("rd", "rs1", "rs2"):
        if not 0 <= getattr(instr, name) < NUM_REGS:
            raise EncodingError(f"{instr.kind}: register {name} out of range")
    if instr.addr % 4:
        raise EncodingError(f"instruction address 0x{instr.addr:x} not 4-aligned")
    f = instr.fmt
    used = {
        "N": (), "I16": ("rd", "imm"), "R": ("rd", "rs1", "rs2"),
        "I12": ("rd", "rs1", "imm"), "B": ("rs1", "rs2", "imm"),
        "J": ("imm",), "JR": ("rs1",),
    }[f]
    for name in ("rd", "rs1", "rs2", "imm"):
        if name not in used and getattr(instr, name) != 0:
            raise EncodingError(f"{instr.kind}: field {name} must be zero")
    if f in ("I12", "B") and not IMM12_MIN <= instr.imm <= IMM12_MAX:
        raise EncodingError(f"{instr.kind}: immediate {instr.imm} exceeds imm12")
    if f == "I16" and not IMM16_MIN <= instr.imm <= IMM16_MAX:
        raise EncodingError(f"{instr.kind}: immediate {instr.imm} exceeds imm16")
    if f == "J":
        if not 0 <= instr.imm <= IMM24_MAX:
            raise EncodingError(f"{instr.kind}: address {instr.imm} exceeds imm24")
        if instr.imm % 4:
            raise EncodingError(f"{instr.kind}: target 0x{instr.imm:x} not 4-aligned")


def encode_instruction(instr: Instruction) -> int:
    _check_fields(instr)
    word = OPCODES[instr.kind] << 24
    f = instr.fmt
    if f == "J":
        return word | instr.imm
    word |= instr.rd << 20 | instr.rs1 << 16 | instr.rs2 << 12
    if f == "I16":
        word |= instr.imm & 0xFFFF
    elif f in ("I12", "B"):
        word |= instr.imm & 0xFFF
    return word


def decode_instruction(word: int, addr: int) -> Instruction:
    if addr % 4:
        raise DecodeError(addr, "address not 4-aligned")
    if not 0 <= word <= 0xFFFFFFFF:
        raise DecodeError(addr, f"word {word:#x} is not 32 bits")
    op = word >> 24
    kind = KINDS.get(op)
    if kind is None:
        raise DecodeError(addr, f"unknown opcode 0x{op:02x}")
    f = _FORMAT[kind]
    rd, rs1, rs2 = (word >> 20) & 0xF, (word >> 16) & 0xF, (word >> 12) & 0xF
    imm12 = word & 0xFFF
    if f == "J":
        imm = word & 0xFFFFFF
        if imm % 4:
            raise DecodeError(addr, f"{kind} target 0x{imm:x} not 4-aligned")
        return Instruction(kind, imm=imm, addr=addr)
    if f == "I16":
        if rs1:
            raise DecodeError(addr, "MOVI with non-zero rs1 field")
        return Instruction(kind, rd=rd, imm=_sext(word & 0xFFFF, 16), addr=addr)
    nonzero = {
        "N": rd or rs1 or rs2 or imm12,
        "R": imm12,
        "I12": rs2,
        "B": rd,
        "JR": rd or rs2 or imm12,
    }[f]
    if nonzero:
        raise DecodeError(addr, f"{kind} with non-zero unused field")
    if f == "N":
        return Instruction(kind, addr=addr)
    if f == "R":
        return Instruction(kind, rd=rd, rs1=rs1, rs2=rs2, addr=addr)
    if f == "I12":
        return Instruction(kind, rd=rd, rs1=rs1, imm=_sext(imm12, 12), addr=addr)
    if f == "B":
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=_sext(imm12, 12), addr=addr)
    return Instruction(kind, rs1=rs1, addr=addr)


MAGIC = b"TWCA"


@dataclass(frozen=True)
class ProgramImage:
    entry: int
    code: bytes
    load_address: int = 0
    symbols: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.code or len(self.code) % 4:
            raise TimeboundError("program code must be a non-empty multiple of 4 bytes")
        if not self.contains(self.entry):
            raise TimeboundError(f"entry 0x{self.entry:x} outside the image")

    @property
    def end(self) -> int:
        return self.load_address + len(self.code)

    def contains(self, addr: int) -> bool:
        return self.load_address <= addr < self.end

    def word_at(self, addr: int) -> int:
        off = addr - self.load_address
        return int.from_bytes(self.code[off:off + 4], "little")

    def decode_at(self, addr: int) -> Instruction:
        if not self.contains(addr):
            raise DecodeError(addr, "address outside the program image")
        return decode_instruction(self.word_at(addr), addr)

    @property
    def words(self) -> list[int]:
        return [self.word_at(a) for a in range(self.load_address, self.end, 4)]

    def to_bytes(self) -> bytes:
        return MAGIC + struct.pack("<II", self.entry, len(self.code)) + self.code

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProgramImage":
        if len(data) < 12 or data[:4] != MAGIC:
            raise TimeboundError("not a TWCA binary (bad magic)")
        entry, length = struct.unpack_from("<II", data, 4)
        code = data[12:12 + length]
        if len(code) != length:
            raise TimeboundError("truncated TWCA binary")
        return cls(entry=entry, code=code)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ProgramImage":
        return cls.from_bytes(Path(path).read_bytes())


# --------------------------------------------------------------------------
# assembler

_REG_RE = re.compile(r"^(?:r(\d+)|sp)$", re.IGNORECASE)
_LABEL_RE = re.compile(r"^([A-Za-z_.$][\w.$]*)\s*:")
_TERM_RE = re.compile(r"\s*([+-])?\s*([A-Za-z_.$][\w.$]*|0[xX][0-9a-fA-F]+|\d+)\s*")
_MEM_RE = re.compile(r"^\[\s*([A-Za-z]\w*)\s*(?:([+-])(.*))?\]$")


def _split_operands(text: str) -> list[str]:
    ops, depth, cur = [], 0, ""
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            ops.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        ops.append(cur.strip())
    return ops


class _Assembler:
    def __init__(self, source: str):
        self.source = source
        self.labels: dict[str, int] = {}

    def reg(self, text: str, line: int) -> int:
        m = _REG_RE.match(text.strip())
        if not m:
            raise AssemblyError(line, f"expected register, got {text!r}")
        if m.group(1) is None:
            return SP
        n = int(m.group(1))
        if n >= NUM_REGS:
            raise AssemblyError(line, f"no register r{n}")
        return n

    def expr(self, text: str, line: int) -> tuple[int, bool]:
        """Evaluate ``a + b - label``; returns (value, mentions_label)."""
        text = text.strip()
        if not text:
            raise AssemblyError(line, "missing operand")
        pos, total, has_label = 0, 0, False
        while pos < len(text):
            m = _TERM_RE.match(text, pos)
            if not m or m.end() == pos:
                raise AssemblyError(line, f"bad expression {text!r}")
            sign = -1 if m.group(1) == "-" else 1
            if pos and m.group(1) is None:
                raise AssemblyError(line, f"bad expression {text!r}")
            tok = m.group(2)
            if tok[0].isdigit():
                val = int(tok, 0)
            else:
                if tok not in self.labels:
                    raise AssemblyError(line, f"undefined label {tok!r}")
                val, has_label = self.labels[tok], True
            total += sign * val
            pos = m.end()
        return total, has_label

    def lines(self):
        for n, raw in enumerate(self.source.splitlines(), start=1):
            text = re.split(r"[;#]|//", raw, maxsplit=1)[0].strip()
            labels = []
            while True:
                m = _LABEL_RE.match(text)
                if not m:
                    break
                labels.append(m.group(1))
                text = text[m.end():].strip()
            yield n, labels, text

    def assemble(self) -> ProgramImage:
        # pass 1: label addresses
        addr = 0
        for n, labels, text in self.lines():
            for lab in labels:
                if lab in self.labels:
                    raise AssemblyError(n, f"duplicate label {lab!r}")
                self.labels[lab] = addr
            if not text:
                continue
            head = text.split(None, 1)[0].lower()
            if head == ".org":
                addr = self._org(text, n, addr, resolve=False)
            elif head == ".entry":
                continue
            elif head == ".word" or not head.startswith("."):
                addr += 4
            else:
                raise AssemblyError(n, f"unknown directive {head!r}")

        # pass 2: emit
        words: dict[int, int] = {}
        addr, entry, first_instr = 0, None, None
        for n, labels, text in self.lines():
            if not text:
                continue
            parts = text.split(None, 1)
            head, rest = parts[0], parts[1] if len(parts) > 1 else ""
            low = head.lower()
            if low == ".org":
                addr = self._org(text, n, addr, resolve=True)
                continue
            if low == ".entry":
                entry, _ = self.expr(rest, n)
                continue
            if low == ".word":
                value, _ = self.expr(rest, n)
                if not -(1 << 31) <= value < (1 << 32):
                    raise AssemblyError(n, f".word value {value} exceeds 32 bits")
                words[addr] = value & 0xFFFFFFFF
            else:
                instr = self.instruction(head.upper(), rest, addr, n)
                try:
                    words[addr] = encode_instruction(instr)
                except EncodingError as exc:
                    raise AssemblyError(n, str(exc)) from None
                if first_instr is None:
                    first_instr = addr
            addr += 4
        if not words:
            raise AssemblyError(0, "empty program")
        end = max(words) + 4
        code = b"".join(words.get(a, 0).to_bytes(4, "little") for a in range(0, end, 4))
        if entry is None:
            entry = first_instr if first_instr is not None else 0
        try:
            return ProgramImage(entry=entry, code=code, symbols=dict(self.labels))
        except TimeboundError as exc:
            raise AssemblyError(0, str(exc)) from None

    def _org(self, text: str, line: int, addr: int, resolve: bool) -> int:
        arg = text.split(None, 1)[1] if len(text.split(None, 1)) > 1 else ""
        try:
            new = int(arg.strip(), 0)
        except ValueError:
            raise AssemblyError(line, f"bad .org address {arg!r}") from None
        if new % 4 or new < addr:
            raise AssemblyError(line, ".org must be 4-aligned and move forward")
        return new

    def instruction(self, kind: str, rest: str, addr: int, line: int) -> Instruction:
        if kind not in OPCODES:
            raise AssemblyError(line, f"unknown mnemonic {kind!r}")
        ops = _split_operands(rest)
        f = _FORMAT[kind]
        expected = {"N": 0, "I16": 2, "R": 3, "I12": 3, "B": 3, "J": 1, "JR": 1}[f]
        if f == "I12" and kind != "ADDI":
            expected = 2
        if len(ops) != expected:
            raise AssemblyError(line, f"{kind} takes {expected} operands, got {len(ops)}")
        if f == "N":
            return Instruction(kind, addr=addr)
        if f == "I16":
            return Instruction(kind, rd=self.reg(ops[0], line), imm=self.expr(ops[1], line)[0], addr=addr)
        if f == "R":
            r = [self.reg(o, line) for o in ops]
            return Instruction(kind, rd=r[0], rs1=r[1], rs2=r[2], addr=addr)
        if kind == "ADDI":
            return Instruction(kind, rd=self.reg(ops[0], line), rs1=self.reg(ops[1], line),
                               imm=self.expr(ops[2], line)[0], addr=addr)
        if f == "I12":
            m = _MEM_RE.match(ops[1].replace(" ", ""))
            if not m:
                raise AssemblyError(line, f"expected [reg+imm], got {ops[1]!r}")
            imm = 0
            if m.group(2):
                imm, _ = self.expr(m.group(3), line)
                if m.group(2) == "-":
                    imm = -imm
            return Instruction(kind, rd=self.reg(ops[0], line), rs1=self.reg(m.group(1), line),
                               imm=imm, addr=addr)
        if f == "B":
            value, is_addr = self.expr(ops[2], line)
            if is_addr:
                if value % 4:
                    raise AssemblyError(line, "branch target not 4-aligned")
                value = (value - addr - 4) // 4
            return Instruction(kind, rs1=self.reg(ops[0], line), rs2=self.reg(ops[1], line),
                               imm=value, addr=addr)
        if f == "J":
            return Instruction(kind, imm=self.expr(ops[0], line)[0], addr=addr)
        return Instruction(kind, rs1=self.reg(ops[0], line), addr=addr)


def assemble(source: str) -> ProgramImage:
    """Assemble source text into a program image.

    One instruction or label per line (``name:`` may prefix an instruction);
    ``;``, ``#`` and ``//`` start comments.  Directives: ``.entry <expr>``,
    ``.org <addr>`` (forward only, gap zero-filled) and ``.word <expr>``.
    Branch operands given as a label are converted to instruction offsets; a
    bare number is taken as the raw offset.
    """
    return _Assembler(source).assemble()


def disassemble(image: ProgramImage) -> list[Instruction]:
    return [image.decode_at(a) for a in range(image.load_address, image.end, 4)]
