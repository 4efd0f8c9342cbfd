import pytest
from hypothesis import given, strategies as st

from timebound.errors import AssemblyError, DecodeError, EncodingError, TimeboundError
from timebound.isa import (ALU_KINDS, BRANCH_KINDS, Instruction, ProgramImage, assemble,
                           decode_instruction, disassemble, encode_instruction)


def test_encode_examples():
    assert encode_instruction(Instruction("ADD", rd=1, rs1=2, rs2=3)) == 0x02123000
    assert encode_instruction(Instruction("MOVI", rd=1, imm=5)) == 0x01100005
    assert encode_instruction(Instruction("HALT")) == 0


def test_decode_examples():
    i = decode_instruction(0x02123000, 0x10)
    assert (i.kind, i.rd, i.rs1, i.rs2, i.addr) == ("ADD", 1, 2, 3, 0x10)
    b = decode_instruction(0x20012002, 0)
    assert (b.kind, b.rs1, b.rs2, b.imm, b.target) == ("BEQ", 1, 2, 2, 0x0C)
    with pytest.raises(DecodeError) as exc:
        decode_instruction(0xFF000000, 0x8)
    assert exc.value.addr == 0x8


def test_jump_targets_aligned():
    with pytest.raises(DecodeError):
        decode_instruction(0x30000002, 0)


def test_unused_fields_must_be_zero():
    # HALT with a stray register field
    with pytest.raises(DecodeError):
        decode_instruction(0x00100000, 0)


def test_immediate_range():
    with pytest.raises(EncodingError):
        encode_instruction(Instruction("MOVI", rd=1, imm=99999))
    with pytest.raises(EncodingError):
        encode_instruction(Instruction("ADDI", rd=1, rs1=1, imm=2048))


def test_assemble_examples():
    img = assemble("MOVI r1,5\nHALT")
    assert img.words == [0x01100005, 0x00000000] and img.entry == 0
    assert assemble("loop: JMP loop").words == [0x30000000]
    with pytest.raises(AssemblyError) as exc:
        assemble("MOVI r1,99999")
    assert exc.value.line == 1


@pytest.mark.parametrize("src, line", [
    ("NOP", 1), ("HALT\nJMP nowhere", 2), ("ADD r1, r2", 1), ("a: HALT\na: HALT", 2),
    ("MOVI r16, 1", 1), (".bogus 1", 1),
])
def test_assembly_errors_carry_line(src, line):
    with pytest.raises(AssemblyError) as exc:
        assemble(src)
    assert exc.value.line == line


def test_branch_labels_become_offsets():
    img = assemble("BEQ r1, r2, end\nMOVI r1, 1\nMOVI r1, 2\nend: HALT")
    assert img.decode_at(0).imm == 2 and img.decode_at(0).target == 12
    # bare numbers are raw offsets
    assert assemble("BNE r1, r2, -1\nHALT").decode_at(0).target == 0


def test_directives_and_symbols():
    img = assemble(".entry start\n.word 0xdeadbeef\nstart: HALT\n.org 0x10\n.word -1")
    assert img.entry == 4
    assert img.word_at(0) == 0xDEADBEEF and img.word_at(0x10) == 0xFFFFFFFF
    assert img.word_at(8) == 0 and img.symbols["start"] == 4


def test_memory_operands_and_sp_alias():
    img = assemble("LD r1, [sp+8]\nST r2, [r3-4]\nLD r4, [r5]\nHALT")
    a, b, c = (img.decode_at(x) for x in (0, 4, 8))
    assert (a.rs1, a.imm) == (15, 8) and (b.rs1, b.imm) == (3, -4) and c.imm == 0


def test_binary_roundtrip(tmp_path):
    img = assemble("MOVI r1, 5\nCALL f\nHALT\nf: RET")
    p = tmp_path / "prog.bin"
    img.save(p)
    raw = p.read_bytes()
    assert raw[:4] == b"TWCA"
    back = ProgramImage.load(p)
    assert back == img and back.entry == img.entry


def test_bad_binary():
    with pytest.raises(TimeboundError):
        ProgramImage.from_bytes(b"XXXX" + bytes(8))
    with pytest.raises(TimeboundError):
        ProgramImage.from_bytes(b"TWCA" + (0).to_bytes(4, "little") + (3).to_bytes(4, "little") + b"abc")


def test_disassemble_text():
    img = assemble("ADDI sp, sp, -16\nHALT")
    assert [str(i) for i in disassemble(img)][1] == "HALT"


regs = st.integers(0, 15)


@st.composite
def instructions(draw):
    kind = draw(st.sampled_from(sorted(set(ALU_KINDS | BRANCH_KINDS |
                                           {"HALT", "MOVI", "ADDI", "LD", "ST", "JMP", "CALL", "RET", "JR"}))))
    if kind in ALU_KINDS:
        return Instruction(kind, rd=draw(regs), rs1=draw(regs), rs2=draw(regs))
    if kind in BRANCH_KINDS:
        return Instruction(kind, rs1=draw(regs), rs2=draw(regs), imm=draw(st.integers(-2048, 2047)))
    if kind == "MOVI":
        return Instruction(kind, rd=draw(regs), imm=draw(st.integers(-32768, 32767)))
    if kind in ("ADDI", "LD", "ST"):
        return Instruction(kind, rd=draw(regs), rs1=draw(regs), imm=draw(st.integers(-2048, 2047)))
    if kind in ("JMP", "CALL"):
        return Instruction(kind, imm=4 * draw(st.integers(0, (1 << 22) - 1)))
    if kind == "JR":
        return Instruction(kind, rs1=draw(regs))
    return Instruction(kind)


@given(instructions())
def test_decode_inverts_encode(instr):
    word = encode_instruction(instr)
    assert 0 <= word < 1 << 32
    assert decode_instruction(word, 0) == instr


@given(st.integers(0, (1 << 32) - 1))
def test_decode_total(word):
    # every word either decodes to something that re-encodes identically, or is rejected
    try:
        instr = decode_instruction(word, 0)
    except DecodeError:
        return
    assert encode_instruction(instr) == word
