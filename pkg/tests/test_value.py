from timebound.cfg import build_cfg
from timebound.interval import TOP, Interval
from timebound.isa import Instruction, assemble
from timebound.machine import MachineConfig
from timebound.sim import exhaustive_run
from timebound.value import AbstractStore, analyze, join, refine_branch, transfer, widen

M = MachineConfig()
I = Interval


def top():
    return AbstractStore.top(M.stack_init)


def test_movi_and_addi():
    s, _ = transfer(Instruction("MOVI", rd=1, imm=5), top(), M)
    assert s.reg(1) == I(5, 5)
    s, _ = transfer(Instruction("ADDI", rd=15, rs1=15, imm=-16), top(), M)
    assert s.reg(15) == I(0xFEF0, 0xFEF0)


def test_weak_store_invalidation():
    s = top()
    for a in (0x100, 0x104, 0x108, 0x10C, 0x200):
        s = s.with_cell(a, I(1, 1))
    s = s.with_reg(1, I(0x100, 0x10C))
    s2, acc = transfer(Instruction("ST", rd=2, rs1=1, imm=0), s, M)
    assert all(s2.cell(a).is_top for a in (0x100, 0x104, 0x108, 0x10C))
    assert s2.cell(0x200) == I(1, 1)
    assert acc.interval == I(0x100, 0x10C)


def test_strong_store_then_load():
    s = top().with_reg(1, I(0x100, 0x100)).with_reg(2, I(7, 9))
    s, _ = transfer(Instruction("ST", rd=2, rs1=1, imm=4), s, M)
    s, _ = transfer(Instruction("LD", rd=3, rs1=1, imm=4), s, M)
    assert s.reg(3) == I(7, 9)


def test_call_pushes_return_address():
    s, acc = transfer(Instruction("CALL", imm=0x40, addr=0x10), top(), M)
    assert s.reg(15) == I(0xFEFC, 0xFEFC) and s.cell(0xFEFC) == I(0x14, 0x14)
    s, _ = transfer(Instruction("RET"), s, M)
    assert s.reg(15) == I(0xFF00, 0xFF00)


def test_always_trapping_access_is_bottom():
    s = top().with_reg(1, I(1, 3))
    s2, _ = transfer(Instruction("LD", rd=2, rs1=1, imm=0), s, M)
    assert s2.is_bottom


def test_branch_refinement():
    s = top().with_reg(1, I(0, 10)).with_reg(2, I(5, 5))
    t, nt = refine_branch(Instruction("BLT", rs1=1, rs2=2), s)
    assert t.reg(1) == I(0, 4) and nt.reg(1) == I(5, 10)
    s = top().with_reg(1, I(0, 3)).with_reg(2, I(10, 10))
    t, nt = refine_branch(Instruction("BGE", rs1=1, rs2=2), s)
    assert t.is_bottom and not nt.is_bottom
    s = top().with_reg(1, I(7, 7)).with_reg(2, I(7, 7))
    t, nt = refine_branch(Instruction("BEQ", rs1=1, rs2=2), s)
    assert nt.is_bottom and not t.is_bottom
    s = top().with_reg(1, I(0, 7)).with_reg(2, I(7, 7))
    t, nt = refine_branch(Instruction("BNE", rs1=1, rs2=2), s)
    assert t.reg(1) == I(0, 6) and nt.reg(1) == I(7, 7)


def test_join_and_widen():
    a = top().with_reg(1, I(0, 1)).with_cell(0x100, I(1, 1))
    b = top().with_reg(1, I(5, 6))
    j = join(a, b)
    assert j.reg(1) == I(0, 6) and j.cell(0x100).is_top
    assert join(AbstractStore.bottom(), b) == b
    w = widen(top().with_reg(1, I(0, 1)), top().with_reg(1, I(0, 2)))
    assert w.reg(1) == I(0, 255)
    assert widen(a, a) == a


def test_loop_exit_value():
    img = assemble("MOVI r1, 0\nMOVI r2, 10\nl: BGE r1, r2, out\nADDI r1, r1, 1\nJMP l\nout: HALT")
    vr = analyze(build_cfg(img), M)
    assert vr.state_before(0x14).reg(1) == I(10, 10)
    ex = exhaustive_run(img)
    assert ex.observations[(0x14, 1)] == {10}


def test_constant_branch_infeasible():
    img = assemble("MOVI r1, 3\nMOVI r2, 5\nBLT r1, r2, a\nMOVI r3, 1\na: HALT")
    p = build_cfg(img)
    vr = analyze(p, M)
    # the branch edge, plus everything downstream of the dead block
    assert sorted((e.src, e.kind) for e in vr.infeasible) == [(0, "not-taken"), (12, "fallthrough")]
    assert vr.reachable(0) and not vr.reachable(12)


def test_inputs_seed_registers():
    img = assemble("ADD r2, r1, r1\nHALT")
    vr = analyze(build_cfg(img), M, inputs={1: (0, 10)})
    assert vr.state_before(4).reg(2) == I(0, 20)
    assert vr.state_before(0).reg(3) == TOP


def test_callee_sees_join_of_call_sites():
    img = assemble("MOVI r1, 1\nCALL f\nMOVI r1, 9\nCALL f\nHALT\nf: ADD r2, r1, r1\nRET")
    p = build_cfg(img)
    vr = analyze(p, M)
    assert vr.state_before(0x14).reg(1) == I(1, 9)
    assert vr.state_before(0x8).reg(15) == I(0xFF00, 0xFF00)
