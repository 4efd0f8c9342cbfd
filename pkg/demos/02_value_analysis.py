"""
Interval value analysis
=======================

Register ranges at every program point, branch refinement and an edge that
the analysis proves can never be taken.
"""

from timebound import assemble
from timebound.cfg import build_cfg
from timebound.value import analyze

source = """
        MOVI r2, 10
        BLT  r1, r2, small      ; r1 comes from the input range below
        MOVI r3, 1
        JMP  out
small:  ADD  r3, r1, r1
        MOVI r4, 100
        BGE  r3, r4, out        ; r3 <= 18 here, so this is never taken
        MOVI r5, 5
out:    HALT
"""
program = build_cfg(assemble(source))
vr = analyze(program, inputs={1: (0, 40)})

for addr in sorted(a for a in vr.before):
    s = vr.state_before(addr)
    if not s.is_bottom:
        print(f"before 0x{addr:02x}: r1={s.reg(1)} r3={s.reg(3)}")

for e in sorted(vr.infeasible):
    print("infeasible edge:", e)
