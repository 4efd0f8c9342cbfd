"""
Must/may cache classification
=============================

Every instruction fetch and data access gets AH (always hit), AM (always
miss) or NC (not classified).  The simulator's access log agrees on every
AH and AM.
"""

from timebound import assemble
from timebound.cache import classify
from timebound.cfg import build_cfg
from timebound.machine import MachineConfig
from timebound.sim import exhaustive_run
from timebound.value import analyze

source = """
        MOVI r1, 0x1000
        ST   r2, [r1+0]         ; cold line: always miss
        LD   r3, [r1+4]         ; same line: always hit
        MOVI r6, 2
        SHL  r7, r5, r6
        MOVI r8, 0x2000
        ADD  r7, r7, r8         ; 0x2000 + 4 * r5 spans two lines
        LD   r4, [r7+0]         ; so this one is not classified
        HALT
"""
image = assemble(source)
inputs = {5: (0, 7)}
mcfg = MachineConfig()
program = build_cfg(image)
vr = analyze(program, mcfg, inputs)
cls = classify(program, vr, mcfg.icache, mcfg.dcache).classification

observed = exhaustive_run(image, mcfg, inputs).access_classes
for key in sorted(cls):
    print(f"0x{key[0]:02x} {key[1]}  {cls[key]:2s}  observed: {observed.get(key, '-')}")
