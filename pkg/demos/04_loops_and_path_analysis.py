"""
Loop bounds and implicit path enumeration
=========================================

A counted loop gets its bound from the value analysis; the integer linear
program then picks the worst-case execution counts for every block.
"""

from timebound import assemble, exhaustive_run
from timebound.analysis import run_phases
from timebound.annotations import Annotations

source = """
        MOVI r2, 0
loop:   BGE  r2, r1, done       ; runs r1 times, r1 in [0, 12]
        MUL  r3, r3, r2
        ADDI r2, r2, 1
        JMP  loop
done:   HALT
"""
image = assemble(source)
ann = Annotations(inputs={1: (0, 12)})
res = run_phases(image, ann)

for h, lb in res.bounds.items():
    print(f"loop at 0x{h:x}: header runs at most {lb.bound} times per entry ({lb.source})")
for b, n in sorted(res.wcet.block_counts.items()):
    print(f"block 0x{b:02x}: t={res.times[b].wcet_cycles:3d}  x={n}")

print("\nILP model:")
print(res.wcet.models[res.program.entry].dump())

ex = exhaustive_run(image, res.mcfg, ann.inputs)
print(f"WCET bound {res.wcet.global_wcet}, worst observed {ex.max_cycles} at {ex.worst_inputs}")
