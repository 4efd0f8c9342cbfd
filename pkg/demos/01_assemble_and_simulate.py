"""
Assembling and simulating a program
===================================

Assemble a short program, look at its encoding, and run it on the
cycle-accurate simulator with cold caches.
"""

from timebound import assemble, disassemble, run

source = """
        MOVI r1, 6
        MOVI r2, 7
        MUL  r3, r1, r2
        HALT
"""
image = assemble(source)
for instr in disassemble(image):
    print(f"0x{instr.addr:02x}  {image.word_at(instr.addr):08x}  {instr}")

# The first fetch misses the instruction cache (1 + 10 cycles); the rest of
# the line then hits, and the MUL takes 3 cycles in the execute stage.
dump = []
trace = run(image, dump=dump)
print("\n".join(dump))
print("total cycles:", trace.total_cycles, " r3 =", sorted(trace.observations[(12, 3)]))
