"""
Stack depth
===========

The value of the stack pointer at each point gives per-function depths,
which compose over the call graph.
"""

from timebound.analysis import run_phases
from timebound.corpus import load_corpus
from timebound.sim import run

fx = load_corpus()["deepstack"]
print(fx.source)
res = run_phases(fx.image, fx.annotations, mode="stack")
st = res.stack
for f in sorted(st.total_depth):
    print(f"function 0x{f:02x}: local {st.local_depth[f]:3d}  with callees {st.total_depth[f]:3d}")
print("global bound:", st.global_bound, "via", " -> ".join(f"0x{f:x}" for f in st.witness))
print("simulated:   ", run(fx.image).max_stack_depth)
