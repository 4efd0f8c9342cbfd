"""
Bounds against exhaustive simulation
====================================

Every corpus fixture is analysed and then run on every input in its
declared domain.  The bound must never be below the observed maximum.
"""

from timebound.analysis import run_phases
from timebound.corpus import load_corpus
from timebound.sim import exhaustive_run

print(f"{'fixture':14s} {'runs':>5s} {'observed':>9s} {'bound':>6s} {'ratio':>6s} {'stack':>6s}")
for name, fx in load_corpus().items():
    res = run_phases(fx.image, fx.annotations)
    ex = exhaustive_run(fx.image, res.mcfg, fx.input_domain)
    ratio = res.wcet.global_wcet / ex.max_cycles
    print(f"{name:14s} {ex.runs:5d} {ex.max_cycles:9d} {res.wcet.global_wcet:6d} {ratio:6.2f} "
          f"{ex.max_stack_depth:3d}/{res.stack.global_bound}")
