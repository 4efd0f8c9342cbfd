"""
Annotated control-flow graphs
=============================

Write one Graphviz file per function.  Worst-case edges are red and
infeasible edges dotted; render with ``dot -Tsvg 0x0.dot``.
"""

import sys
from pathlib import Path

from timebound.analysis import run_phases
from timebound.corpus import load_corpus
from timebound.report import dot_files, format_report

fx = load_corpus()["always_true"]
res = run_phases(fx.image, fx.annotations)
print(format_report(res))

out = Path(sys.argv[1] if len(sys.argv) > 1 else "dot_out")
out.mkdir(exist_ok=True)
for name, text in dot_files(res).items():
    (out / name).write_text(text)
    print(f"--- {out / name}")
    print(text)
