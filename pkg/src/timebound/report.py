"""Text report and Graphviz DOT output."""

from __future__ import annotations

from .analysis import AnalysisResult
from .cfg import Function


def _h(a: int) -> str:
    return f"0x{a:x}"


def format_report(res: AnalysisResult) -> str:
    lines = ["# timebound analysis report", f"ENTRY {_h(res.program.entry)}"]
    program = res.program
    if res.wcet is not None:
        lines.append(f"WCET GLOBAL {res.wcet.global_wcet}")
        for f in sorted(res.wcet.function_wcet):
            lines.append(f"WCET FUNC {_h(f)} {res.wcet.function_wcet[f]}")
    if res.stack is not None:
        for f in sorted(res.stack.total_depth):
            lines.append(f"STACK {_h(f)} local={res.stack.local_depth[f]} "
                         f"total={res.stack.total_depth[f]}")
        chain = " -> ".join(_h(f) for f in res.stack.witness)
        lines.append(f"STACK GLOBAL {res.stack.global_bound} via {chain}")
    for h in sorted(res.bounds):
        lb = res.bounds[h]
        lines.append(f"LOOP {_h(h)} bound={lb.bound} {lb.source}")
    if res.wcet is not None:
        for b in sorted(program.blocks):
            blk = program.blocks[b]
            if blk.function in res.wcet.status and res.wcet.status[blk.function] == "annotated":
                continue
            lines.append(f"BLOCK {_h(blk.function)} {_h(b)} t={res.times[b].wcet_cycles} "
                         f"x={res.wcet.block_counts.get(b, 0)}")
    if res.cache is not None:
        cls = res.cache.classification
        for addr, kind in sorted(cls):
            lines.append(f"CACHE {_h(addr)} {kind} {cls[(addr, kind)]}")
        s = res.cache.summary()
        lines.append(f"CACHE SUMMARY AH={s['AH']} AM={s['AM']} NC={s['NC']}")
    for e in sorted(res.values.infeasible):
        if res.values.reachable(e.src):
            lines.append(f"INFEASIBLE {_h(e.src)} -> {_h(e.dst)} {e.kind}")
    for w in res.warnings:
        lines.append(f"WARNING {w}")
    return "\n".join(lines) + "\n"


def emit_dot(f: Function, times, counts, infeasible, edge_counts=None) -> str:
    """One digraph per function; worst-case path edges red, infeasible dotted."""
    edge_counts = edge_counts or {}
    out = [f'digraph "{_h(f.entry)}" {{', '  node [shape=box, fontname="monospace"];']
    for b in sorted(f.blocks):
        blk = f.blocks[b]
        t = times[b].wcet_cycles if b in times else "?"
        label = f"{_h(blk.start)}-{_h(blk.end)}\\nt={t} x={counts.get(b, 0)}"
        out.append(f'  "{_h(b)}" [label="{label}"];')
    for e in sorted(f.edges):
        attrs = [f'label="{e.kind}"']
        if edge_counts.get(e, 0) > 0:
            attrs.append("color=red")
        if e in infeasible:
            attrs.append("style=dotted")
        out.append(f'  "{_h(e.src)}" -> "{_h(e.dst)}" [{", ".join(attrs)}];')
    out.append("}")
    return "\n".join(out) + "\n"


def dot_files(res: AnalysisResult) -> dict[str, str]:
    """File name -> DOT text, one per analysed function."""
    files = {}
    counts = res.wcet.block_counts if res.wcet else {}
    edges = res.wcet.edge_counts if res.wcet else {}
    for fa in sorted(res.program.functions):
        files[f"{_h(fa)}.dot"] = emit_dot(res.program.functions[fa], res.times, counts,
                                          res.values.infeasible, edges)
    return files
