import pytest

from timebound.analysis import run_phases
from timebound.annotations import Annotations, parse_annotations
from timebound.cfg import build_cfg
from timebound.cli import main
from timebound.corpus import CORPUS_DIR
from timebound.errors import AnnotationError
from timebound.isa import assemble
from timebound.machine import CacheConfig
from timebound.report import emit_dot, format_report
from timebound.sim import run
from timebound.timing import BlockTime


def test_annotation_examples():
    a = parse_annotations("loopbound 0x40 16\ninput r1 0 255\nicache 16 2 16 10  # comment\n")
    assert a.loop_bounds == {0x40: 16} and a.inputs == {1: (0, 255)}
    assert a.icache == CacheConfig(16, 2, 16, 10)


def test_annotation_machine_config():
    a = parse_annotations("stack_init 0x8000\npenalty_i 3\npenalty_d 7\ndcache 4 1 32 20\nentry 0x10\ncallee_bound 0x20 99")
    m = a.machine_config()
    assert (m.stack_init, m.p_i, m.p_d, m.dcache.sets, m.dcache.line) == (0x8000, 3, 7, 4, 32)
    assert a.entry == 0x10 and a.callee_bounds == {0x20: 99}


@pytest.mark.parametrize("text", [
    "bogus 1", "input r1 0", "input r15 0 1", "input r1 5 1", "loopbound 0x41 3",
    "loopbound 0x40 1\nloopbound 0x40 2", "icache 3 2 16 10", "penalty_i -1", "entry zero",
])
def test_annotation_errors(text):
    with pytest.raises(AnnotationError):
        parse_annotations(text)


def _src(tmp_path, text, name="p.s"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_analyze_straightline(tmp_path, capsys):
    src = str(CORPUS_DIR / "straightline.s")
    out = tmp_path / "out.txt"
    assert main(["analyze", src, "--report", str(out)]) == 0
    report = out.read_text()
    expected = run(assemble((CORPUS_DIR / "straightline.s").read_text())).total_cycles
    assert f"WCET GLOBAL {expected}\n" in report
    assert "STACK GLOBAL 0" in report


def test_analyze_binary_after_assemble(tmp_path, capsys):
    src = _src(tmp_path, "MOVI r1, 5\nHALT")
    binp = tmp_path / "p.bin"
    assert main(["assemble", src, "-o", str(binp)]) == 0
    assert main(["analyze", str(binp)]) == 0
    assert "WCET GLOBAL 13" in capsys.readouterr().out


def test_missing_loop_bound_exit_2(tmp_path, capsys):
    src = _src(tmp_path, "l: BNE r1, r2, l\nHALT")
    assert main(["analyze", src]) == 2
    assert "unbounded loop at 0x0" in capsys.readouterr().err
    ann = _src(tmp_path, "loopbound 0x0 5\n", "p.ann")
    assert main(["analyze", src, "--annot", ann]) == 0
    out = capsys.readouterr().out
    assert "LOOP 0x0 bound=5 annotated" in out and "WARNING trusted loop bound" in out


def test_stack_only(tmp_path, capsys):
    assert main(["analyze", str(CORPUS_DIR / "deepstack.s"), "--stack-only"]) == 0
    out = capsys.readouterr().out
    assert "STACK GLOBAL 64 via 0x0 -> 0x18 -> 0x3c" in out and "WCET" not in out


def test_wcet_only(tmp_path, capsys):
    assert main(["analyze", str(CORPUS_DIR / "deepstack.s"), "--wcet-only"]) == 0
    out = capsys.readouterr().out
    assert "WCET GLOBAL" in out and "STACK" not in out


def test_usage_and_io_errors(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.bin")]) == 1
    bad = _src(tmp_path, "FROB r1")
    assert main(["analyze", bad]) == 1
    with pytest.raises(SystemExit):
        main(["analyze"])


def test_decode_error_exit_2(tmp_path):
    src = _src(tmp_path, "MOVI r1, 1\n.word 0xff000000")
    assert main(["analyze", src]) == 2


def test_trace_flag(tmp_path, capsys):
    src = _src(tmp_path, "MOVI r1,5\nHALT")
    assert main(["analyze", src, "--trace"]) == 0
    err = capsys.readouterr().err
    assert err.splitlines()[0].startswith("CYCLE 12 ADDR 0x0 MOVI")


def test_dot_files(tmp_path):
    d = tmp_path / "dot"
    assert main(["analyze", str(CORPUS_DIR / "callchain.s"), "--dot", str(d), "--report",
                 str(tmp_path / "r")]) == 0
    assert sorted(p.name for p in d.iterdir()) == ["0x0.dot", "0x18.dot", "0x24.dot", "0xc.dot"]


def test_dot_single_block_label():
    f = build_cfg(assemble("MOVI r1, 1\nHALT")).main
    text = emit_dot(f, {0: BlockTime(0, 3)}, {0: 1}, set())
    assert '[label="0x0-0x4\\nt=3 x=1"]' in text


def test_dot_diamond_and_infeasible():
    img = assemble("MOVI r1, 1\nMOVI r2, 1\nBEQ r1, r2, b\nMOVI r3, 1\nb: MUL r3, r3, r3\nHALT")
    res = run_phases(img, Annotations())
    text = emit_dot(res.program.main, res.times, res.wcet.block_counts, res.values.infeasible,
                    res.wcet.edge_counts)
    lines = [ln for ln in text.splitlines() if "->" in ln]
    red = [ln for ln in lines if "color=red" in ln]
    dotted = [ln for ln in lines if "style=dotted" in ln]
    assert len(red) == 1 and "taken" in red[0]
    assert any("not-taken" in ln for ln in dotted)


def test_dot_heavier_branch_red():
    img = assemble("BEQ r1, r2, b\nMOVI r3, 1\nJMP d\nb: MUL r3, r3, r3\nMUL r3, r3, r3\nMUL r3, r3, r3\nd: HALT")
    res = run_phases(img, Annotations())
    text = emit_dot(res.program.main, res.times, res.wcet.block_counts, res.values.infeasible,
                    res.wcet.edge_counts)
    red = sorted(ln.split("[")[0].strip() for ln in text.splitlines() if "color=red" in ln)
    assert red == ['"0x0" -> "0xc"', '"0xc" -> "0x18"']


def test_report_uses_wcet_result():
    res = run_phases(assemble((CORPUS_DIR / "diamond.s").read_text()),
                     parse_annotations((CORPUS_DIR / "diamond.ann").read_text()))
    text = format_report(res)
    assert f"WCET GLOBAL {res.wcet.global_wcet}\n" in text
    assert format_report(res) == text
