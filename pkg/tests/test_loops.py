import pytest
from hypothesis import assume, given, settings, strategies as st

from timebound.analysis import reconstruct
from timebound.annotations import Annotations
from timebound.cfg import build_cfg
from timebound.errors import AnalysisError
from timebound.isa import assemble
from timebound.loops import derive_loop_bound, loop_bounds, resolve_bounds
from timebound.machine import MachineConfig
from timebound.sim import input_combinations, run
from timebound.value import analyze

M = MachineConfig()


def header_counts(image, program, inputs):
    """Max header executions per loop entry over one concrete run."""
    trace = run(image, M, inputs, observe=False, record_path=True)
    best, current, prev = {}, {}, None
    loops = {lp.header: lp for f in program.functions.values() for lp in f.loops}
    for pc in trace.path:
        if pc in loops:
            lp = loops[pc]
            inside = prev is not None and program.contains(prev) and program.block_of(prev).start in lp.body
            current[pc] = current.get(pc, 0) + 1 if inside else 1
            best[pc] = max(best.get(pc, 0), current[pc])
        prev = pc
    return best


def derived(src, inputs=None):
    img = assemble(src)
    p = build_cfg(img)
    vr = analyze(p, M, inputs)
    f = p.main
    return {lp.header: derive_loop_bound(lp, f, vr, p) for lp in f.loops}, img, p


UP = "MOVI r1, 0\nMOVI r2, 10\nl: BGE r1, r2, d\nADDI r1, r1, {c}\nJMP l\nd: HALT"


def test_step_one():
    # ten body iterations plus the final exit test: the header runs 11 times
    b, img, p = derived(UP.format(c=1))
    assert b == {8: 11}
    assert header_counts(img, p, {}) == {8: 11}


def test_step_three():
    # r = 0, 3, 6, 9 enter the body; the test at r = 12 exits
    b, img, p = derived(UP.format(c=3))
    assert b == {8: 5}
    assert header_counts(img, p, {}) == {8: 5}


def test_two_writers_no_bound():
    src = "MOVI r1, 0\nMOVI r2, 10\nl: BGE r1, r2, d\nADDI r1, r1, 1\nADDI r1, r1, 1\nJMP l\nd: HALT"
    assert derived(src)[0] == {8: None}


def test_beq_exit_divisibility():
    src = "MOVI r1, 0\nMOVI r2, 12\nl: BEQ r1, r2, d\nADDI r1, r1, 4\nJMP l\nd: HALT"
    assert derived(src)[0] == {8: 4}
    assert derived(src.replace("12", "10"))[0] == {8: None}


def test_bne_exit_not_bounded():
    src = "MOVI r1, 0\nMOVI r2, 12\nl: BNE r1, r2, d\nADDI r1, r1, 4\nJMP l\nd: HALT"
    assert derived(src)[0] == {8: None}


def test_increment_in_header():
    src = "MOVI r1, 0\nMOVI r2, 10\nl: ADDI r1, r1, 1\nBLT r1, r2, l\nHALT"
    b, img, p = derived(src)
    assert b == {8: 10} and header_counts(img, p, {}) == {8: 10}


def test_callee_writing_counter_disqualifies():
    src = "MOVI r1, 0\nMOVI r2, 10\nl: BGE r1, r2, d\nCALL f\nADDI r1, r1, 1\nJMP l\nd: HALT\nf: MOVI r1, 0\nRET"
    img = assemble(src)
    p = build_cfg(img)
    vr = analyze(p, M)
    assert derive_loop_bound(p.main.loops[0], p.main, vr, p) is None


def test_resolve_bounds():
    p = build_cfg(assemble(UP.format(c=1)))
    loops = {lp.header: lp for lp in p.main.loops}
    assert resolve_bounds(loops, {8: 10})[8].bound == 10
    w = []
    r = resolve_bounds(loops, {8: None}, {8: 16}, w)
    assert r[8].bound == 16 and r[8].source == "annotated" and w
    w = []
    assert resolve_bounds(loops, {8: 10}, {8: 16}, w)[8].bound == 16
    assert any("exceeds derived" in x for x in w)
    with pytest.raises(AnalysisError, match="unbounded loop at 0x8"):
        resolve_bounds(loops, {8: None})


def test_bound_soundness_on_corpus(corpus):
    for name, fx in corpus.items():
        program, vr = reconstruct(fx.image, M, fx.annotations)
        bounds = loop_bounds(program, vr, fx.annotations.loop_bounds)
        for inputs in input_combinations(fx.input_domain):
            for h, n in header_counts(fx.image, program, inputs).items():
                assert n <= bounds[h].bound, (name, hex(h), inputs)


@settings(max_examples=150, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 40), st.integers(1, 5), st.booleans(), st.integers(0, 6))
def test_derived_bound_is_tight(init, limit, step, down, spread):
    if down:
        src = (f"MOVI r2, {limit}\nl: BLT r1, r2, d\nADDI r1, r1, {-step}\nJMP l\nd: HALT")
    else:
        src = (f"MOVI r2, {limit}\nl: BGE r1, r2, d\nADDI r1, r1, {step}\nJMP l\nd: HALT")
    domain = {1: (init, init + spread)}
    b, img, p = derived(src, domain)
    bound = b[4]
    assert bound is not None
    worst = max(header_counts(img, p, inp).get(4, 0) for inp in input_combinations(domain))
    assert worst <= bound
    assert worst == bound  # tight: the extreme input attains it
