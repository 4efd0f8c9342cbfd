"""``timebound`` command line.

    timebound analyze <bin> [--annot F] [--report F] [--dot DIR]
                      [--wcet-only | --stack-only] [--trace]
    timebound assemble <src.s> -o <bin>

Exit status: 0 on success, 2 when the analysis refuses to give a bound,
1 on usage and I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import run_phases
from .annotations import Annotations, parse_annotations
from .errors import AnalysisError, DecodeError, TimeboundError, TrapError
from .isa import ProgramImage, assemble
from .report import dot_files, format_report
from .sim import run


def _load_image(path: str) -> ProgramImage:
    p = Path(path)
    if p.suffix in (".s", ".asm"):
        return assemble(p.read_text())
    return ProgramImage.load(p)


def _analyze(args) -> int:
    image = _load_image(args.binary)
    ann = parse_annotations(Path(args.annot).read_text()) if args.annot else Annotations()
    mode = "wcet" if args.wcet_only else "stack" if args.stack_only else "full"
    res = run_phases(image, ann, mode=mode)
    report = format_report(res)
    if args.report:
        Path(args.report).write_text(report)
    else:
        sys.stdout.write(report)
    if args.dot and mode != "stack":
        d = Path(args.dot)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in dot_files(res).items():
            (d / name).write_text(text)
    if args.trace:
        dump: list[str] = []
        inputs = {r: lo for r, (lo, _) in ann.inputs.items()}
        try:
            run(image, res.mcfg, inputs, observe=False, dump=dump)
        except TrapError as exc:
            dump.append(f"TRAP {exc}")
        sys.stderr.write("\n".join(dump) + "\n")
    return 0


def _assemble(args) -> int:
    image = assemble(Path(args.source).read_text())
    image.save(args.output)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="timebound", description="WCET and stack bounds")
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="analyse a TWCA binary (or .s source)")
    a.add_argument("binary")
    a.add_argument("--annot", help="annotation file")
    a.add_argument("--report", help="write the report here instead of stdout")
    a.add_argument("--dot", metavar="DIR", help="write <func-addr>.dot files here")
    mode = a.add_mutually_exclusive_group()
    mode.add_argument("--wcet-only", action="store_true")
    mode.add_argument("--stack-only", action="store_true")
    a.add_argument("--trace", action="store_true",
                   help="dump a simulator trace (inputs at their lower bounds) to stderr")
    s = sub.add_parser("assemble", help="assemble source into a TWCA binary")
    s.add_argument("source")
    s.add_argument("-o", "--output", required=True)
    args = parser.parse_args(argv)
    try:
        return _analyze(args) if args.command == "analyze" else _assemble(args)
    except (AnalysisError, DecodeError) as exc:
        print(f"timebound: analysis refused: {exc}", file=sys.stderr)
        return 2
    except (TimeboundError, OSError) as exc:
        print(f"timebound: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
