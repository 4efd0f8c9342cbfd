"""Fixture programs shipped with the package.

Each fixture is ``<name>.s`` (source), ``<name>.ann`` (annotations, may be
empty) and ``<name>.props`` (one property tag per line saying which
end-to-end checks apply, for example ``single_path`` or ``fixed_calls``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .annotations import Annotations, parse_annotations
from .errors import TimeboundError
from .isa import ProgramImage, assemble
from .sim import MAX_DOMAIN

CORPUS_DIR = Path(__file__).parent / "corpus"


@dataclass
class Fixture:
    name: str
    source: str
    annotation_text: str
    annotations: Annotations
    image: ProgramImage
    props: frozenset[str] = field(default_factory=frozenset)

    @property
    def input_domain(self) -> dict[int, tuple[int, int]]:
        return dict(self.annotations.inputs)

    @property
    def domain_size(self) -> int:
        n = 1
        for lo, hi in self.annotations.inputs.values():
            n *= hi - lo + 1
        return n


def load_fixture(path: Path) -> Fixture:
    name = path.stem
    source = path.read_text()
    ann_path, props_path = path.with_suffix(".ann"), path.with_suffix(".props")
    ann_text = ann_path.read_text() if ann_path.exists() else ""
    props = props_path.read_text().split() if props_path.exists() else []
    try:
        image = assemble(source)
        ann = parse_annotations(ann_text)
    except TimeboundError as exc:
        raise TimeboundError(f"fixture {name}: {exc}") from None
    fx = Fixture(name, source, ann_text, ann, image, frozenset(props))
    if fx.domain_size > MAX_DOMAIN:
        raise TimeboundError(f"fixture {name}: input domain too large for exhaustive runs")
    return fx


def load_corpus(directory: str | Path | None = None) -> dict[str, Fixture]:
    """Load every ``*.s`` fixture in ``directory`` (the bundled corpus by default)."""
    d = Path(directory) if directory is not None else CORPUS_DIR
    return {p.stem: load_fixture(p) for p in sorted(d.glob("*.s"))}
