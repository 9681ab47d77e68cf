"""Named (program, triggering input) pairs shipped with the package."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .ir import ToyProgram, parse_program


@dataclass(frozen=True)
class Fixture:
    name: str
    program: ToyProgram
    inputs: dict[str, int]
    source_file: str

    @property
    def input_bits(self) -> int:
        return sum(w for _, w in self.program.inputs)


@lru_cache(maxsize=1)
def builtin_fixtures() -> dict[str, Fixture]:
    out: dict[str, Fixture] = {}
    root = resources.files(__package__) / "fixtures"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".toy"):
            continue
        program = parse_program(entry.read_text(encoding="utf-8"))
        for trig in program.triggers:
            if trig.name in out:
                raise ValueError(f"duplicate fixture name {trig.name!r}")
            out[trig.name] = Fixture(trig.name, program, dict(trig.inputs), entry.name)
    return out


def get_fixture(name: str) -> Fixture:
    fixtures = builtin_fixtures()
    try:
        return fixtures[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(fixtures))}") from None
