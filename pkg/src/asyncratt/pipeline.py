"""Source to checked core program: parse, elaborate (with the prelude) and typecheck."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import InputContext, Term
from .surface.elaborate import CoreProgram, elaborate
from .surface.parser import parse
from .typecheck import check_reactive_program


@dataclass(frozen=True)
class Compiled:
    core: CoreProgram

    @property
    def delta(self) -> InputContext:
        return self.core.inputs

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.core.outputs)

    @property
    def term(self) -> Term:
        return self.core.term()


def compile_source(text: str, prelude: bool = True, inputs: Optional[InputContext] = None) -> Compiled:
    """Parse, elaborate and typecheck a program; raises the first diagnostic."""
    from .stdlib import prelude_defs

    program = parse(text)
    core = elaborate(program, prelude_defs() if prelude else (), inputs)
    check_reactive_program(core)
    return Compiled(core)


def compile_example(name: str) -> Compiled:
    from .stdlib import example_source

    return compile_source(example_source(name))
