"""The combinator prelude and example programs, shipped as surface-language sources."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..core import InputContext
from ..surface.elaborate import CoreDef, Elaborator, elaborate_template
from ..surface.parser import parse
from ..surface.syntax import TopDef
from ..typecheck import check_definition

COMBINATORS = (
    "map",
    "scan",
    "sum",
    "sigAwait",
    "scanAwait",
    "count",
    "const",
    "interleave",
    "zip",
    "switch",
    "switchf",
    "toggleSig",
    "sig",
    "integral",
    "derivative",
)


@dataclass(frozen=True)
class PreludeEntry:
    name: str
    source: str
    scheme: str
    stable: tuple[str, ...]
    channels: tuple[str, ...]


def _read(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def prelude_source() -> str:
    return _read("prelude.ratt")


@lru_cache(maxsize=None)
def prelude_defs() -> tuple[TopDef, ...]:
    return parse(prelude_source()).defs


def manifest() -> list[PreludeEntry]:
    """One entry per prelude definition, with its source text and declared scheme."""
    from ..pretty import show_type

    lines = prelude_source().splitlines()
    defs = prelude_defs()
    starts = [d.pos[0] for d in defs] + [len(lines) + 1]
    out = []
    for d, start, end in zip(defs, starts, starts[1:]):
        text = "\n".join(lines[start - 1 : end - 1]).strip()
        out.append(
            PreludeEntry(
                d.name,
                text,
                show_type(d.signature.type),
                tuple(d.signature.stable),
                tuple(p.name for p in d.chan_params),
            )
        )
    return out


def load_prelude() -> dict[str, CoreDef]:
    """Elaborate and typecheck every prelude definition.

    Channel-indexed definitions are instantiated at a generic channel named
    after their parameter.  Raises on the first definition that fails.
    """
    defs = prelude_defs()
    out: dict[str, CoreDef] = {}
    plain = Elaborator(InputContext(), tuple(d for d in defs if not d.is_template))
    for d in defs:
        if not d.is_template:
            plain.define(d.name)
    for i, cd in enumerate(plain.order):
        check_definition(InputContext(), cd, plain.order[:i])
        out[cd.name] = cd
    for d in defs:
        if d.is_template:
            delta, order = elaborate_template(d, defs)
            for i, cd in enumerate(order):
                check_definition(delta, cd, order[:i])
            out[d.name] = order[-1]
    return out


EXAMPLES = ("field1", "gui", "two_counter", "calculus", "running_sum")


def example_source(name: str) -> str:
    return _read(f"examples/{name}.ratt")


def example_path(name: str):
    return resources.files(__name__).joinpath(f"examples/{name}.ratt")


__all__ = [
    "COMBINATORS",
    "EXAMPLES",
    "PreludeEntry",
    "example_path",
    "example_source",
    "load_prelude",
    "manifest",
    "prelude_defs",
    "prelude_source",
]
