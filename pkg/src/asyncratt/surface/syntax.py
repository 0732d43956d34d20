"""Surface-language AST. Positions are (line, column) and never take part in equality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..core import ChannelClass, TypeExpr

Pos = Optional[tuple[int, int]]


def _pos():
    return field(default=None, compare=False, repr=False, kw_only=True)


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class SVar(Expr):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class STemplate(Expr):
    """A channel-indexed definition applied to a channel: ``sigAwait @up``."""

    name: str
    channel: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SApp(Expr):
    fun: Expr
    arg: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SLam(Expr):
    params: tuple["Pattern", ...]
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SLet(Expr):
    pattern: "Pattern"
    bound: Expr
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SCase(Expr):
    scrutinee: Expr
    alts: tuple[tuple["Pattern", Expr], ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class SIf(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SFix(Expr):
    binder: str
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SUnit(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class SNat(Expr):
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class SFloat(Expr):
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class SPair(Expr):
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SCons(Expr):
    head: Expr
    tail: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SSeq(Expr):
    first: Expr
    then: Expr
    pos: Pos = _pos()


BINOPS = ("+", "+.", "-.", "*.", "/.", "==.", "<.", "<=.")


@dataclass(frozen=True)
class SBinOp(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = _pos()


# keyword -> number of atom arguments
PRIMS = {
    "suc": 1,
    "inl": 1,
    "inr": 1,
    "fst": 1,
    "snd": 1,
    "adv": 1,
    "unbox": 1,
    "box": 1,
    "out": 1,
    "into": 1,
    "select": 2,
    "Left": 2,
    "Right": 2,
    "Both": 2,
}


@dataclass(frozen=True)
class SPrim(Expr):
    keyword: str
    args: tuple[Expr, ...]
    pos: Pos = _pos()


class SClock:
    __slots__ = ()


@dataclass(frozen=True)
class SClockAtom(SClock):
    """``x`` or ``await k`` inside a delay subscript."""

    value: Expr


@dataclass(frozen=True)
class SClockUnion(SClock):
    left: SClock
    right: SClock


@dataclass(frozen=True)
class SDelay(Expr):
    clock: Optional[SClock]
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SNever(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class SAwait(Expr):
    channel: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SRead(Expr):
    channel: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SRaw(Expr):
    """Display-only text (heap locations, dfix); never produced by the parser."""

    text: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SNatRec(Expr):
    base: Expr
    pred_binder: str
    acc_binder: str
    step: Expr
    n: Expr
    pos: Pos = _pos()


# ---------------------------------------------------------------------------
# Patterns


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(Pattern):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class PWild(Pattern):
    pos: Pos = _pos()


@dataclass(frozen=True)
class PUnit(Pattern):
    pos: Pos = _pos()


@dataclass(frozen=True)
class PPair(Pattern):
    left: Pattern
    right: Pattern
    pos: Pos = _pos()


@dataclass(frozen=True)
class PCons(Pattern):
    head: Pattern
    tail: Pattern
    pos: Pos = _pos()


@dataclass(frozen=True)
class PInj(Pattern):
    index: int
    arg: Pattern
    pos: Pos = _pos()


@dataclass(frozen=True)
class PSelect(Pattern):
    """``Left p q`` / ``Right p q`` / ``Both p q``."""

    tag: str
    left: Pattern
    right: Pattern
    pos: Pos = _pos()


@dataclass(frozen=True)
class PNat(Pattern):
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class PSuc(Pattern):
    arg: Pattern
    pos: Pos = _pos()


def pattern_vars(p: Pattern) -> list[str]:
    match p:
        case PVar(name):
            return [name]
        case PPair(a, b) | PCons(a, b) | PSelect(_, a, b):
            return pattern_vars(a) + pattern_vars(b)
        case PInj(_, a) | PSuc(a):
            return pattern_vars(a)
    return []


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class InputDecl:
    name: str
    cls: ChannelClass
    type: TypeExpr
    pos: Pos = _pos()


@dataclass(frozen=True)
class ChanParam:
    name: str
    cls: Optional[ChannelClass]
    type: TypeExpr


@dataclass(frozen=True)
class Signature:
    stable: tuple[str, ...]
    type: TypeExpr


@dataclass(frozen=True)
class Equation:
    chan_args: tuple[str, ...]
    patterns: tuple[Pattern, ...]
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class TopDef:
    name: str
    chan_params: tuple[ChanParam, ...]
    signature: Signature
    equations: tuple[Equation, ...]
    pos: Pos = _pos()

    @property
    def arity(self) -> int:
        return len(self.equations[0].patterns) if self.equations else 0

    @property
    def is_template(self) -> bool:
        return bool(self.chan_params)


@dataclass(frozen=True)
class OutputDecl:
    name: str
    type: TypeExpr
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SurfaceProgram:
    inputs: tuple[InputDecl, ...] = ()
    defs: tuple[TopDef, ...] = ()
    outputs: tuple[OutputDecl, ...] = ()


Node = Union[Expr, Pattern]
