"""Surface syntax printer; output always re-parses to an equal AST."""

from __future__ import annotations

from ..core import ChannelClass
from ..pretty import show_type
from .syntax import (
    Expr,
    Pattern,
    PCons,
    PInj,
    PNat,
    PPair,
    PSelect,
    PSuc,
    PUnit,
    PVar,
    PWild,
    SApp,
    SAwait,
    SBinOp,
    SCase,
    SClock,
    SClockAtom,
    SClockUnion,
    SCons,
    SDelay,
    SFix,
    SFloat,
    SIf,
    SLam,
    SLet,
    SNat,
    SNatRec,
    SNever,
    SPair,
    SPrim,
    SRaw,
    SRead,
    SSeq,
    STemplate,
    SUnit,
    SurfaceProgram,
    SVar,
)

PREFIX = (SLam, SLet, SCase, SIf, SFix)
_LEVEL = {"==.": 3, "<.": 3, "<=.": 3, "+": 4, "+.": 4, "-.": 4, "*.": 5, "/.": 5}


def ends_open(e: Expr) -> bool:
    """True if e's rightmost token run could absorb a following ``| alt``."""
    if isinstance(e, PREFIX):
        return True
    if isinstance(e, (SSeq, SCons, SBinOp)):
        return ends_open(e.then if isinstance(e, SSeq) else e.tail if isinstance(e, SCons) else e.right)
    return False


def show_float(x: float) -> str:
    text = repr(float(x))
    if "e" in text and "." not in text.split("e")[0]:
        mant, exp = text.split("e")
        text = f"{mant}.0e{exp}"
    return text


def show_expr(e: Expr, level: int = 0) -> str:
    def wrap(text: str, own: int) -> str:
        return f"({text})" if own < level else text

    match e:
        case SVar(name):
            return name
        case SRaw(text):
            return text
        case STemplate(name, ch):
            return f"{name} @{ch}"
        case SUnit():
            return "()"
        case SNat(n):
            return str(n)
        case SFloat(x):
            return show_float(x)
        case SNever():
            return "never"
        case SAwait(ch):
            return wrap(f"await {ch}", 7) if level > 7 else f"await {ch}"
        case SRead(ch):
            return wrap(f"read {ch}", 7) if level > 7 else f"read {ch}"
        case SPair(a, b):
            return f"({show_expr(a)}, {show_expr(b)})"
        case SLam(params, body):
            ps = " ".join(show_pattern(p, 2) for p in params)
            return wrap(f"\\{ps} -> {show_expr(body)}", 0)
        case SLet(p, bound, body):
            return wrap(f"let {show_pattern(p)} = {show_expr(bound)} in {show_expr(body)}", 0)
        case SIf(c, t, f):
            return wrap(f"if {show_expr(c)} then {show_expr(t)} else {show_expr(f)}", 0)
        case SFix(x, body):
            return wrap(f"fix {x} -> {show_expr(body)}", 0)
        case SCase(s, alts):
            parts = []
            for i, (p, body) in enumerate(alts):
                last = i == len(alts) - 1
                text = show_expr(body)
                if not last and ends_open(body):
                    text = f"({text})"
                parts.append(f"| {show_pattern(p)} -> {text}")
            return wrap(f"case {show_expr(s)} of " + " ".join(parts), 0)
        case SSeq(a, b):
            return wrap(f"{show_expr(a, 2)} ; {_operand(b, 0)}", 1)
        case SCons(h, t):
            return wrap(f"{show_expr(h, 3)} :: {_operand(t, 2)}", 2)
        case SBinOp(op, a, b):
            own = _LEVEL[op]
            left_level = own + 1 if own == 3 else own
            return wrap(f"{show_expr(a, left_level)} {op} {_operand(b, own + 1)}", own)
        case SApp(f, a):
            return wrap(f"{show_expr(f, 6)} {show_expr(a, 8)}", 6)
        case SPrim(kw, args):
            return wrap(" ".join([kw] + [show_expr(a, 8) for a in args]), 6)
        case SDelay(clock, body):
            sub = "" if clock is None else f"[{show_clock(clock)}]"
            return wrap(f"delay{sub} {show_expr(body, 8)}", 6)
        case SNatRec(base, x, y, step, n):
            return wrap(f"natrec {show_expr(base, 8)} (\\{x} {y} -> {show_expr(step)}) {show_expr(n, 8)}", 6)
    raise TypeError(f"cannot print {e!r}")


def _operand(e: Expr, level: int) -> str:
    if isinstance(e, PREFIX):
        return f"({show_expr(e)})"
    return show_expr(e, level)


def show_clock(c: SClock, nested: bool = False) -> str:
    match c:
        case SClockAtom(v):
            return show_expr(v, 7)
        case SClockUnion(a, b):
            text = f"{show_clock(a)} | {show_clock(b, True)}"
            return f"({text})" if nested else text
    raise TypeError(f"cannot print clock {c!r}")


def show_pattern(p: Pattern, level: int = 0) -> str:
    def wrap(text: str, own: int) -> str:
        return f"({text})" if own < level else text

    match p:
        case PVar(name):
            return name
        case PWild():
            return "_"
        case PUnit():
            return "()"
        case PNat(n):
            return str(n)
        case PPair(a, b):
            return f"({show_pattern(a)}, {show_pattern(b)})"
        case PCons(h, t):
            return wrap(f"{show_pattern(h, 1)} :: {show_pattern(t, 0)}", 0)
        case PInj(i, a):
            return wrap(f"{'inl' if i == 1 else 'inr'} {show_pattern(a, 2)}", 1)
        case PSuc(a):
            return wrap(f"suc {show_pattern(a, 2)}", 1)
        case PSelect(tag, a, b):
            return wrap(f"{tag} {show_pattern(a, 2)} {show_pattern(b, 2)}", 1)
    raise TypeError(f"cannot print pattern {p!r}")


def show_program(p: SurfaceProgram) -> str:
    lines: list[str] = []
    if p.inputs:
        lines.append("inputs")
        for d in p.inputs:
            lines.append(f"  {d.name} : {d.cls.value} {show_type(d.type)}")
    if p.defs:
        lines.append("defs")
        for d in p.defs:
            params = "".join(
                f" @({c.name} : {c.cls.value + ' ' if isinstance(c.cls, ChannelClass) else ''}{show_type(c.type)})"
                for c in d.chan_params
            )
            sig = d.signature
            if len(sig.stable) == 1:
                constraints = f"Stable {sig.stable[0]} => "
            elif sig.stable:
                constraints = "(" + ", ".join(f"Stable {s}" for s in sig.stable) + ") => "
            else:
                constraints = ""
            lines.append(f"  {d.name}{params} : {constraints}{show_type(sig.type)}")
            for eq in d.equations:
                chans = "".join(f" @{c}" for c in eq.chan_args)
                pats = "".join(" " + show_pattern(q, 2) for q in eq.patterns)
                lines.append(f"  {d.name}{chans}{pats} = {show_expr(eq.body)}")
    if p.outputs:
        lines.append("outputs")
        for o in p.outputs:
            lines.append(f"  {o.name} : {show_type(o.type)} = {show_expr(o.expr)}")
    return "\n".join(lines) + "\n"
