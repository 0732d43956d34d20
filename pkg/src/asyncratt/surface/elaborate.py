"""Elaboration of surface programs into the core calculus.

Top-level definitions become boxed bindings used through ``unbox``; a
definition that mentions itself becomes ``fix r. ...`` with each recursive
call replaced by ``adv r``.  Pattern equations compile to chains of
``out`` / ``fst`` / ``snd`` / ``case``.  A ``delay`` without a subscript gets
the join of ``cl(v)`` over every ``adv v`` and ``select v w`` directly in its
body; non-value arguments of ``adv`` and ``select`` are let-bound just before
the enclosing delay.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional

from ..core import (
    Adv,
    App,
    Await,
    BoxT,
    Case,
    ChannelClass,
    ChannelDecl,
    ClockExpr,
    ClockOf,
    Delay,
    FixT,
    FloatLit,
    FloatOp,
    Inj,
    InputContext,
    Into,
    Lam,
    Let,
    NatRec,
    Never,
    Out,
    Pair,
    Proj,
    Read,
    Scheme,
    Select,
    Suc,
    Term,
    TypeExpr,
    TypeVar,
    Unbox,
    UnitVal,
    Var,
    clock_join,
    free_type_vars,
    free_vars,
    fresh_name,
    is_value,
    nat,
    subst_type,
)
from ..errors import ElaborationError, RattTypeError, TypeErrorKind
from .syntax import (
    Equation,
    Expr,
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
    TopDef,
)

FLOAT_OPS = {"+.": "add", "-.": "sub", "*.": "mul", "/.": "div", "==.": "eq", "<.": "lt", "<=.": "le"}
SELECT_TAGS = {"Left": (1, 1), "Right": (1, 2), "Both": (2, None)}


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class CoreDef:
    """A top-level binding: ``name = box body`` with ``body : scheme``."""

    name: str
    scheme: Scheme
    body: Term
    pos: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class CoreOutput:
    name: str
    type: TypeExpr
    term: Term
    pos: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class CoreProgram:
    inputs: InputContext
    defs: tuple[CoreDef, ...]
    outputs: tuple[CoreOutput, ...]

    def output_types(self) -> list[tuple[str, TypeExpr]]:
        return [(o.name, o.type) for o in self.outputs]

    def def_named(self, name: str) -> CoreDef:
        for d in self.defs:
            if d.name == name:
                return d
        raise KeyError(name)

    def term(self) -> Term:
        """The whole program as one closed term: boxed definitions around the output tuple."""
        return wrap_defs(self.defs, output_tuple([o.term for o in self.outputs]))


def output_tuple(terms: list[Term]) -> Term:
    """Right-nested tuple of output signals; a lone output is its own tuple, none is unit."""
    if not terms:
        return UnitVal()
    result = terms[-1]
    for t in reversed(terms[:-1]):
        result = Pair(t, result)
    return result


def wrap_defs(defs, body: Term) -> Term:
    for d in reversed(list(defs)):
        body = Let(d.name, BoxT(d.body), body)
    return body


# ---------------------------------------------------------------------------
# Scopes


@dataclass
class DelayFrame:
    """Bookkeeping for one ``delay`` body under elaboration."""

    lifted: list[tuple[str, Term]] = field(default_factory=list)
    atoms: list[Term] = field(default_factory=list)


@dataclass(frozen=True)
class Scope:
    locals: frozenset[str] = frozenset()
    fix_vars: frozenset[str] = frozenset()  # binders of type OAny A; adv on them adds no clock
    self_name: Optional[str] = None
    rec_var: Optional[str] = None
    frame: Optional[DelayFrame] = None
    inner: frozenset[str] = frozenset()  # names bound inside the current delay body
    chan_env: tuple[tuple[str, str], ...] = ()

    def bind(self, names) -> "Scope":
        names = frozenset(names)
        inner = self.inner | names if self.frame is not None else self.inner
        return replace(self, locals=self.locals | names, fix_vars=self.fix_vars - names, inner=inner)

    def channel(self, name: str) -> str:
        return dict(self.chan_env).get(name, name)


_names: ContextVar[Optional[Iterator[int]]] = ContextVar("elaboration_names", default=None)


def _fresh(base: str) -> str:
    # generated names contain '%', which the lexer never produces, so they cannot clash with user names
    counter = _names.get()
    if counter is None:
        return fresh_name(base, frozenset())
    return f"{base}%{next(counter)}"


@contextmanager
def _numbered_names():
    """Number generated names from zero for one elaboration, so compiling is deterministic."""
    token = _names.set(itertools.count())
    try:
        yield
    finally:
        _names.reset(token)


# ---------------------------------------------------------------------------
# Elaborator


class Elaborator:
    def __init__(self, inputs: InputContext, defs: tuple[TopDef, ...] = ()):
        self.inputs = inputs
        self.sources: dict[str, TopDef] = {}
        for d in defs:
            if d.name in self.sources:
                raise ElaborationError(f"duplicate definition of {d.name!r}", d.pos)
            self.sources[d.name] = d
        self.done: dict[str, CoreDef] = {}
        self.order: list[CoreDef] = []
        self._active: set[str] = set()

    # -- top level ----------------------------------------------------------

    def program(self, outputs, roots: Optional[tuple[str, ...]] = None) -> CoreProgram:
        """Elaborate the outputs, plus every non-template definition in ``roots`` (default: all)."""
        for d in self.sources.values():
            if not d.is_template and (roots is None or d.name in roots):
                self.define(d.name)
        outs = []
        seen: set[str] = set()
        for o in outputs:
            if o.name in seen:
                raise ElaborationError(f"duplicate output {o.name!r}", o.pos)
            if o.name in self.inputs:
                raise ElaborationError(f"output {o.name!r} clashes with an input channel", o.pos)
            seen.add(o.name)
            outs.append(CoreOutput(o.name, o.type, self.expr(o.expr, Scope()), o.pos))
        return CoreProgram(self.inputs, tuple(self.order), tuple(outs))

    def define(self, name: str, channels: tuple[str, ...] = ()) -> str:
        """Elaborate a definition (or a template instance) and return its core name."""
        src = self.sources[name]
        core_name = name + "".join(f"@{c}" for c in channels)
        if core_name in self.done:
            return core_name
        if core_name in self._active:
            raise ElaborationError(f"mutually recursive definitions are not supported ({core_name})", src.pos)
        self._active.add(core_name)
        scheme, chan_env = self._scheme(src, channels)
        if not src.equations:
            raise ElaborationError(f"{name!r} has a type signature but no equations", src.pos)
        scope = Scope(self_name=name, rec_var=_fresh("r"), chan_env=chan_env)
        used = [False]
        body = self.equations(src.equations, scope, used)
        if used[0]:
            body = FixT(scope.rec_var, body, pos=src.pos)
        self._active.discard(core_name)
        d = CoreDef(core_name, scheme, body, src.pos)
        self.done[core_name] = d
        self.order.append(d)
        return core_name

    def _scheme(self, src: TopDef, channels: tuple[str, ...]) -> tuple[Scheme, tuple[tuple[str, str], ...]]:
        mapping: dict[str, TypeExpr] = {}
        env = []
        for param, ch in zip(src.chan_params, channels):
            if ch not in self.inputs:
                raise RattTypeError(TypeErrorKind.UnboundVariable, f"unknown input channel {ch!r}", src.pos)
            decl = self.inputs[ch]
            need = param.cls
            if need is not None and ((need.is_push and not decl.cls.is_push) or (need.is_buffered and not decl.cls.is_buffered)):
                raise RattTypeError(
                    TypeErrorKind.ChannelClassMismatch,
                    f"{src.name} needs a {need.value} channel, but {ch!r} is declared {decl.cls.value}",
                    src.pos,
                )
            _match_type(param.type, decl.type, mapping, src)
            env.append((param.name, ch))
        ty = subst_type(src.signature.type, mapping)
        params = _ordered_vars(ty)
        stable = frozenset(v for v in src.signature.stable if v in params)
        return Scheme(params, stable, ty), tuple(env)

    # -- equations and patterns ---------------------------------------------

    def equations(self, eqs: tuple[Equation, ...], scope: Scope, used: list[bool]) -> Term:
        arity = len(eqs[0].patterns)
        binders = []
        for i in range(arity):
            names = {eq.patterns[i].name if isinstance(eq.patterns[i], PVar) else None for eq in eqs}
            only = names.pop() if len(names) == 1 else None
            binders.append(only if only is not None else _fresh("a"))
        inner = scope.bind(binders)
        rows = [
            ([(Var(b), p) for b, p in zip(binders, eq.patterns)], eq.body, eq.pos)
            for eq in eqs
        ]
        body = self.match(rows, inner, used)
        for b in reversed(binders):
            body = Lam(b, body, pos=eqs[0].pos)
        return body

    def match(self, rows, scope: Scope, used: Optional[list[bool]] = None, pos=None) -> Term:
        """Compile rows of (tests, body, pos); each test pairs a pure path term with a pattern.

        Rows are tried top to bottom.  ``known`` records which constructor a
        path has already been found to have (and the variable holding its
        payload), so a later row never re-tests it and a missing case is only
        reported when some value really falls through every row.
        """

        def attempt(k: int, known: dict, fail_pos) -> Term:
            if k == len(rows):
                raise ElaborationError("non-exhaustive patterns", fail_pos or pos)
            tests, body, row_pos = rows[k]
            return self._row(
                list(tests), [], body, lambda kn, at: attempt(k + 1, kn, at), known, scope, used, row_pos or pos
            )

        return attempt(0, {}, pos)

    def _row(self, tests, bindings, body, fail, known, scope, used, pos) -> Term:
        while tests:
            path, pat = tests.pop(0)
            match pat:
                case PVar(x):
                    if not (isinstance(path, Var) and path.name == x):
                        bindings.append((x, path))
                case PWild() | PUnit():
                    pass
                case PPair(a, b):
                    tests[:0] = [(Proj(1, path), a), (Proj(2, path), b)]
                case PCons(h, t):
                    tests[:0] = [(Proj(1, Out(path)), h), (Proj(2, Out(path)), t)]
                case PSelect(tag, a, b):
                    outer, inner_ix = SELECT_TAGS[tag]
                    pair = PPair(a, b, pos=pat.pos)
                    sub = pair if inner_ix is None else PInj(inner_ix, pair, pos=pat.pos)
                    tests.insert(0, (path, PInj(outer, sub, pos=pat.pos)))
                case PInj(i, sub):
                    if path in known:
                        j, y = known[path]
                        if j != i:
                            return fail(known, pat.pos)
                        tests.insert(0, (Var(y), sub))
                        continue
                    y = _fresh("v")
                    hit = self._row(
                        [(Var(y), sub)] + tests, list(bindings), body, fail, {**known, path: (i, y)}, scope, used, pos
                    )
                    miss = fail({**known, path: (3 - i, y)}, pat.pos)
                    left, right = (hit, miss) if i == 1 else (miss, hit)
                    return Case(path, y, left, y, right, pos=pat.pos)
                case PNat(n):
                    if n > 0:
                        tests.insert(0, (path, PSuc(PNat(n - 1, pos=pat.pos), pos=pat.pos)))
                        continue
                    if path in known:
                        if known[path][0] != 1:
                            return fail(known, pat.pos)
                        continue
                    return self._nat_test(path, 1, None, tests, bindings, body, fail, known, scope, used, pos, pat)
                case PSuc(sub):
                    if path in known:
                        j, y = known[path]
                        if j != 2:
                            return fail(known, pat.pos)
                        tests.insert(0, (Var(y), sub))
                        continue
                    return self._nat_test(path, 2, sub, tests, bindings, body, fail, known, scope, used, pos, pat)
                case _:
                    raise ElaborationError(f"unsupported pattern {pat!r}", pos)
        names = [x for x, _ in bindings]
        if len(set(names)) != len(names):
            raise ElaborationError("pattern binds the same variable twice", pos)
        inner = scope.bind(names)
        out = self.expr(body, inner, used)
        for x, path in reversed(bindings):
            out = Let(x, path, out, pos=pos)
        return out

    def _nat_test(self, path, i, sub, tests, bindings, body, fail, known, scope, used, pos, pat) -> Term:
        # natrec computes inl () for zero and inr (predecessor) otherwise; the
        # probe's result is keyed under the number's own path in ``known``
        p = _fresh("p")
        probe = NatRec(Inj(1, UnitVal()), p, "_", Inj(2, Var(p)), path)
        y = _fresh("v")
        rest = list(tests) if sub is None else [(Var(y), sub)] + list(tests)
        hit = self._row(rest, list(bindings), body, fail, {**known, path: (i, y)}, scope, used, pos)
        miss = fail({**known, path: (3 - i, y)}, pat.pos)
        left, right = (hit, miss) if i == 1 else (miss, hit)
        return Case(probe, y, left, y, right, pos=pat.pos)

    # -- expressions --------------------------------------------------------

    def expr(self, e: Expr, scope: Scope, used: Optional[list[bool]] = None) -> Term:
        used = used if used is not None else [False]
        go: Callable[[Expr], Term] = lambda sub: self.expr(sub, scope, used)
        pos = getattr(e, "pos", None)
        match e:
            case SVar(name):
                return self._var(name, scope, used, pos)
            case STemplate(name, ch):
                return self._template(name, scope.channel(ch), scope, used, pos)
            case SUnit():
                return UnitVal(pos=pos)
            case SNat(n):
                return nat(n)
            case SFloat(x):
                return FloatLit(x, pos=pos)
            case SNever():
                return Never(pos=pos)
            case SAwait(ch):
                return Await(scope.channel(ch), pos=pos)
            case SRead(ch):
                return Read(scope.channel(ch), pos=pos)
            case SPair(a, b):
                return Pair(go(a), go(b), pos=pos)
            case SCons(h, t):
                return Into(Pair(go(h), go(t)), pos=pos)
            case SSeq(a, b):
                return Let("_", go(a), go(b), pos=pos)
            case SApp(f, a):
                return App(go(f), go(a), pos=pos)
            case SIf(c, t, f):
                return Case(go(c), "_", go(t), "_", go(f), pos=pos)
            case SBinOp("+", a, b):
                y = _fresh("y")
                return NatRec(go(a), "_", y, Suc(Var(y)), go(b), pos=pos)
            case SBinOp(op, a, b):
                return FloatOp(FLOAT_OPS[op], (go(a), go(b)), pos=pos)
            case SPrim(kw, args):
                return self._prim(kw, args, scope, used, pos)
            case SLam(params, body):
                binders = [p.name if isinstance(p, PVar) else _fresh("a") for p in params]
                inner = scope.bind(binders)
                rows = [([(Var(b), p) for b, p in zip(binders, params)], body, pos)]
                out = self.match(rows, inner, used, pos)
                for b in reversed(binders):
                    out = Lam(b, out, pos=pos)
                return out
            case SLet(PVar(x), bound, body):
                return Let(x, go(bound), self.expr(body, scope.bind([x]), used), pos=pos)
            case SLet(PWild() | PUnit(), bound, body):
                return Let("_", go(bound), go(body), pos=pos)
            case SLet(pat, bound, body):
                z = _fresh("m")
                inner = scope.bind([z])
                return Let(z, go(bound), self.match([([(Var(z), pat)], body, pos)], inner, used, pos), pos=pos)
            case SCase(scrut, alts):
                s = go(scrut)
                if isinstance(s, Var):
                    return self.match([([(s, p)], b, getattr(p, "pos", pos)) for p, b in alts], scope, used, pos)
                z = _fresh("m")
                inner = scope.bind([z])
                rows = [([(Var(z), p)], b, getattr(p, "pos", pos)) for p, b in alts]
                return Let(z, s, self.match(rows, inner, used, pos), pos=pos)
            case SFix(x, body):
                inner = replace(scope.bind([x]), fix_vars=scope.fix_vars | {x}, frame=None, inner=frozenset())
                return FixT(x, self.expr(body, inner, used), pos=pos)
            case SNatRec(base, x, y, step, n):
                inner = scope.bind([x, y])
                return NatRec(go(base), x, y, self.expr(step, inner, used), go(n), pos=pos)
            case SDelay(clock, body):
                return self._delay(clock, body, scope, used, pos)
            case SRaw(text):
                raise ElaborationError(f"machine-only syntax {text!r} cannot be elaborated", pos)
        raise ElaborationError(f"cannot elaborate {e!r}", pos)

    def _var(self, name: str, scope: Scope, used: list[bool], pos) -> Term:
        if name in scope.locals:
            return Var(name, pos=pos)
        if name == scope.self_name and not scope.chan_env:
            return self._recur(scope, used, pos)
        if name in self.sources:
            src = self.sources[name]
            if src.is_template:
                raise ElaborationError(f"{name!r} needs a channel argument, e.g. {name} @ch", pos)
            if name not in self.done:
                self.define(name)
            return Unbox(Var(name, pos=pos), pos=pos)
        return Var(name, pos=pos)

    def _template(self, name: str, ch: str, scope: Scope, used: list[bool], pos) -> Term:
        if name not in self.sources or not self.sources[name].is_template:
            raise ElaborationError(f"{name!r} is not a channel-indexed definition", pos)
        src = self.sources[name]
        if len(src.chan_params) != 1:
            raise ElaborationError(f"{name!r} takes {len(src.chan_params)} channel arguments", pos)
        if name == scope.self_name and tuple(c for _, c in scope.chan_env) == (ch,):
            return self._recur(scope, used, pos)
        core_name = self.define(name, (ch,))
        return Unbox(Var(core_name, pos=pos), pos=pos)

    def _recur(self, scope: Scope, used: list[bool], pos) -> Term:
        if scope.frame is None:
            raise ElaborationError(f"recursive call to {scope.self_name!r} must occur under delay", pos)
        used[0] = True
        return Adv(Var(scope.rec_var, pos=pos), pos=pos)

    def _prim(self, kw: str, args, scope: Scope, used, pos) -> Term:
        go = lambda sub: self.expr(sub, scope, used)
        match kw:
            case "suc":
                return Suc(go(args[0]), pos=pos)
            case "inl" | "inr":
                return Inj(1 if kw == "inl" else 2, go(args[0]), pos=pos)
            case "fst" | "snd":
                return Proj(1 if kw == "fst" else 2, go(args[0]), pos=pos)
            case "unbox":
                return Unbox(go(args[0]), pos=pos)
            case "box":
                inner = replace(scope, frame=None, inner=frozenset())
                return BoxT(self.expr(args[0], inner, used), pos=pos)
            case "into":
                return Into(go(args[0]), pos=pos)
            case "out":
                return Out(go(args[0]), pos=pos)
            case "adv":
                v = self._modal_arg(args[0], scope, used, pos)
                return Adv(v, pos=pos)
            case "select":
                v1 = self._modal_arg(args[0], scope, used, pos)
                v2 = self._modal_arg(args[1], scope, used, pos)
                return Select(v1, v2, pos=pos)
            case "Left" | "Right" | "Both":
                outer, inner_ix = SELECT_TAGS[kw]
                pair: Term = Pair(go(args[0]), go(args[1]), pos=pos)
                if inner_ix is not None:
                    pair = Inj(inner_ix, pair, pos=pos)
                return Inj(outer, pair, pos=pos)
        raise ElaborationError(f"unknown primitive {kw!r}", pos)

    def _modal_arg(self, arg: Expr, scope: Scope, used, pos) -> Term:
        frame = scope.frame
        if frame is None:
            raise ElaborationError("adv and select may only be used under delay", pos)
        v = self.expr(arg, scope, used)
        if not is_value(v):
            if free_vars(v) & scope.inner:
                raise ElaborationError(
                    "the argument of adv/select must be a value available before the delay", pos
                )
            y = _fresh("d")
            frame.lifted.append((y, v))
            v = Var(y, pos=pos)
        if not (isinstance(v, Var) and v.name in scope.fix_vars):
            if isinstance(v, Var) and v.name in scope.inner:
                raise ElaborationError(
                    f"{v.name!r} is bound inside the delay, so its clock is not available", pos
                )
            if v not in frame.atoms:
                frame.atoms.append(v)
        return v

    def _delay(self, clock: Optional[SClock], body: Expr, scope: Scope, used, pos) -> Term:
        frame = DelayFrame()
        inner = replace(scope, frame=frame, inner=frozenset())
        core_body = self.expr(body, inner, used)
        if clock is not None:
            theta = self._clock(clock, scope, used)
        elif frame.atoms:
            theta = clock_join([ClockOf(a) for a in frame.atoms])
        else:
            raise ElaborationError(
                "cannot infer the clock of this delay: its body has no adv or select; write delay[...]", pos
            )
        out: Term = Delay(theta, core_body, pos=pos)
        for y, t in reversed(frame.lifted):
            out = Let(y, t, out, pos=pos)
        return out

    def _clock(self, clock: SClock, scope: Scope, used) -> ClockExpr:
        match clock:
            case SClockAtom(v):
                return ClockOf(self.expr(v, scope, used))
            case SClockUnion(a, b):
                from ..core import ClockUnion

                return ClockUnion(self._clock(a, scope, used), self._clock(b, scope, used))
        raise ElaborationError(f"bad clock {clock!r}")


def _match_type(pattern: TypeExpr, actual: TypeExpr, mapping: dict, src: TopDef) -> None:
    if isinstance(pattern, TypeVar):
        bound = mapping.get(pattern.name)
        if bound is None:
            mapping[pattern.name] = actual
            return
        pattern = bound
    if pattern != actual:
        raise RattTypeError(
            TypeErrorKind.Mismatch, f"{src.name}: channel type {actual} does not match {pattern}", src.pos
        )


def _ordered_vars(t: TypeExpr) -> tuple[str, ...]:
    seen: list[str] = []

    def walk(u):
        if isinstance(u, TypeVar):
            if u.name not in seen and u.name in free:
                seen.append(u.name)
            return
        for f in getattr(u, "__dataclass_fields__", {}):
            child = getattr(u, f)
            if isinstance(child, TypeExpr):
                walk(child)

    free = free_type_vars(t)
    walk(t)
    return tuple(seen)


def input_context(program: SurfaceProgram) -> InputContext:
    entries = []
    for d in program.inputs:
        if not _is_value_type(d.type):
            raise RattTypeError(
                TypeErrorKind.NotValueType, f"input channel {d.name!r} must carry a value type, not {d.type}", d.pos
            )
        entries.append((d.name, ChannelDecl(d.cls, d.type)))
    try:
        return InputContext(entries)
    except ValueError as exc:
        raise ElaborationError(str(exc)) from None


def _is_value_type(t: TypeExpr) -> bool:
    from ..core import is_value_type

    return is_value_type(t)


def elaborate(program: SurfaceProgram, prelude: tuple[TopDef, ...] = (), inputs: Optional[InputContext] = None) -> CoreProgram:
    """Elaborate a parsed program.

    ``prelude`` definitions are available to the program and elaborated only
    when used; a program definition shadows a prelude one of the same name.
    """
    delta = inputs if inputs is not None else input_context(program)
    own = {d.name for d in program.defs}
    prelude = tuple(d for d in prelude if d.name not in own)
    with _numbered_names():
        elab = Elaborator(delta, prelude + tuple(program.defs))
        return elab.program(program.outputs, roots=tuple(own))


def elaborate_template(d: TopDef, others: tuple[TopDef, ...] = ()) -> tuple[InputContext, list[CoreDef]]:
    """Instantiate a channel-indexed definition at a generic channel named after its parameter.

    The channel carries the parameter's declared class and (possibly schematic) type.
    Returns that input context and the instantiated definitions, dependencies first.
    """
    delta = InputContext.unchecked(
        [(p.name, ChannelDecl(p.cls or ChannelClass.BUFFERED_PUSH, p.type)) for p in d.chan_params]
    )
    elab = Elaborator(delta, tuple(o for o in others if o.name != d.name) + (d,))
    elab.define(d.name, tuple(p.name for p in d.chan_params))
    return delta, elab.order


__all__ = [
    "CoreDef",
    "CoreOutput",
    "CoreProgram",
    "Elaborator",
    "elaborate",
    "elaborate_template",
    "input_context",
    "output_tuple",
    "wrap_defs",
]
