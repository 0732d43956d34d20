"""The modal type system: context and clock well-formedness, and term typing.

Checking is bidirectional.  Unknown types (lambda binders without an expected
type, instantiated scheme parameters, the element type of ``never``) are
unification variables; stability side-conditions that mention an unsolved
variable are re-checked once the surrounding definition has been checked.

Contexts are tuples of ``VarBind`` / ``Tick`` / ``Lock`` entries.  ``Lock``
marks where the context was stabilised for ``box`` or ``fix``: the checker
never copies the context, it looks through the lock and hides every
non-stable binding and every tick to its left, which is exactly what the
stabilised context would contain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (
    BOOL,
    FLOAT,
    FLOAT_OPS,
    NAT,
    UNIT,
    Adv,
    App,
    Await,
    Box,
    BoxT,
    Case,
    ClockExpr,
    ClockOf,
    ClockUnion,
    Delay,
    DelayAny,
    DelayExist,
    DFix,
    FixRec,
    FixT,
    Float,
    FloatLit,
    FloatOp,
    Fun,
    Inj,
    InputContext,
    Into,
    Lam,
    Let,
    Loc,
    Lock,
    Meta,
    Nat,
    NatRec,
    Never,
    Out,
    Pair,
    Prod,
    Proj,
    Read,
    Scheme,
    Select,
    Sig,
    Suc,
    Sum,
    Term,
    Tick,
    TypeExpr,
    TypeVar,
    TypingContext,
    Unbox,
    Unit,
    UnitVal,
    Var,
    VarBind,
    Zero,
    clock_atoms,
    is_value,
    is_value_type,
    subst_type,
    unfold,
)
from .errors import RattTypeError, TypeErrorKind

K = TypeErrorKind


def stabilize(ctx: TypingContext) -> TypingContext:
    """Drop every tick and every binding whose type is not stable, keeping order."""
    out = []
    for entry in ctx:
        if isinstance(entry, VarBind) and (isinstance(entry.type, Scheme) or _stable3(entry.type, frozenset()) is True):
            out.append(entry)
    return tuple(out)


def _stable3(t: TypeExpr, stable_vars: frozenset[str], solve=None) -> Optional[bool]:
    """Three-valued stability: None when an unsolved unification variable decides it."""
    if solve is not None:
        t = solve(t)
    match t:
        case Unit() | Nat() | Float() | DelayAny(_) | Box(_):
            return True
        case Prod(l, r) | Sum(l, r):
            a, b = _stable3(l, stable_vars, solve), _stable3(r, stable_vars, solve)
            if a is False or b is False:
                return False
            return None if a is None or b is None else True
        case TypeVar(name):
            return name in stable_vars
        case Meta():
            return None
    return False


@dataclass
class _Deferred:
    type: TypeExpr
    kind: TypeErrorKind
    message: str
    pos: object


class Checker:
    def __init__(self, delta: InputContext, stable_vars: Iterable[str] = ()):
        self.delta = delta
        self.stable_vars = frozenset(stable_vars)
        self.solution: dict[int, TypeExpr] = {}
        self.deferred: list[_Deferred] = []
        self._ids = itertools.count()

    # -- unification ----------------------------------------------------------

    def fresh(self) -> Meta:
        return Meta(next(self._ids))

    def resolve(self, t: TypeExpr) -> TypeExpr:
        while isinstance(t, Meta) and t.id in self.solution:
            t = self.solution[t.id]
        return t

    def zonk(self, t: TypeExpr) -> TypeExpr:
        t = self.resolve(t)
        match t:
            case Prod(a, b):
                return Prod(self.zonk(a), self.zonk(b))
            case Sum(a, b):
                return Sum(self.zonk(a), self.zonk(b))
            case Fun(a, b):
                return Fun(self.zonk(a), self.zonk(b))
            case DelayExist(a):
                return DelayExist(self.zonk(a))
            case DelayAny(a):
                return DelayAny(self.zonk(a))
            case Box(a):
                return Box(self.zonk(a))
            case FixRec(x, body):
                return FixRec(x, self.zonk(body))
        return t

    def _occurs(self, m: Meta, t: TypeExpr) -> bool:
        t = self.resolve(t)
        if t == m:
            return True
        return any(self._occurs(m, c) for c in _type_children(t))

    def unify(self, expected: TypeExpr, actual: TypeExpr, pos=None, what: str = "") -> None:
        if not self._unify(expected, actual):
            where = f" in {what}" if what else ""
            raise RattTypeError(
                K.Mismatch, f"expected {self.zonk(expected)}, found {self.zonk(actual)}{where}", pos
            )

    def _unify(self, a: TypeExpr, b: TypeExpr) -> bool:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return True
        if isinstance(a, Meta) or isinstance(b, Meta):
            m, other = (a, b) if isinstance(a, Meta) else (b, a)
            if self._occurs(m, other):
                return False
            self.solution[m.id] = other
            return True
        match a, b:
            case FixRec(x, body_a), FixRec(y, body_b):
                return self._unify(body_a, subst_type(body_b, {y: TypeVar(x)}) if x != y else body_b)
            case (Prod(a1, a2), Prod(b1, b2)) | (Sum(a1, a2), Sum(b1, b2)) | (Fun(a1, a2), Fun(b1, b2)):
                return self._unify(a1, b1) and self._unify(a2, b2)
            case (DelayExist(x), DelayExist(y)) | (DelayAny(x), DelayAny(y)) | (Box(x), Box(y)):
                return self._unify(x, y)
        return False

    def expect_shape(self, t: TypeExpr, ctor, pos, what: str) -> TypeExpr:
        """Resolve t to constructor ``ctor``, refining an unsolved variable if needed."""
        t = self.resolve(t)
        if isinstance(t, ctor):
            return t
        if isinstance(t, Meta) and ctor is FixRec:
            raise RattTypeError(K.CannotInfer, f"{what}: the recursive type is not known here; add an annotation", pos)
        if isinstance(t, Meta):
            arity = 1 if ctor in (DelayExist, DelayAny, Box) else 2
            shaped = ctor(*[self.fresh() for _ in range(arity)])
            self.solution[t.id] = shaped
            return shaped
        raise RattTypeError(K.Mismatch, f"{what}: expected a {_ctor_name(ctor)} type, found {self.zonk(t)}", pos)

    # -- stability ------------------------------------------------------------

    def stable(self, t: TypeExpr) -> Optional[bool]:
        return _stable3(t, self.stable_vars, self.resolve)

    def require_stable(self, t: TypeExpr, kind: TypeErrorKind, message: str, pos) -> None:
        verdict = self.stable(t)
        if verdict is False:
            raise RattTypeError(kind, message.format(type=self.zonk(t)), pos)
        if verdict is None:
            self.deferred.append(_Deferred(t, kind, message, pos))

    def finish(self) -> None:
        """Re-check deferred stability conditions now that more variables are solved."""
        pending, self.deferred = self.deferred, []
        for d in pending:
            verdict = self.stable(d.type)
            if verdict is False:
                raise RattTypeError(d.kind, d.message.format(type=self.zonk(d.type)), d.pos)
            if verdict is None:
                raise RattTypeError(
                    K.CannotInfer,
                    "cannot tell whether " + d.message.format(type=self.zonk(d.type)) + "; add a type annotation",
                    d.pos,
                )

    def instantiate(self, s: Scheme, pos) -> TypeExpr:
        mapping = {}
        for p in s.params:
            m = self.fresh()
            mapping[p] = m
            if p in s.stable:
                self.deferred.append(_Deferred(m, K.NotStable, f"type {{type}} must be stable (required for {p})", pos))
        return subst_type(s.body, mapping)

    # -- contexts -------------------------------------------------------------

    @staticmethod
    def tick_index(ctx: TypingContext) -> Optional[int]:
        """Index of the visible tick: the last one to the right of every lock."""
        for i in range(len(ctx) - 1, -1, -1):
            if isinstance(ctx[i], Lock):
                return None
            if isinstance(ctx[i], Tick):
                return i
        return None

    def lookup(self, ctx: TypingContext, name: str, pos) -> TypeExpr:
        crossed = False
        locked = False
        for entry in reversed(ctx):
            if isinstance(entry, Tick):
                crossed = crossed or not locked
            elif isinstance(entry, Lock):
                locked = True
            elif entry.name == name:
                ty = entry.type
                if isinstance(ty, Scheme):
                    return self.instantiate(ty, pos)
                if locked:
                    verdict = self.stable(ty)
                    if verdict is False:
                        raise RattTypeError(
                            K.UnboundVariable,
                            f"{name} : {self.zonk(ty)} is not stable, so it is not available under box or fix",
                            pos,
                        )
                    if verdict is None:
                        self.deferred.append(
                            _Deferred(ty, K.UnboundVariable, f"{name} : {{type}} is used under box or fix and must be stable", pos)
                        )
                if crossed:
                    self.require_stable(
                        ty, K.VariableCrossesTick, f"{name} : {{type}} is bound before a tick and is not stable", pos
                    )
                return ty
        raise RattTypeError(K.UnboundVariable, f"unbound variable {name}", pos)

    # -- clocks ---------------------------------------------------------------

    def check_clock(self, ctx: TypingContext, theta: ClockExpr, pos=None) -> None:
        for v in clock_atoms(theta):
            if not is_value(v) or not isinstance(v, (Var, Await, Loc)):
                raise RattTypeError(K.Mismatch, f"clock cl({v}) must be formed from a variable or await", pos)
            ty = self.infer(ctx, v)
            r = self.resolve(ty)
            if isinstance(r, Meta):
                self.expect_shape(r, DelayExist, pos, "clock")
            elif not isinstance(r, DelayExist):
                raise RattTypeError(K.Mismatch, f"cl({v}) needs a delayed value, but {v} : {self.zonk(ty)}", pos)

    # -- terms ----------------------------------------------------------------

    def infer(self, ctx: TypingContext, t: Term) -> TypeExpr:
        pos = t.pos
        match t:
            case Var(name):
                return self.lookup(ctx, name, pos)
            case UnitVal():
                return UNIT
            case Zero():
                return NAT
            case Suc(a):
                self.check(ctx, a, NAT)
                return NAT
            case FloatLit():
                return FLOAT
            case FloatOp(op, args):
                if op not in FLOAT_OPS or len(args) != FLOAT_OPS[op]:
                    raise RattTypeError(K.Mismatch, f"unknown float operation {op}", pos)
                for a in args:
                    self.check(ctx, a, FLOAT)
                return BOOL if op in ("eq", "lt", "le") else FLOAT
            case Lam(x, body):
                self._no_tick(ctx, pos)
                a = self.fresh()
                b = self.infer(ctx + (VarBind(x, a),), body)
                return Fun(a, b)
            case Pair(a, b):
                return Prod(self.infer(ctx, a), self.infer(ctx, b))
            case Inj(i, a):
                other = self.fresh()
                ty = self.infer(ctx, a)
                return Sum(ty, other) if i == 1 else Sum(other, ty)
            case Proj(i, a):
                p = self.expect_shape(self.infer(ctx, a), Prod, pos, "projection")
                return p.left if i == 1 else p.right
            case App(f, a):
                fn = self.expect_shape(self.infer(ctx, f), Fun, pos, "application")
                self.check(ctx, a, fn.arg)
                return fn.res
            case Let(x, s, body):
                ty = self.infer(ctx, s)
                return self.infer(ctx + (VarBind(x, ty),), body)
            case Case():
                result = self.fresh()
                self.check(ctx, t, result)
                return result
            case NatRec(base, x, y, step, n):
                a = self.infer(ctx, base)
                self.check(ctx + (VarBind(x, NAT), VarBind(y, a)), step, a)
                self.check(ctx, n, NAT)
                return a
            case Delay(theta, body):
                self._delay_ok(ctx, theta, pos)
                return DelayExist(self.infer(ctx + (Tick(theta),), body))
            case Never():
                return DelayExist(self.fresh())
            case Await(ch):
                decl = self._channel(ch, pos)
                if not decl.cls.is_push:
                    raise RattTypeError(
                        K.ChannelClassMismatch, f"await {ch}: channel {ch} is buffered-only and never pushes", pos
                    )
                return DelayExist(decl.type)
            case Read(ch):
                decl = self._channel(ch, pos)
                if not decl.cls.is_buffered:
                    raise RattTypeError(
                        K.ChannelClassMismatch, f"read {ch}: channel {ch} is push-only and has no buffer", pos
                    )
                return decl.type
            case Adv(v):
                return self._adv(ctx, v, pos)
            case Select(v1, v2):
                return self._select(ctx, v1, v2, pos)
            case BoxT(body):
                return Box(self.infer(ctx + (Lock(),), body))
            case Unbox(a):
                return self.expect_shape(self.infer(ctx, a), Box, pos, "unbox").body
            case FixT(x, body):
                a = self.fresh()
                self.check(ctx + (Lock(), VarBind(x, DelayAny(a))), body, a)
                return a
            case Into(_):
                raise RattTypeError(K.CannotInfer, "into needs a known recursive type; annotate the definition", pos)
            case Out(a):
                ty = self.expect_shape(self.infer(ctx, a), FixRec, pos, "out")
                return unfold(ty)
            case Loc() | DFix():
                raise RattTypeError(K.Mismatch, f"{type(t).__name__} is machine-only and has no type", pos)
        raise RattTypeError(K.Mismatch, f"unknown term {t!r}", pos)

    def check(self, ctx: TypingContext, t: Term, expected: TypeExpr) -> None:
        pos = t.pos
        exp = self.resolve(expected)
        match t:
            case Lam(x, body) if isinstance(exp, (Fun, Meta)):
                self._no_tick(ctx, pos)
                fn = self.expect_shape(exp, Fun, pos, "lambda")
                self.check(ctx + (VarBind(x, fn.arg),), body, fn.res)
                return
            case Pair(a, b) if isinstance(exp, Prod):
                self.check(ctx, a, exp.left)
                self.check(ctx, b, exp.right)
                return
            case Inj(i, a) if isinstance(exp, (Sum, Meta)):
                s = self.expect_shape(exp, Sum, pos, "injection")
                self.check(ctx, a, s.left if i == 1 else s.right)
                return
            case Let(x, s, body):
                ty = self.infer(ctx, s)
                self.check(ctx + (VarBind(x, ty),), body, expected)
                return
            case Case(scrut, x, left, y, right):
                s = self.expect_shape(self.infer(ctx, scrut), Sum, pos, "case")
                self.check(ctx + (VarBind(x, s.left),), left, expected)
                self.check(ctx + (VarBind(y, s.right),), right, expected)
                return
            case Delay(theta, body) if isinstance(exp, (DelayExist, Meta)):
                self._delay_ok(ctx, theta, pos)
                d = self.expect_shape(exp, DelayExist, pos, "delay")
                self.check(ctx + (Tick(theta),), body, d.body)
                return
            case Never() if isinstance(exp, (DelayExist, Meta)):
                self.expect_shape(exp, DelayExist, pos, "never")
                return
            case BoxT(body) if isinstance(exp, (Box, Meta)):
                b = self.expect_shape(exp, Box, pos, "box")
                self.check(ctx + (Lock(),), body, b.body)
                return
            case FixT(x, body):
                self.check(ctx + (Lock(), VarBind(x, DelayAny(expected))), body, expected)
                return
            case Into(a):
                if isinstance(exp, Meta):
                    raise RattTypeError(K.CannotInfer, "into needs a known recursive type; annotate the definition", pos)
                if not isinstance(exp, FixRec):
                    raise RattTypeError(K.Mismatch, f"into builds a recursive type, but {self.zonk(exp)} was expected", pos)
                self.check(ctx, a, unfold(exp))
                return
            case NatRec(base, x, y, step, n):
                self.check(ctx, base, expected)
                self.check(ctx + (VarBind(x, NAT), VarBind(y, expected)), step, expected)
                self.check(ctx, n, NAT)
                return
        actual = self.infer(ctx, t)
        self.unify(expected, actual, pos)

    # -- modal rules ----------------------------------------------------------

    def _no_tick(self, ctx: TypingContext, pos) -> None:
        if self.tick_index(ctx) is not None:
            raise RattTypeError(K.TickInLambdaContext, "functions cannot be built under a tick (inside delay)", pos)

    def _delay_ok(self, ctx: TypingContext, theta: ClockExpr, pos) -> None:
        if self.tick_index(ctx) is not None:
            raise RattTypeError(K.SecondTick, "delay under a tick: a context holds at most one tick", pos)
        self.check_clock(ctx, theta, pos)

    def _delayed(self, ctx: TypingContext, v: Term, pos, what: str) -> TypeExpr:
        if not is_value(v):
            raise RattTypeError(K.Mismatch, f"{what} must be applied to a value", pos)
        return self.resolve(self.infer(ctx, v))

    def _adv(self, ctx: TypingContext, v: Term, pos) -> TypeExpr:
        i = self.tick_index(ctx)
        if i is None:
            raise RattTypeError(K.ClockMismatch, "adv needs a tick in scope: use it under delay", pos)
        prefix, tick = ctx[:i], ctx[i]
        ty = self._delayed(prefix, v, pos, "adv")
        if isinstance(v, Var) and isinstance(ty, DelayAny):
            return ty.body
        d = self.expect_shape(ty, DelayExist, pos, "adv")
        if not clock_equal(tick.clock, ClockOf(v)):
            raise RattTypeError(
                K.ClockMismatch, f"adv {v} needs the tick's clock to be cl({v}), but it is {_show_clock(tick.clock)}", pos
            )
        return d.body

    def _select(self, ctx: TypingContext, v1: Term, v2: Term, pos) -> TypeExpr:
        i = self.tick_index(ctx)
        if i is None:
            raise RattTypeError(K.ClockMismatch, "select needs a tick in scope: use it under delay", pos)
        prefix, tick = ctx[:i], ctx[i]
        a1 = self.expect_shape(self._delayed(prefix, v1, pos, "select"), DelayExist, pos, "select").body
        a2 = self.expect_shape(self._delayed(prefix, v2, pos, "select"), DelayExist, pos, "select").body
        if not clock_equal(tick.clock, ClockUnion(ClockOf(v1), ClockOf(v2))):
            raise RattTypeError(
                K.ClockMismatch,
                f"select {v1} {v2} needs the tick's clock to be cl({v1}) | cl({v2}), but it is {_show_clock(tick.clock)}",
                pos,
            )
        return select_type(a1, a2)

    def _channel(self, ch: str, pos):
        if ch not in self.delta:
            raise RattTypeError(K.UnboundVariable, f"unknown input channel {ch}", pos)
        return self.delta[ch]


def select_type(a1: TypeExpr, a2: TypeExpr) -> TypeExpr:
    return Sum(Sum(Prod(a1, DelayExist(a2)), Prod(DelayExist(a1), a2)), Prod(a1, a2))


def clock_equal(a: ClockExpr, b: ClockExpr) -> bool:
    """Equality up to associativity, commutativity and idempotence of the join."""
    return _atom_set(a) == _atom_set(b)


def _atom_set(theta: ClockExpr) -> frozenset:
    return frozenset(clock_atoms(theta))


def _show_clock(theta: ClockExpr) -> str:
    from .pretty import show_clock

    return show_clock(theta)


def _type_children(t: TypeExpr):
    match t:
        case Prod(a, b) | Sum(a, b) | Fun(a, b):
            return (a, b)
        case DelayExist(a) | DelayAny(a) | Box(a) | FixRec(_, a):
            return (a,)
    return ()


def _ctor_name(ctor) -> str:
    return {
        Fun: "function",
        Prod: "product",
        Sum: "sum",
        DelayExist: "delayed (O)",
        DelayAny: "OAny",
        Box: "boxed",
        FixRec: "recursive",
    }.get(ctor, ctor.__name__)


# ---------------------------------------------------------------------------
# Public entry points


def check_ctx(delta: InputContext, ctx: TypingContext) -> None:
    """Accept iff ctx is built by the formation rules: fresh variables, and one tick on a tick-free prefix."""
    checker = Checker(delta)
    seen: set[str] = set()
    for i, entry in enumerate(ctx):
        if isinstance(entry, VarBind):
            if entry.name in seen:
                raise RattTypeError(K.Mismatch, f"variable {entry.name} is declared twice in the context")
            seen.add(entry.name)
        elif isinstance(entry, Tick):
            if any(isinstance(e, Tick) for e in ctx[:i]):
                raise RattTypeError(K.SecondTick, "a context may contain at most one tick")
            checker.check_clock(ctx[:i], entry.clock)
        else:
            raise RattTypeError(K.Mismatch, f"unexpected context entry {entry!r}")


def check_clock(delta: InputContext, ctx: TypingContext, theta: ClockExpr) -> None:
    Checker(delta).check_clock(ctx, theta)


def infer(delta: InputContext, ctx: TypingContext, t: Term, stable_vars: Iterable[str] = ()) -> TypeExpr:
    checker = Checker(delta, stable_vars)
    ty = checker.infer(ctx, t)
    checker.finish()
    ty = checker.zonk(ty)
    if _has_meta(ty):
        raise RattTypeError(K.CannotInfer, f"the type of this term is not determined ({ty}); check it against a type")
    return ty


def _has_meta(t: TypeExpr) -> bool:
    return isinstance(t, Meta) or any(_has_meta(c) for c in _type_children(t))


def check(delta: InputContext, ctx: TypingContext, t: Term, expected: TypeExpr, stable_vars: Iterable[str] = ()) -> None:
    checker = Checker(delta, stable_vars)
    checker.check(ctx, t, expected)
    checker.finish()


def def_context(defs) -> TypingContext:
    """Bindings for top-level definitions: each is boxed, so it is usable anywhere."""
    return tuple(VarBind(d.name, Scheme(d.scheme.params, d.scheme.stable, Box(d.scheme.body))) for d in defs)


def check_definition(delta: InputContext, d, earlier) -> None:
    """Check one top-level definition against its declared scheme, with schematic variables rigid."""
    check(delta, def_context(earlier), d.body, d.scheme.body, stable_vars=d.scheme.stable)


def check_reactive_program(program, delta: Optional[InputContext] = None, outputs=None) -> None:
    """Check t : delta => outputs: every definition at its scheme, every output at Sig A_i."""
    delta = program.inputs if delta is None else delta
    outs = program.output_types() if outputs is None else list(outputs)
    for name, ty in outs:
        if not is_value_type(ty):
            raise RattTypeError(K.NotValueType, f"output {name} must have a value type, not {ty}")
    for i, d in enumerate(program.defs):
        check_definition(delta, d, program.defs[:i])
    ctx = def_context(program.defs)
    for o, (name, ty) in zip(program.outputs, outs):
        check(delta, ctx, o.term, Sig(ty))


__all__ = [
    "Checker",
    "check",
    "check_clock",
    "check_ctx",
    "check_definition",
    "check_reactive_program",
    "clock_equal",
    "def_context",
    "infer",
    "select_type",
    "stabilize",
]
