"""Recursive-descent parser for surface programs.

Layout: the first token of a section's first item fixes that section's item column.
A line starting at or left of that column begins a new item; deeper lines continue it.
"""

from __future__ import annotations

from typing import Optional

from ..core import (
    FLOAT,
    NAT,
    UNIT,
    Box,
    ChannelClass,
    DelayAny,
    DelayExist,
    FixRec,
    Fun,
    Prod,
    Sig,
    Sum,
    TypeExpr,
    TypeVar,
    free_type_vars,
)
from ..errors import SyntaxError_
from .lexer import Token, tokenize
from .syntax import (
    PRIMS,
    ChanParam,
    Equation,
    Expr,
    InputDecl,
    OutputDecl,
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
    Signature,
    SLam,
    SLet,
    SNat,
    SNatRec,
    SNever,
    SPair,
    SPrim,
    SRead,
    SSeq,
    STemplate,
    SUnit,
    SurfaceProgram,
    SVar,
    TopDef,
)

CLASS_NAMES = {"p": ChannelClass.PUSH_ONLY, "b": ChannelClass.BUFFERED_ONLY, "bp": ChannelClass.BUFFERED_PUSH}
PREFIX_STARTERS = {"\\", "let", "case", "if", "fix"}
ATOM_STARTERS = {"(", "never", "await", "read", "zero"}
TYPE_CONSTRUCTORS = {"Box", "O", "OAny", "Sig"}
BASE_TYPES = {"Unit": UNIT, "Nat": NAT, "Float": FLOAT}

_EOF = "eof"


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.item_col: Optional[int] = None
        self.item_start = 0

    # -- token plumbing -------------------------------------------------

    def peek(self) -> Token:
        tok = self.tokens[self.i]
        if (
            self.item_col is not None
            and self.i > self.item_start
            and tok.bol
            and tok.col <= self.item_col
            and tok.kind != _EOF
        ):
            return Token(_EOF, "", tok.line, tok.col, True)
        return tok

    def at_item_boundary(self) -> bool:
        return self.peek().kind == _EOF

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind == _EOF:
            raise self.error(set())
        self.i += 1
        return tok

    def error(self, expected: set[str], message: Optional[str] = None) -> SyntaxError_:
        tok = self.peek()
        return SyntaxError_(message or f"unexpected {tok}", tok.pos, expected)

    def is_(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("sym", "kw") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.is_(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.is_(text):
            raise self.error({text})
        return self.advance()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error({"identifier"})
        return self.advance()

    # -- programs ---------------------------------------------------------

    def program(self) -> SurfaceProgram:
        inputs: list[InputDecl] = []
        defs: list[TopDef] = []
        outputs: list[OutputDecl] = []
        seen: set[str] = set()
        while self.tokens[self.i].kind != _EOF:
            self.item_col = None
            tok = self.peek()
            if tok.kind != "kw" or tok.text not in ("inputs", "defs", "outputs"):
                raise self.error({"inputs", "defs", "outputs"})
            if tok.text in seen:
                raise self.error(set(), f"duplicate section {tok.text!r}")
            seen.add(tok.text)
            self.advance()
            first = self.tokens[self.i]
            if first.kind == _EOF or (first.kind == "kw" and first.text in ("inputs", "defs", "outputs") and first.col == 1):
                continue
            self.item_col = first.col
            if first.col == 1:
                raise SyntaxError_("section items must be indented", first.pos, set())
            while self._item_start():
                self.item_start = self.i
                if tok.text == "inputs":
                    inputs.append(self.input_decl())
                elif tok.text == "defs":
                    self.top_def_item(defs)
                else:
                    outputs.append(self.output_decl())
                self._end_item()
        return SurfaceProgram(tuple(inputs), tuple(defs), tuple(outputs))

    def _item_start(self) -> bool:
        tok = self.tokens[self.i]
        return tok.kind != _EOF and tok.col == self.item_col and tok.bol

    def _end_item(self) -> None:
        tok = self.tokens[self.i]
        if tok.kind != _EOF and not (tok.bol and tok.col <= self.item_col):
            raise self.error(set(), f"unexpected {tok} after item")
        if tok.kind != _EOF and tok.col < self.item_col and not (tok.col == 1 and tok.kind == "kw"):
            raise SyntaxError_("inconsistent indentation", tok.pos, set())

    def input_decl(self) -> InputDecl:
        name = self.ident()
        self.expect(":")
        cls_tok = self.ident()
        if cls_tok.text not in CLASS_NAMES:
            raise SyntaxError_(f"unknown channel class {cls_tok.text!r}", cls_tok.pos, set(CLASS_NAMES))
        ty = self.type_()
        return InputDecl(name.text, CLASS_NAMES[cls_tok.text], ty, pos=name.pos)

    def output_decl(self) -> OutputDecl:
        name = self.ident()
        self.expect(":")
        ty = self.type_()
        self.expect("=")
        body = self.expr()
        return OutputDecl(name.text, ty, body, pos=name.pos)

    def top_def_item(self, defs: list[TopDef]) -> None:
        name = self.ident()
        if self.is_(":") or (self.is_("@") and self._chan_param_ahead()):
            params = self.chan_params()
            self.expect(":")
            sig = self.signature()
            if any(d.name == name.text for d in defs):
                raise SyntaxError_(f"duplicate definition {name.text!r}", name.pos, set())
            defs.append(TopDef(name.text, tuple(params), sig, (), pos=name.pos))
            return
        chan_args = []
        while self.accept("@"):
            chan_args.append(self.ident().text)
        patterns = []
        while not self.is_("="):
            patterns.append(self.atomic_pattern())
        self.expect("=")
        body = self.expr()
        eq = Equation(tuple(chan_args), tuple(patterns), body, pos=name.pos)
        if not defs or defs[-1].name != name.text:
            raise SyntaxError_(f"equation for {name.text!r} must follow its type signature", name.pos, set())
        last = defs[-1]
        if last.equations and len(last.equations[0].patterns) != len(patterns):
            raise SyntaxError_(f"equations for {name.text!r} have different numbers of arguments", name.pos, set())
        if len(chan_args) != len(last.chan_params):
            raise SyntaxError_(f"{name.text!r} takes {len(last.chan_params)} channel parameter(s)", name.pos, set())
        defs[-1] = TopDef(last.name, last.chan_params, last.signature, last.equations + (eq,), pos=last.pos)

    def _chan_param_ahead(self) -> bool:
        return self.tokens[self.i + 1].text == "("

    def chan_params(self) -> list[ChanParam]:
        params = []
        while self.accept("@"):
            self.expect("(")
            name = self.ident().text
            self.expect(":")
            cls = None
            tok = self.peek()
            if tok.kind == "ident" and tok.text in CLASS_NAMES:
                self.advance()
                cls = CLASS_NAMES[tok.text]
            ty = self.type_()
            self.expect(")")
            params.append(ChanParam(name, cls, ty))
        return params

    def signature(self) -> Signature:
        stable: list[str] = []
        start = self.i
        if self._constraints_ahead():
            if self.accept("("):
                stable.append(self._stable_constraint())
                while self.accept(","):
                    stable.append(self._stable_constraint())
                self.expect(")")
            else:
                stable.append(self._stable_constraint())
            self.expect("=>")
        else:
            self.i = start
        ty = self.type_()
        free = free_type_vars(ty)
        for name in stable:
            if name not in free:
                raise self.error(set(), f"constraint on {name!r}, which does not occur in the type")
        return Signature(tuple(stable), ty)

    def _constraints_ahead(self) -> bool:
        j = self.i
        depth = 0
        while j < len(self.tokens):
            tok = self.tokens[j]
            if tok.kind == _EOF or (tok.bol and self.item_col is not None and tok.col <= self.item_col and j > self.item_start):
                return False
            if tok.text == "=>":
                return depth == 0
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif tok.text in ("->", "=", "*", "+"):
                if depth == 0:
                    return False
            j += 1
        return False

    def _stable_constraint(self) -> str:
        tok = self.ident()
        if tok.text != "Stable":
            raise SyntaxError_("expected a 'Stable' constraint", tok.pos, {"Stable"})
        return self.ident().text

    # -- types ------------------------------------------------------------

    def type_(self) -> TypeExpr:
        left = self.sum_type()
        if self.accept("->"):
            return Fun(left, self.type_())
        return left

    def sum_type(self) -> TypeExpr:
        left = self.prod_type()
        if self.accept("+"):
            return Sum(left, self.sum_type())
        return left

    def prod_type(self) -> TypeExpr:
        left = self.app_type()
        if self.accept("*"):
            return Prod(left, self.prod_type())
        return left

    def app_type(self) -> TypeExpr:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in TYPE_CONSTRUCTORS:
            self.advance()
            arg = self.app_type()
            return {"Box": Box, "O": DelayExist, "OAny": DelayAny, "Sig": Sig}[tok.text](arg)
        return self.atom_type()

    def atom_type(self) -> TypeExpr:
        tok = self.peek()
        if self.accept("("):
            ty = self.type_()
            self.expect(")")
            return ty
        if tok.kind == "ident":
            self.advance()
            if tok.text in BASE_TYPES:
                return BASE_TYPES[tok.text]
            if tok.text == "Fix":
                binder = self.ident().text
                self.expect(".")
                body = self.type_()
                return FixRec(binder, body)
            return TypeVar(tok.text)
        raise self.error({"type"})

    # -- patterns ---------------------------------------------------------

    def pattern(self) -> Pattern:
        left = self.con_pattern()
        if self.accept("::"):
            return PCons(left, self.pattern(), pos=left.pos)
        return left

    def con_pattern(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "kw":
            if tok.text in ("inl", "inr"):
                self.advance()
                return PInj(1 if tok.text == "inl" else 2, self.atomic_pattern(), pos=tok.pos)
            if tok.text == "suc":
                self.advance()
                return PSuc(self.atomic_pattern(), pos=tok.pos)
            if tok.text in ("Left", "Right", "Both"):
                self.advance()
                a = self.atomic_pattern()
                b = self.atomic_pattern()
                return PSelect(tok.text, a, b, pos=tok.pos)
        return self.atomic_pattern()

    def atomic_pattern(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            if tok.text == "_":
                return PWild(pos=tok.pos)
            return PVar(tok.text, pos=tok.pos)
        if tok.kind == "nat":
            self.advance()
            return PNat(int(tok.text), pos=tok.pos)
        if self.accept("zero"):
            return PNat(0, pos=tok.pos)
        if self.accept("("):
            if self.accept(")"):
                return PUnit(pos=tok.pos)
            first = self.pattern()
            if self.accept(","):
                second = self.pattern()
                self.expect(")")
                return PPair(first, second, pos=tok.pos)
            self.expect(")")
            return first
        raise self.error({"pattern"})

    # -- expressions ------------------------------------------------------

    def expr(self) -> Expr:
        tok = self.peek()
        if tok.kind in ("sym", "kw") and tok.text in PREFIX_STARTERS:
            return self.prefix_form()
        return self.seq()

    def prefix_form(self) -> Expr:
        tok = self.advance()
        if tok.text == "\\":
            params = [self.atomic_pattern()]
            while not self.is_("->"):
                params.append(self.atomic_pattern())
            self.expect("->")
            return SLam(tuple(params), self.expr(), pos=tok.pos)
        if tok.text == "let":
            pat = self.pattern()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return SLet(pat, bound, self.expr(), pos=tok.pos)
        if tok.text == "case":
            scrut = self.expr()
            self.expect("of")
            alts = []
            self.accept("|")
            while True:
                pat = self.pattern()
                self.expect("->")
                alts.append((pat, self.expr()))
                if not self.accept("|"):
                    break
            return SCase(scrut, tuple(alts), pos=tok.pos)
        if tok.text == "if":
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return SIf(cond, then, self.expr(), pos=tok.pos)
        # fix
        binder = self.ident().text
        self.expect("->")
        return SFix(binder, self.expr(), pos=tok.pos)

    def _operand(self, level) -> Expr:
        tok = self.peek()
        if tok.kind in ("sym", "kw") and tok.text in PREFIX_STARTERS:
            return self.prefix_form()
        return level()

    def seq(self) -> Expr:
        first = self.cons()
        if self.is_(";"):
            tok = self.advance()
            return SSeq(first, self.expr(), pos=tok.pos)
        return first

    def cons(self) -> Expr:
        head = self.compare()
        if self.is_("::"):
            tok = self.advance()
            return SCons(head, self._operand(self.cons), pos=tok.pos)
        return head

    def compare(self) -> Expr:
        left = self.additive()
        for op in ("==.", "<.", "<=."):
            if self.is_(op):
                tok = self.advance()
                return SBinOp(op, left, self._operand(self.additive), pos=tok.pos)
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while any(self.is_(op) for op in ("+", "+.", "-.")):
            tok = self.advance()
            left = SBinOp(tok.text, left, self._operand(self.multiplicative), pos=tok.pos)
        return left

    def multiplicative(self) -> Expr:
        left = self.application()
        while self.is_("*.") or self.is_("/."):
            tok = self.advance()
            left = SBinOp(tok.text, left, self._operand(self.application), pos=tok.pos)
        return left

    def application(self) -> Expr:
        head = self.head()
        while self._atom_ahead():
            arg = self.atom()
            head = SApp(head, arg, pos=head.pos)
        return head

    def _atom_ahead(self) -> bool:
        tok = self.peek()
        if tok.kind in ("ident", "nat", "float"):
            return True
        return tok.kind in ("sym", "kw") and tok.text in ATOM_STARTERS

    def head(self) -> Expr:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in PRIMS:
            self.advance()
            args = tuple(self.atom() for _ in range(PRIMS[tok.text]))
            return SPrim(tok.text, args, pos=tok.pos)
        if tok.kind == "kw" and tok.text == "delay":
            self.advance()
            clock = None
            if self.accept("["):
                clock = self.clock()
                self.expect("]")
            return SDelay(clock, self.atom(), pos=tok.pos)
        if tok.kind == "kw" and tok.text == "natrec":
            self.advance()
            base = self.atom()
            lam_tok = self.peek()
            step = self.atom()
            if not (isinstance(step, SLam) and len(step.params) == 2 and all(isinstance(p, (PVar, PWild)) for p in step.params)):
                raise SyntaxError_("natrec step must be a two-argument lambda", lam_tok.pos, {"\\x y -> ..."})
            n = self.atom()
            names = tuple(p.name if isinstance(p, PVar) else "_" for p in step.params)
            return SNatRec(base, names[0], names[1], step.body, n, pos=tok.pos)
        return self.atom()

    def clock(self) -> SClock:
        left = self.clock_atom()
        while self.accept("|"):
            left = SClockUnion(left, self.clock_atom())
        return left

    def clock_atom(self) -> SClock:
        tok = self.peek()
        if self.accept("("):
            inner = self.clock()
            self.expect(")")
            return inner
        if self.accept("await"):
            return SClockAtom(SAwait(self.ident().text, pos=tok.pos))
        if tok.kind == "ident":
            self.advance()
            return SClockAtom(SVar(tok.text, pos=tok.pos))
        raise self.error({"identifier", "await", "("})

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            if self.accept("@"):
                return STemplate(tok.text, self.ident().text, pos=tok.pos)
            return SVar(tok.text, pos=tok.pos)
        if tok.kind == "nat":
            self.advance()
            return SNat(int(tok.text), pos=tok.pos)
        if tok.kind == "float":
            self.advance()
            return SFloat(float(tok.text), pos=tok.pos)
        if self.accept("zero"):
            return SNat(0, pos=tok.pos)
        if self.accept("never"):
            return SNever(pos=tok.pos)
        if self.accept("await"):
            return SAwait(self.ident().text, pos=tok.pos)
        if self.accept("read"):
            return SRead(self.ident().text, pos=tok.pos)
        if self.accept("("):
            if self.accept(")"):
                return SUnit(pos=tok.pos)
            first = self.expr()
            if self.accept(","):
                second = self.expr()
                self.expect(")")
                return SPair(first, second, pos=tok.pos)
            self.expect(")")
            return first
        raise self.error({"expression"})


def parse(text: str) -> SurfaceProgram:
    return Parser(text).program()


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    if p.peek().kind != _EOF:
        raise p.error({"end of input"})
    return e


def parse_type(text: str) -> TypeExpr:
    p = Parser(text)
    t = p.type_()
    if p.peek().kind != _EOF:
        raise p.error({"end of input"})
    return t
