from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SyntaxError_

KEYWORDS = frozenset(
    """
    let in case of if then else fix delay adv select never await read box unbox
    into out suc zero inl inr fst snd natrec inputs defs outputs Left Right Both
    """.split()
)

UNICODE = {
    "λ": "\\",
    "→": "->",
    "⇒": "=>",
    "×": "*",
    "⊔": "|",
    "□": "Box",
    "◯": "O",
    "○": "O",
}

SYMBOLS = sorted(
    [
        "(", ")", ",", "[", "]", "|", "->", "=>", "\\", "=", ":", "::", ";", "@", ".",
        "+", "+.", "-.", "*.", "/.", "==.", "<.", "<=.", "*",
    ],
    key=len,
    reverse=True,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<float>-?\d+\.\d+(?:[eE][+-]?\d+)?|-?\d+[eE][+-]?\d+)
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>"""
    + "|".join(re.escape(s) for s in SYMBOLS)
    + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, nat, float, sym, eof
    text: str
    line: int
    col: int
    bol: bool  # first token on its line

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)

    def __str__(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(text: str) -> list[Token]:
    for uni, ascii_ in UNICODE.items():
        text = text.replace(uni, f" {ascii_} " if ascii_.isalpha() else ascii_)
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    bol = True
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise SyntaxError_(f"unexpected character {text[i]!r}", (line, i - line_start + 1), set())
        kind = m.lastgroup
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
            bol = True
        elif kind in ("ws", "comment"):
            pass
        else:
            tok_text = m.group()
            if kind == "ident" and tok_text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, tok_text, line, col, bol))
            bol = False
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1, True))
    return tokens
