from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, SpecError
from ..values import Rat

KEYWORDS = {
    "system", "sets", "constants", "assumption", "variables", "invariant",
    "initial", "event", "fairness", "permission", "prohibition", "right",
    "obligation", "end", "refinement", "abstract", "concrete", "gluing",
    "refines", "rightwitness", "forall", "exists", "true", "false", "SUM",
    "BOOL", "RAT", "NAT", "SET", "MAP", "of", "to", "dom", "ran", "card",
}

# longest first where prefixes collide
SYMBOLS = [
    "\\subseteq", "\\setminus", "\\notin", "\\union", "\\inter", "\\times", "\\in",
    "<=>", "|->", "(+)", "/\\", "\\/", "=>", "/=", "<=", ">=", "->",
    "(", ")", "{", "}", "[", "]", ",", ":", "|", "=", "<", ">", "+", "-",
    "*", "/", "~", ".", "#",
]

UNICODE = {
    "∈": "\\in", "∉": "\\notin", "⊆": "\\subseteq", "∪": "\\union", "∩": "\\inter",
    "∖": "\\setminus", "×": "\\times", "↦": "|->", "⊕": "(+)", "∧": "/\\", "∨": "\\/",
    "¬": "~", "⇒": "=>", "⇔": "<=>", "≤": "<=", "≥": ">=", "≠": "/=", "→": "->",
    "∀": "forall", "∃": "exists", "Σ": "SUM",
}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[0-9]+(\.[0-9]+)?")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "primed", "number", "kw", "sym", "eof"
    text: str
    line: int
    col: int
    value: object = None

    @property
    def pos(self) -> tuple:
        return (self.line, self.col)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in UNICODE:
            sym = UNICODE[ch]
            kind = "kw" if sym in KEYWORDS else "sym"
            tokens.append(Token(kind, sym, line, col))
            i += 1
            col += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            end = m.end()
            if word in KEYWORDS:
                tokens.append(Token("kw", word, line, col))
            elif end < n and text[end] == "'":
                tokens.append(Token("primed", word, line, col))
                end += 1
            else:
                tokens.append(Token("ident", word, line, col))
            col += end - i
            i = end
            continue
        m = _NUMBER.match(text, i)
        if m:
            lit = m.group(0)
            value = Rat(lit)
            tokens.append(Token("number", lit, line, col, value))
            col += len(lit)
            i = m.end()
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise SpecError([Diagnostic(line, col, f"unexpected character {ch!r}")])
    tokens.append(Token("eof", "", line, col))
    return tokens
