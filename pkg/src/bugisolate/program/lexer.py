"""Tokenizer for the C subset accepted by the parser."""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    {
        "auto", "break", "case", "char", "const", "continue", "default", "do",
        "double", "else", "enum", "extern", "float", "for", "goto", "if",
        "int", "long", "register", "restrict", "return", "short", "signed",
        "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned",
        "void", "volatile", "while", "_Bool", "inline",
    }
)

# Longest punctuators first so the alternation is greedy.
PUNCTUATORS = (
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    "[", "]", "(", ")", "{", "}", ".", "&", "*", "+", "-", "~", "!", "/",
    "%", "<", ">", "^", "|", "?", ":", ";", "=", ",",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<directive>\#[^\n]*)
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fFlL]?|\d+[eE][+-]?\d+[fFlL]?)
  | (?P<int>(?:0[xX][0-9a-fA-F]+|\d+)[uUlL]*)
  | (?P<char>'(?:\\.|[^'\\\n])+')
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in PUNCTUATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | float | char | string | punct | eof
    text: str
    line: int
    col: int

    def __str__(self) -> str:
        return self.text if self.kind != "eof" else "<end of input>"


class CSyntaxError(SyntaxError):
    """Input outside the supported C subset.

    ``line`` is 1-based; ``token`` is the offending token text.
    """

    def __init__(self, line: int, message: str, token: str | None = None):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message
        self.token = token


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens; comments and ``#`` lines are dropped."""
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise CSyntaxError(line, f"unexpected character {text[pos]!r}", text[pos])
        kind = m.lastgroup
        lexeme = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "block_comment":
            newlines = lexeme.count("\n")
            if newlines:
                line += newlines
                line_start = pos + lexeme.rfind("\n") + 1
        elif kind in ("ws", "line_comment", "directive"):
            pass
        elif kind == "ident":
            tokens.append(Token("keyword" if lexeme in KEYWORDS else "ident", lexeme, line, col))
        else:
            tokens.append(Token(kind, lexeme, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, 1))
    return tokens
