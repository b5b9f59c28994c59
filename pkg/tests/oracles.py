"""Independent brute-force recomputations used as test oracles.

Nothing here imports the package under test.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

_TOK = re.compile(
    r"//[^\n]*|/\*.*?\*/|\"(?:\\.|[^\"\\])*\"|'(?:\\.|[^'\\])*'"
    r"|[A-Za-z_]\w*|\d+\w*|<<=|>>=|\+\+|--|<<|>>|&&|\|\||[-+*/%&|^<>=!]=|\S",
    re.S,
)
TYPE_WORDS = {
    "int", "char", "short", "long", "signed", "unsigned", "void", "float", "double",
    "const", "volatile", "restrict", "static", "extern", "register", "_Bool",
}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}
KEYWORDS = TYPE_WORDS | {"if", "else", "for", "while", "return", "goto", "break", "continue", "sizeof"}


def c_tokens(text: str) -> list[str]:
    return [t for t in _TOK.findall(text) if not t.startswith(("//", "/*"))]


def _is_operand_end(tok: str) -> bool:
    return tok in (")", "]") or tok[0].isalnum() or tok[0] == "_" and tok not in KEYWORDS


def _skip_brackets(toks: list[str], i: int) -> int:
    """Index just past the run of ``[...]`` groups starting at ``i``."""
    while i < len(toks) and toks[i] == "[":
        depth = 0
        while True:
            if toks[i] == "[":
                depth += 1
            elif toks[i] == "]":
                depth -= 1
            i += 1
            if depth == 0:
                break
    return i


def _declarators(toks: list[str]):
    """Positions of declarator names, names of pointers, and function names."""
    positions: dict[int, str] = {}
    pointers: set[str] = set()
    functions: set[str] = set()
    in_decl = False
    expect_name = False
    saw_star = False
    depth = 0  # () and {} nesting relative to the declaration
    for i, t in enumerate(toks):
        if in_decl:
            if t in ("(", "{"):
                if expect_name is False and toks[i - 1] != "=" and depth == 0 and t == "{":
                    in_decl = False
                    continue
                depth += 1
                continue
            if t in (")", "}"):
                if depth == 0:
                    in_decl = False
                else:
                    depth -= 1
                continue
            if depth == 0 and t == ";":
                in_decl = False
                continue
            if depth == 0 and t == ",":
                expect_name, saw_star = True, False
                continue
            if expect_name and t == "*":
                saw_star = True
                continue
            if expect_name and t in TYPE_WORDS:
                continue
            if expect_name and re.match(r"[A-Za-z_]", t):
                expect_name = False
                if i + 1 < len(toks) and toks[i + 1] == "(":
                    functions.add(t)
                    in_decl = False
                    continue
                positions[i] = t
                if saw_star:
                    pointers.add(t)
            continue
        if t in TYPE_WORDS:
            in_decl, expect_name, saw_star, depth = True, True, False, 0
    return positions, pointers, functions


def brute_force_def_use(text: str) -> dict[str, tuple[int, int]]:
    """Per declared variable: (defs, uses), counted directly on tokens."""
    toks = c_tokens(text)
    positions, pointers, _ = _declarators(toks)
    names = set(positions.values())

    sources: dict[str, list[list[str]]] = {p: [] for p in pointers}
    for i, t in enumerate(toks):
        if t in pointers and i + 1 < len(toks) and toks[i + 1] == "=":
            if i in positions or not (i > 0 and toks[i - 1] == "*"):
                j = i + 2
                expr = []
                while toks[j] not in (";", ","):
                    expr.append(toks[j])
                    j += 1
                sources[t].append(expr)
    alias = {}
    for p, srcs in sources.items():
        if len(srcs) == 1 and len(srcs[0]) == 2 and srcs[0][0] == "&" and srcs[0][1] in names:
            alias[p] = srcs[0][1]

    counts = {n: [0, 0] for n in names}
    for i, t in enumerate(toks):
        if t not in names:
            continue
        prev = toks[i - 1] if i > 0 else ";"
        prev2 = toks[i - 2] if i > 1 else ";"
        if i in positions:
            if toks[_skip_brackets(toks, i + 1)] == "=":
                counts[t][0] += 1
            continue
        if prev == "&" and not _is_operand_end(prev2):
            continue
        target, op_at = t, i - 1
        if prev == "*" and not _is_operand_end(prev2):
            target, op_at = alias.get(t, t), i - 2
        after = toks[_skip_brackets(toks, i + 1)]
        prefix = op_at >= 0 and toks[op_at] in ("++", "--")
        if after == "=":
            counts[target][0] += 1
        elif after in ASSIGN_OPS or after in ("++", "--") or prefix:
            counts[target][0] += 1
            counts[target][1] += 1
        else:
            counts[target][1] += 1
    return {n: (d, u) for n, (d, u) in counts.items()}


# --- fault localization --------------------------------------------------------


def sbfl_from_definition(failing: set, passing: list[set]):
    """Return ({file: score}, {file: rank}) computed straight from the formulas."""
    files = sorted({f for f, _ in failing})
    scores = {}
    for f in files:
        stmts = [s for s in failing if s[0] == f]
        total = 0.0
        for s in sorted(stmts):
            ep = sum(1 for p in passing if s in p)
            total += 1 / math.sqrt(1 + ep)
        scores[f] = total / len(stmts)
    ranks = {}
    for f in files:
        key = round(scores[f], 12)
        ranks[f] = sum(1 for g in files if round(scores[g], 12) >= key)
    return scores, ranks


# --- spectra ---------------------------------------------------------------------


def jaccard_fraction(a: set, b: set) -> Fraction:
    union = a | b
    if not union:
        return Fraction(0)
    return 1 - Fraction(len(a & b), len(union))


def quality_fraction(failing: set, passing: list[set], alpha: Fraction) -> Fraction:
    n = len(passing)
    sim = sum((1 - jaccard_fraction(p, failing) for p in passing), Fraction(0)) / n
    if n == 1:
        div = Fraction(0)
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        div = sum((jaccard_fraction(passing[i], passing[j]) for i, j in pairs), Fraction(0)) / len(pairs)
    return n * (alpha * div + (1 - alpha) * sim)
