"""Syntactic feature counts used to match scenario rules against variants."""

from __future__ import annotations

from collections import Counter

from ..program.ast import (
    MODIFIERS,
    QUALIFIERS,
    Assign,
    Ast,
    Binary,
    Call,
    CharLit,
    IntLit,
    Name,
    Unary,
    walk_expr,
)


def features(ast: Ast) -> Counter:
    """Counts keyed ``stmt:<kind>``, ``qual:<q>``, ``mod:<m>``, ``const:<v>``,
    ``binop:<op>``, ``assign:<op>``, ``unop:<op>``, ``postop:<op>``,
    ``call:<name>`` and ``var:<name>``."""
    c: Counter = Counter()
    for s in ast.statements():
        c[f"stmt:{s.kind}"] += 1
    for v in ast.declarations():
        for tok in v.specifiers + [q for quals in v.pointer for q in quals]:
            if tok in QUALIFIERS:
                c[f"qual:{tok}"] += 1
            elif tok in MODIFIERS:
                c[f"mod:{tok}"] += 1
    for top in ast.expressions():
        for e in walk_expr(top):
            if isinstance(e, (IntLit, CharLit)):
                c[f"const:{e.value}"] += 1
            elif isinstance(e, Binary):
                c[f"binop:{e.op}"] += 1
            elif isinstance(e, Assign):
                c[f"assign:{e.op}"] += 1
            elif isinstance(e, Unary):
                c[f"{'postop' if e.postfix else 'unop'}:{e.op}"] += 1
            elif isinstance(e, Call):
                c[f"call:{e.func}"] += 1
            elif isinstance(e, Name):
                c[f"var:{e.id}"] += 1
    return c

