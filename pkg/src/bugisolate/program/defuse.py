"""Whole-program def/use counting per variable name.

A def is a declaration with an initializer, an assignment or
compound-assignment target, an increment/decrement target, or a write
through a pointer.  Pointer writes are credited to the pointee only when
the pointer's one and only source is a plain ``&x``; otherwise they are
credited to the pointer itself.  ``&x`` on its own is neither a def nor a
use of ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    Assign,
    Ast,
    Binary,
    Decl,
    Expr,
    For,
    Function,
    Index,
    Name,
    Unary,
    VarDecl,
    sub_exprs,
    walk_stmt,
    stmt_exprs,
)


@dataclass
class VarStats:
    name: str
    def_count: int = 0
    use_count: int = 0
    line: int = 0
    col: int = 0
    is_global: bool = False

    @property
    def complexity(self) -> int:
        return self.def_count + self.use_count


class DefUseTable(dict):
    """Mapping ``name -> VarStats``; one entry per declared name."""

    def ordered(self) -> list[VarStats]:
        return sorted(self.values(), key=lambda v: (v.line, v.col))


def pointer_aliases(ast: Ast) -> dict[str, str]:
    """Pointers whose sole source in the program is ``&x`` map to ``x``."""
    decls = {v.name: v for v in ast.declarations()}
    sources: dict[str, list[Expr]] = {v.name: [] for v in decls.values() if v.is_pointer}
    for v in ast.declarations():
        if v.is_pointer and v.init is not None:
            sources[v.name].append(v.init)
    for top in ast.expressions():
        for e in _walk(top):
            if isinstance(e, Assign) and isinstance(e.target, Name) and e.target.id in sources:
                src = e.value if e.op == "=" else e.target
                sources[e.target.id].append(src)
    aliases = {}
    for name, srcs in sources.items():
        if len(srcs) != 1:
            continue
        src = srcs[0]
        if isinstance(src, Unary) and src.op == "&" and isinstance(src.operand, Name):
            if src.operand.id in decls:
                aliases[name] = src.operand.id
    return aliases


def _walk(e: Expr):
    yield e
    for c in sub_exprs(e):
        yield from _walk(c)


class _Counter:
    def __init__(self, table: DefUseTable, aliases: dict[str, str]):
        self.table = table
        self.aliases = aliases

    def bump(self, name: str, defs: int = 0, uses: int = 0) -> None:
        stats = self.table.get(name)
        if stats is None:  # function names, undeclared identifiers
            return
        stats.def_count += defs
        stats.use_count += uses

    def read(self, e: Expr) -> None:
        if isinstance(e, Name):
            self.bump(e.id, uses=1)
        elif isinstance(e, Assign):
            self.write(e.target, compound=e.op != "=")
            self.read(e.value)
        elif isinstance(e, Unary) and e.op in ("++", "--"):
            self.write(e.operand, compound=True)
        elif isinstance(e, Unary) and e.op == "&":
            self.address_of(e.operand)
        elif isinstance(e, Unary) and e.op == "*" and isinstance(e.operand, Name):
            p = e.operand.id
            self.bump(self.aliases.get(p, p), uses=1)
        elif isinstance(e, Unary) and e.op == "sizeof":
            pass  # unevaluated operand
        else:
            for c in sub_exprs(e):
                self.read(c)

    def address_of(self, e: Expr) -> None:
        if isinstance(e, Name):
            return
        if isinstance(e, Index):
            self.address_of(e.base)
            self.read(e.index)
            return
        self.read(e)

    def write(self, target: Expr, compound: bool) -> None:
        uses = 1 if compound else 0
        if isinstance(target, Name):
            self.bump(target.id, defs=1, uses=uses)
        elif isinstance(target, Index):
            root = target
            while isinstance(root, Index):
                self.read(root.index)
                root = root.base
            if isinstance(root, Name):
                self.bump(root.id, defs=1, uses=uses)
            else:
                self.read(root)
        elif isinstance(target, Unary) and target.op == "*":
            inner = target.operand
            if isinstance(inner, Name):
                p = inner.id
                self.bump(self.aliases.get(p, p), defs=1, uses=uses)
            elif (
                isinstance(inner, Binary)
                and inner.op in ("+", "-")
                and isinstance(inner.left, Name)
            ):
                self.bump(inner.left.id, defs=1)
                self.read(inner.right)
            else:
                self.read(inner)
        else:
            self.read(target)

    def decl(self, v: VarDecl) -> None:
        for d in v.dims:
            if d is not None:
                self.read(d)
        if v.init is not None:
            self.bump(v.name, defs=1)
            self.read(v.init)


def def_use(ast: Ast) -> DefUseTable:
    table = DefUseTable()
    for v in ast.declarations():
        if v.name and v.name not in table:
            table[v.name] = VarStats(v.name, line=v.line, col=v.col, is_global=v.is_global)
    counter = _Counter(table, pointer_aliases(ast))
    for item in ast.items:
        if isinstance(item, Decl):
            for v in item.vars:
                counter.decl(v)
        elif isinstance(item, Function):
            for top in item.body:
                for s in walk_stmt(top):
                    if isinstance(s, Decl):
                        for v in s.vars:
                            counter.decl(v)
                        continue
                    if isinstance(s, For) and isinstance(s.init, Decl):
                        for v in s.init.vars:
                            counter.decl(v)
                        exprs = [x for x in (s.cond, s.step) if x is not None]
                    else:
                        exprs = list(stmt_exprs(s))
                    for e in exprs:
                        counter.read(e)
    return table
