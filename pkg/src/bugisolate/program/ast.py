"""AST node types for the C subset.

Every statement carries a 1-based inclusive line ``span`` and a ``sid``
unique within its program.  Blocks are statements (kind ``block``) but
function bodies are plain statement lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

# ---------------------------------------------------------------- expressions


@dataclass
class Expr:
    line: int


@dataclass
class Name(Expr):
    id: str
    col: int = 0


@dataclass
class IntLit(Expr):
    value: int
    text: str


@dataclass
class FloatLit(Expr):
    text: str


@dataclass
class CharLit(Expr):
    value: int
    text: str


@dataclass
class StringLit(Expr):
    text: str


@dataclass
class Unary(Expr):
    op: str  # - + ! ~ * & ++ -- sizeof
    operand: Expr
    postfix: bool = False


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Assign(Expr):
    op: str  # = += -= ...
    target: Expr
    value: Expr


@dataclass
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass
class Call(Expr):
    func: str
    args: list[Expr]


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Cast(Expr):
    type_tokens: list[str]
    operand: Expr


@dataclass
class SizeofType(Expr):
    type_tokens: list[str]


@dataclass
class InitList(Expr):
    items: list[Expr]


# ---------------------------------------------------------------- declarations


@dataclass
class VarDecl:
    name: str
    specifiers: list[str]  # storage, qualifiers and base type tokens in source order
    pointer: list[list[str]] = field(default_factory=list)  # one qualifier list per '*'
    dims: list[Expr | None] = field(default_factory=list)
    init: Expr | None = None
    line: int = 0
    col: int = 0
    is_global: bool = False

    @property
    def has_init(self) -> bool:
        return self.init is not None

    @property
    def is_pointer(self) -> bool:
        return bool(self.pointer)

    @property
    def is_array(self) -> bool:
        return bool(self.dims)

    @property
    def is_static(self) -> bool:
        return "static" in self.specifiers or "extern" in self.specifiers

    def base_type(self) -> list[str]:
        return [t for t in self.specifiers if t not in STORAGE and t not in QUALIFIERS]


STORAGE = frozenset({"static", "extern", "register", "auto", "inline"})
QUALIFIERS = frozenset({"const", "volatile", "restrict"})
MODIFIERS = frozenset({"long", "short", "signed", "unsigned"})
BASE_TYPES = frozenset({"void", "char", "int", "float", "double", "_Bool"}) | MODIFIERS


# ---------------------------------------------------------------- statements


@dataclass
class Stmt:
    span: tuple[int, int]
    sid: int = field(default=-1, compare=False)

    kind = "stmt"


@dataclass
class Decl(Stmt):
    vars: list[VarDecl] = field(default_factory=list)
    kind = "decl"


@dataclass
class ExprStmt(Stmt):
    expr: Expr | None = None

    @property
    def kind(self) -> str:  # type: ignore[override]
        if isinstance(self.expr, Assign):
            return "assign"
        if isinstance(self.expr, Call):
            return "call"
        return "expr"


@dataclass
class If(Stmt):
    cond: Expr | None = None
    then: Stmt | None = None
    orelse: Stmt | None = None
    kind = "if"


@dataclass
class For(Stmt):
    init: Decl | Expr | None = None
    cond: Expr | None = None
    step: Expr | None = None
    body: Stmt | None = None
    kind = "for"


@dataclass
class While(Stmt):
    cond: Expr | None = None
    body: Stmt | None = None
    kind = "while"


@dataclass
class Goto(Stmt):
    label: str = ""
    kind = "goto"


@dataclass
class Label(Stmt):
    name: str = ""
    kind = "label"


@dataclass
class Return(Stmt):
    value: Expr | None = None
    kind = "return"


@dataclass
class Break(Stmt):
    kind = "break"


@dataclass
class Continue(Stmt):
    kind = "continue"


@dataclass
class Block(Stmt):
    body: list[Stmt] = field(default_factory=list)
    kind = "block"


@dataclass
class Function:
    name: str
    return_type: list[str]
    params: list[VarDecl]
    body: list[Stmt]
    span: tuple[int, int]
    variadic: bool = False


@dataclass
class Prototype:
    name: str
    return_type: list[str]
    params: list[VarDecl]
    span: tuple[int, int]
    variadic: bool = False


TopItem = Union[Decl, Function, Prototype]


@dataclass
class Ast:
    items: list[TopItem]
    line_count: int

    @property
    def globals(self) -> list[VarDecl]:
        return [v for item in self.items if isinstance(item, Decl) for v in item.vars]

    @property
    def functions(self) -> list[Function]:
        return [item for item in self.items if isinstance(item, Function)]

    def function(self, name: str) -> Function:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise UnknownFunction(name)

    def statements(self) -> Iterator[Stmt]:
        """All statements in pre-order, global declarations included."""
        for item in self.items:
            if isinstance(item, Decl):
                yield item
            elif isinstance(item, Function):
                for stmt in item.body:
                    yield from walk_stmt(stmt)

    def declarations(self) -> Iterator[VarDecl]:
        for item in self.items:
            if isinstance(item, Decl):
                yield from item.vars
            elif isinstance(item, Function):
                yield from item.params
                for stmt in item.body:
                    for s in walk_stmt(stmt):
                        if isinstance(s, Decl):
                            yield from s.vars
                        elif isinstance(s, For) and isinstance(s.init, Decl):
                            yield from s.init.vars

    def expressions(self) -> Iterator[Expr]:
        """Every top-level expression in the program (not recursing into it)."""
        for item in self.items:
            if isinstance(item, Decl):
                yield from decl_exprs(item)
            elif isinstance(item, Function):
                for stmt in item.body:
                    for s in walk_stmt(stmt):
                        yield from stmt_exprs(s)


class UnknownFunction(LookupError):
    pass


def child_stmts(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Block):
        return list(stmt.body)
    if isinstance(stmt, If):
        return [s for s in (stmt.then, stmt.orelse) if s is not None]
    if isinstance(stmt, (For, While)):
        return [stmt.body] if stmt.body is not None else []
    return []


def walk_stmt(stmt: Stmt) -> Iterator[Stmt]:
    yield stmt
    for child in child_stmts(stmt):
        yield from walk_stmt(child)


def decl_exprs(decl: Decl) -> Iterator[Expr]:
    for v in decl.vars:
        for d in v.dims:
            if d is not None:
                yield d
        if v.init is not None:
            yield v.init


def stmt_exprs(stmt: Stmt) -> Iterator[Expr]:
    """Expressions owned directly by ``stmt`` (not by nested statements)."""
    if isinstance(stmt, Decl):
        yield from decl_exprs(stmt)
    elif isinstance(stmt, ExprStmt):
        if stmt.expr is not None:
            yield stmt.expr
    elif isinstance(stmt, If):
        if stmt.cond is not None:
            yield stmt.cond
    elif isinstance(stmt, For):
        if isinstance(stmt.init, Decl):
            yield from decl_exprs(stmt.init)
        elif stmt.init is not None:
            yield stmt.init
        for e in (stmt.cond, stmt.step):
            if e is not None:
                yield e
    elif isinstance(stmt, While):
        if stmt.cond is not None:
            yield stmt.cond
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            yield stmt.value


def sub_exprs(expr: Expr) -> list[Expr]:
    if isinstance(expr, Unary):
        return [expr.operand]
    if isinstance(expr, Binary):
        return [expr.left, expr.right]
    if isinstance(expr, Assign):
        return [expr.target, expr.value]
    if isinstance(expr, Ternary):
        return [expr.cond, expr.then, expr.other]
    if isinstance(expr, Call):
        return list(expr.args)
    if isinstance(expr, Index):
        return [expr.base, expr.index]
    if isinstance(expr, Cast):
        return [expr.operand]
    if isinstance(expr, InitList):
        return list(expr.items)
    return []


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    for child in sub_exprs(expr):
        yield from walk_expr(child)


# ---------------------------------------------------------------- JSON dump


def _expr_json(e: Expr, spans: bool) -> dict:
    node: dict = {"kind": type(e).__name__.lower()}
    if spans:
        node["span"] = [e.line, e.line]
    if isinstance(e, Name):
        node["name"] = e.id
    elif isinstance(e, (IntLit, CharLit)):
        node["value"] = e.value
    elif isinstance(e, (FloatLit, StringLit)):
        node["value"] = e.text
    elif isinstance(e, (Unary, Binary, Assign)):
        node["op"] = e.op
        if isinstance(e, Unary) and e.postfix:
            node["postfix"] = True
    elif isinstance(e, Call):
        node["name"] = e.func
    elif isinstance(e, (Cast, SizeofType)):
        node["type"] = " ".join(e.type_tokens)
    node["children"] = [_expr_json(c, spans) for c in sub_exprs(e)]
    return node


def _var_json(v: VarDecl, spans: bool) -> dict:
    node: dict = {
        "kind": "var",
        "name": v.name,
        "type": " ".join(v.specifiers + ["*" + "".join(" " + q for q in quals) for quals in v.pointer]),
        "dims": [None if d is None else _expr_json(d, spans) for d in v.dims],
        "init": None if v.init is None else _expr_json(v.init, spans),
    }
    if spans:
        node["span"] = [v.line, v.line]
    node["children"] = []
    return node


def _stmt_json(s: Stmt, spans: bool) -> dict:
    node: dict = {"kind": s.kind}
    if spans:
        node["span"] = list(s.span)
    children: list = []
    if isinstance(s, Decl):
        children = [_var_json(v, spans) for v in s.vars]
    elif isinstance(s, (Goto, Label)):
        node["name"] = s.label if isinstance(s, Goto) else s.name
    elif isinstance(s, For):
        init = s.init
        children = [
            None if init is None else (_stmt_json(init, spans) if isinstance(init, Decl) else _expr_json(init, spans)),
            None if s.cond is None else _expr_json(s.cond, spans),
            None if s.step is None else _expr_json(s.step, spans),
            None if s.body is None else _stmt_json(s.body, spans),
        ]
    elif isinstance(s, If):
        children = [
            _expr_json(s.cond, spans) if s.cond is not None else None,
            _stmt_json(s.then, spans) if s.then is not None else None,
            _stmt_json(s.orelse, spans) if s.orelse is not None else None,
        ]
    elif isinstance(s, While):
        children = [
            _expr_json(s.cond, spans) if s.cond is not None else None,
            _stmt_json(s.body, spans) if s.body is not None else None,
        ]
    elif isinstance(s, Block):
        children = [_stmt_json(c, spans) for c in s.body]
    else:
        children = [_expr_json(e, spans) for e in stmt_exprs(s)]
    node["children"] = children
    return node


def to_json(ast: Ast, spans: bool = True) -> dict:
    """Stable JSON-ready dump: every node has ``kind``, ``span`` and ``children``.

    With ``spans=False`` the dump is a purely structural fingerprint, which
    is what parse/print round trips are compared on.
    """
    items = []
    for item in ast.items:
        if isinstance(item, Decl):
            items.append(_stmt_json(item, spans))
        else:
            node: dict = {
                "kind": "function" if isinstance(item, Function) else "prototype",
                "name": item.name,
                "type": " ".join(item.return_type),
                "params": [_var_json(p, spans) for p in item.params],
                "variadic": item.variadic,
            }
            if spans:
                node["span"] = list(item.span)
            node["children"] = (
                [_stmt_json(s, spans) for s in item.body] if isinstance(item, Function) else []
            )
            items.append(node)
    root = {"kind": "program", "children": items}
    if spans:
        root["span"] = [1, ast.line_count]
    return root
