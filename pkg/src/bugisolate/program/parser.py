"""Recursive-descent parser for the supported C subset.

Structs, unions, enums, typedefs, ``switch`` and ``do``/``while`` are
rejected with :class:`CSyntaxError` rather than skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    BASE_TYPES,
    QUALIFIERS,
    STORAGE,
    Assign,
    Ast,
    Binary,
    Block,
    Break,
    Call,
    Cast,
    CharLit,
    Continue,
    Decl,
    Expr,
    ExprStmt,
    FloatLit,
    For,
    Function,
    Goto,
    If,
    Index,
    InitList,
    IntLit,
    Label,
    Name,
    Prototype,
    Return,
    SizeofType,
    Stmt,
    StringLit,
    Ternary,
    Unary,
    VarDecl,
    While,
    walk_stmt,
)
from .lexer import CSyntaxError, Token, tokenize


@dataclass(frozen=True)
class SourceProgram:
    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("program text is empty")

    @property
    def line_count(self) -> int:
        return len(self.text.splitlines())

    @classmethod
    def from_file(cls, path) -> "SourceProgram":
        from pathlib import Path

        p = Path(path)
        return cls(id=p.stem, text=p.read_text(encoding="utf-8"))


UNSUPPORTED = {
    "struct": "structs are not supported",
    "union": "unions are not supported",
    "enum": "enums are not supported",
    "typedef": "typedefs are not supported",
    "switch": "switch statements are not supported",
    "case": "switch statements are not supported",
    "default": "switch statements are not supported",
    "do": "do-while loops are not supported",
}

SPECIFIER_WORDS = STORAGE | QUALIFIERS | BASE_TYPES

ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "^=", "|="})

BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "a": 7, "b": 8, "f": 12, "v": 11}


def _char_value(text: str) -> int:
    body = text[1:-1]
    if not body.startswith("\\"):
        return ord(body[0])
    esc = body[1:]
    if esc[0] in "xX":
        return int(esc[1:], 16)
    if esc[0].isdigit():
        return int(esc, 8)
    return _ESCAPES.get(esc[0], ord(esc[0]))


def _int_value(text: str) -> int:
    digits = text.rstrip("uUlL")
    if digits.lower().startswith("0x"):
        return int(digits, 16)
    if len(digits) > 1 and digits.startswith("0"):
        return int(digits, 8)
    return int(digits)


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    # ------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    @property
    def prev_line(self) -> int:
        return self.tokens[self.pos - 1].line if self.pos else 1

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.tok
        return tok.text == text and tok.kind in ("punct", "keyword")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def error(self, message: str, tok: Token | None = None) -> CSyntaxError:
        tok = tok or self.tok
        return CSyntaxError(tok.line, f"{message} near '{tok}'", tok.text)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected '{text}'")
        return self.advance()

    def check_unsupported(self) -> None:
        tok = self.tok
        if tok.kind == "keyword" and tok.text in UNSUPPORTED:
            raise CSyntaxError(tok.line, UNSUPPORTED[tok.text], tok.text)

    def at_specifier(self) -> bool:
        self.check_unsupported()
        return self.tok.kind == "keyword" and self.tok.text in SPECIFIER_WORDS

    # ------------------------------------------------------------ top level

    def parse_program(self) -> Ast:
        items = []
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            items.append(self.external_declaration())
        line_count = max(1, len(self.text.splitlines()))
        ast = Ast(items=items, line_count=line_count)
        _assign_ids(ast)
        _check_labels(ast)
        return ast

    def specifiers(self) -> list[str]:
        specs: list[str] = []
        while self.at_specifier():
            specs.append(self.advance().text)
        if not any(s in BASE_TYPES for s in specs):
            if self.tok.kind == "ident" and self.peek().kind == "ident":
                raise CSyntaxError(self.tok.line, f"unknown type name '{self.tok.text}'", self.tok.text)
            raise self.error("expected a type specifier")
        return specs

    def pointer(self) -> list[list[str]]:
        levels: list[list[str]] = []
        while self.accept("*"):
            quals: list[str] = []
            while self.tok.kind == "keyword" and self.tok.text in QUALIFIERS:
                quals.append(self.advance().text)
            levels.append(quals)
        return levels

    def external_declaration(self):
        start = self.tok.line
        specs = self.specifiers()
        ptr = self.pointer()
        name_tok = self.tok
        if name_tok.kind != "ident":
            raise self.error("expected an identifier")
        self.advance()
        if self.at("("):
            params, variadic = self.parameters()
            ret = specs + ["*"] * len(ptr)
            if self.accept(";"):
                return Prototype(name_tok.text, ret, params, (start, self.prev_line), variadic)
            if not self.at("{"):
                raise self.error("expected function body")
            body = self.block()
            return Function(name_tok.text, ret, params, body.body, (start, body.span[1]), variadic)
        decls = [self.finish_declarator(specs, ptr, name_tok, is_global=True)]
        while self.accept(","):
            decls.append(self.declarator(specs, is_global=True))
        self.expect(";")
        return Decl(span=(start, self.prev_line), vars=decls)

    def parameters(self) -> tuple[list[VarDecl], bool]:
        self.expect("(")
        params: list[VarDecl] = []
        variadic = False
        if self.at("void") and self.peek().text == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                if self.accept("..."):
                    variadic = True
                    break
                ptok = self.tok
                specs = self.specifiers()
                ptr = self.pointer()
                if self.tok.kind == "ident":
                    name_tok = self.advance()
                    dims = self.dims()
                    params.append(
                        VarDecl(name_tok.text, specs, ptr, dims, None, name_tok.line, name_tok.col)
                    )
                else:
                    params.append(VarDecl("", specs, ptr, self.dims(), None, ptok.line, ptok.col))
                if not self.accept(","):
                    break
        self.expect(")")
        return params, variadic

    def dims(self) -> list[Expr | None]:
        dims: list[Expr | None] = []
        while self.accept("["):
            if self.accept("]"):
                dims.append(None)
                continue
            dims.append(self.conditional())
            self.expect("]")
        return dims

    def declarator(self, specs: list[str], is_global: bool) -> VarDecl:
        ptr = self.pointer()
        name_tok = self.tok
        if name_tok.kind != "ident":
            raise self.error("expected an identifier")
        self.advance()
        return self.finish_declarator(specs, ptr, name_tok, is_global)

    def finish_declarator(self, specs, ptr, name_tok: Token, is_global: bool) -> VarDecl:
        if self.at("("):
            raise self.error("nested function declarations are not supported")
        dims = self.dims()
        init = None
        if self.accept("="):
            init = self.initializer()
        return VarDecl(name_tok.text, list(specs), ptr, dims, init, name_tok.line, name_tok.col, is_global)

    def initializer(self) -> Expr:
        if self.at("{"):
            line = self.advance().line
            items: list[Expr] = []
            while not self.at("}"):
                items.append(self.initializer())
                if not self.accept(","):
                    break
            self.expect("}")
            return InitList(line, items)
        return self.assignment()

    # ------------------------------------------------------------ statements

    def block(self) -> Block:
        start = self.expect("{").line
        body: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            body.append(self.statement())
        self.expect("}")
        return Block(span=(start, self.prev_line), body=body)

    def local_declaration(self) -> Decl:
        start = self.tok.line
        specs = self.specifiers()
        decls = [self.declarator(specs, is_global=False)]
        while self.accept(","):
            decls.append(self.declarator(specs, is_global=False))
        self.expect(";")
        return Decl(span=(start, self.prev_line), vars=decls)

    def statement(self) -> Stmt:
        self.check_unsupported()
        tok = self.tok
        start = tok.line
        if self.at("{"):
            return self.block()
        if self.at_specifier():
            return self.local_declaration()
        if tok.kind == "keyword":
            word = tok.text
            if word == "if":
                self.advance()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                then = self.statement()
                orelse = self.statement() if self.accept("else") else None
                return If(span=(start, self.prev_line), cond=cond, then=then, orelse=orelse)
            if word == "while":
                self.advance()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                body = self.statement()
                return While(span=(start, self.prev_line), cond=cond, body=body)
            if word == "for":
                self.advance()
                self.expect("(")
                init: Decl | Expr | None = None
                if self.at_specifier():
                    init = self.local_declaration()
                else:
                    if not self.at(";"):
                        init = self.expression()
                    self.expect(";")
                cond = None if self.at(";") else self.expression()
                self.expect(";")
                step = None if self.at(")") else self.expression()
                self.expect(")")
                body = self.statement()
                return For(span=(start, self.prev_line), init=init, cond=cond, step=step, body=body)
            if word == "goto":
                self.advance()
                label = self.tok
                if label.kind != "ident":
                    raise self.error("expected a label name")
                self.advance()
                self.expect(";")
                return Goto(span=(start, self.prev_line), label=label.text)
            if word == "return":
                self.advance()
                value = None if self.at(";") else self.expression()
                self.expect(";")
                return Return(span=(start, self.prev_line), value=value)
            if word == "break":
                self.advance()
                self.expect(";")
                return Break(span=(start, self.prev_line))
            if word == "continue":
                self.advance()
                self.expect(";")
                return Continue(span=(start, self.prev_line))
            if word == "else":
                raise self.error("'else' without a matching 'if'")
        if tok.kind == "ident" and self.peek().text == ":" and self.peek().kind == "punct":
            self.advance()
            self.advance()
            return Label(span=(start, start), name=tok.text)
        if tok.kind == "ident" and self.peek().kind == "ident":
            raise CSyntaxError(tok.line, f"unknown type name '{tok.text}'", tok.text)
        if self.accept(";"):
            return ExprStmt(span=(start, start), expr=None)
        expr = self.expression()
        self.expect(";")
        return ExprStmt(span=(start, self.prev_line), expr=expr)

    # ------------------------------------------------------------ expressions

    def expression(self) -> Expr:
        expr = self.assignment()
        while self.at(","):
            line = self.advance().line
            expr = Binary(line, ",", expr, self.assignment())
        return expr

    def assignment(self) -> Expr:
        left = self.conditional()
        if self.tok.kind == "punct" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            if not isinstance(left, (Name, Index)) and not (isinstance(left, Unary) and left.op == "*"):
                raise CSyntaxError(left.line, "invalid assignment target", op)
            return Assign(left.line, op, left, self.assignment())
        return left

    def conditional(self) -> Expr:
        cond = self.binary(1)
        if self.accept("?"):
            then = self.expression()
            self.expect(":")
            other = self.conditional()
            return Ternary(cond.line, cond, then, other)
        return cond

    def binary(self, min_prec: int) -> Expr:
        left = self.cast()
        while True:
            tok = self.tok
            prec = BINARY_PRECEDENCE.get(tok.text) if tok.kind == "punct" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.binary(prec + 1)
            left = Binary(left.line, tok.text, left, right)

    def type_name(self) -> list[str]:
        specs = self.specifiers()
        ptr = self.pointer()
        return specs + ["*"] * len(ptr)

    def cast(self) -> Expr:
        if self.at("("):
            nxt = self.peek()
            if nxt.kind == "keyword" and (nxt.text in SPECIFIER_WORDS or nxt.text in UNSUPPORTED):
                line = self.advance().line
                type_tokens = self.type_name()
                self.expect(")")
                return Cast(line, type_tokens, self.cast())
        return self.unary()

    def unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "punct" and tok.text in ("++", "--"):
            self.advance()
            return Unary(tok.line, tok.text, self.unary())
        if tok.kind == "punct" and tok.text in ("-", "+", "!", "~", "*", "&"):
            self.advance()
            return Unary(tok.line, tok.text, self.cast())
        if tok.kind == "keyword" and tok.text == "sizeof":
            self.advance()
            if self.at("(") and self.peek().kind == "keyword" and self.peek().text in SPECIFIER_WORDS:
                self.advance()
                type_tokens = self.type_name()
                self.expect(")")
                return SizeofType(tok.line, type_tokens)
            return Unary(tok.line, "sizeof", self.unary())
        return self.postfix(self.primary())

    def postfix(self, expr: Expr) -> Expr:
        while True:
            if self.at("["):
                self.advance()
                index = self.expression()
                self.expect("]")
                expr = Index(expr.line, expr, index)
            elif self.at("("):
                if not isinstance(expr, Name):
                    raise self.error("only direct function calls are supported")
                self.advance()
                args: list[Expr] = []
                if not self.at(")"):
                    args.append(self.assignment())
                    while self.accept(","):
                        args.append(self.assignment())
                self.expect(")")
                expr = Call(expr.line, expr.id, args)
            elif self.tok.kind == "punct" and self.tok.text in ("++", "--"):
                op = self.advance().text
                expr = Unary(expr.line, op, expr, postfix=True)
            elif self.at(".") or self.at("->"):
                raise self.error("member access is not supported")
            else:
                return expr

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "ident":
            self.advance()
            return Name(tok.line, tok.text, tok.col)
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.line, _int_value(tok.text), tok.text)
        if tok.kind == "float":
            self.advance()
            return FloatLit(tok.line, tok.text)
        if tok.kind == "char":
            self.advance()
            return CharLit(tok.line, _char_value(tok.text), tok.text)
        if tok.kind == "string":
            self.advance()
            text = tok.text
            while self.tok.kind == "string":  # adjacent literal concatenation
                text = text[:-1] + self.advance().text[1:]
            return StringLit(tok.line, text)
        if self.accept("("):
            expr = self.expression()
            self.expect(")")
            return expr
        self.check_unsupported()
        raise self.error("expected an expression")


def _assign_ids(ast: Ast) -> None:
    for sid, stmt in enumerate(ast.statements()):
        stmt.sid = sid


def _check_labels(ast: Ast) -> None:
    for fn in ast.functions:
        labels: dict[str, Label] = {}
        gotos: list[Goto] = []
        for top in fn.body:
            for s in walk_stmt(top):
                if isinstance(s, Label):
                    if s.name in labels:
                        raise CSyntaxError(s.span[0], f"duplicate label '{s.name}'", s.name)
                    labels[s.name] = s
                elif isinstance(s, Goto):
                    gotos.append(s)
        for g in gotos:
            if g.label not in labels:
                raise CSyntaxError(g.span[0], f"goto to undefined label '{g.label}'", g.label)


def parse(program: SourceProgram | str) -> Ast:
    """Parse a program; raises :class:`CSyntaxError` on anything outside the subset."""
    text = program.text if isinstance(program, SourceProgram) else program
    return Parser(text).parse_program()
