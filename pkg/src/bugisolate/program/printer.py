"""Render an AST back to C source.

Nested operator expressions are always parenthesized, so re-parsing the
output yields the same tree regardless of precedence.
"""

from __future__ import annotations

from .ast import (
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
)

_ATOMS = (Name, IntLit, FloatLit, CharLit, StringLit, Call, Index, SizeofType)


def _wrap(e: Expr) -> str:
    text = expr_str(e)
    return text if isinstance(e, _ATOMS) else f"({text})"


def expr_str(e: Expr) -> str:
    if isinstance(e, Name):
        return e.id
    if isinstance(e, (IntLit, CharLit)):
        return e.text
    if isinstance(e, (FloatLit, StringLit)):
        return e.text
    if isinstance(e, Unary):
        if e.postfix:
            return f"{_wrap(e.operand)}{e.op}"
        if e.op == "sizeof":
            return f"sizeof {_wrap(e.operand)}"
        return f"{e.op}{_wrap(e.operand)}"
    if isinstance(e, Binary):
        sep = ", " if e.op == "," else f" {e.op} "
        return f"{_wrap(e.left)}{sep}{_wrap(e.right)}"
    if isinstance(e, Assign):
        return f"{_wrap(e.target)} {e.op} {_wrap(e.value)}"
    if isinstance(e, Ternary):
        return f"{_wrap(e.cond)} ? {_wrap(e.then)} : {_wrap(e.other)}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_arg(a) for a in e.args)})"
    if isinstance(e, Index):
        return f"{_wrap(e.base)}[{expr_str(e.index)}]"
    if isinstance(e, Cast):
        return f"({' '.join(e.type_tokens)}){_wrap(e.operand)}"
    if isinstance(e, SizeofType):
        return f"sizeof({' '.join(e.type_tokens)})"
    if isinstance(e, InitList):
        return "{" + ", ".join(_arg(i) for i in e.items) + "}"
    raise TypeError(f"unknown expression {type(e).__name__}")


def _arg(e: Expr) -> str:
    # Comma expressions inside argument lists need their own parentheses.
    return _wrap(e) if isinstance(e, Binary) and e.op == "," else expr_str(e)


def _declarator(v: VarDecl) -> str:
    stars = "".join("*" + "".join(f"{q} " for q in quals) for quals in v.pointer)
    dims = "".join("[]" if d is None else f"[{expr_str(d)}]" for d in v.dims)
    init = f" = {_arg(v.init)}" if v.init is not None else ""
    return f"{stars}{v.name}{dims}{init}"


def decl_str(decl: Decl) -> str:
    """One declaration statement; declarators sharing specifiers stay together."""
    parts = []
    for v in decl.vars:
        if parts and parts[-1][0] == v.specifiers:
            parts[-1][1].append(_declarator(v))
        else:
            parts.append((v.specifiers, [_declarator(v)]))
    return " ".join(f"{' '.join(specs)} {', '.join(ds)};" for specs, ds in parts)


def _params(params: list[VarDecl], variadic: bool) -> str:
    out = []
    for p in params:
        out.append(f"{' '.join(p.specifiers)} {_declarator(p)}".rstrip())
    if variadic:
        out.append("...")
    return ", ".join(out) if out else "void"


def stmt_lines(s: Stmt, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(s, Block):
        return [pad + "{"] + [ln for c in s.body for ln in stmt_lines(c, indent + 1)] + [pad + "}"]
    if isinstance(s, Decl):
        return [pad + decl_str(s)]
    if isinstance(s, ExprStmt):
        return [pad + (expr_str(s.expr) if s.expr is not None else "") + ";"]
    if isinstance(s, If):
        lines = [pad + f"if ({expr_str(s.cond)})"] + _body(s.then, indent)
        if s.orelse is not None:
            lines += [pad + "else"] + _body(s.orelse, indent)
        return lines
    if isinstance(s, While):
        return [pad + f"while ({expr_str(s.cond)})"] + _body(s.body, indent)
    if isinstance(s, For):
        if isinstance(s.init, Decl):
            init = decl_str(s.init)
        else:
            init = (expr_str(s.init) if s.init is not None else "") + ";"
        cond = expr_str(s.cond) if s.cond is not None else ""
        step = expr_str(s.step) if s.step is not None else ""
        return [pad + f"for ({init} {cond}; {step})".replace("( ", "(").replace(" ;", ";")] + _body(s.body, indent)
    if isinstance(s, Goto):
        return [pad + f"goto {s.label};"]
    if isinstance(s, Label):
        return [pad + f"{s.name}:"]
    if isinstance(s, Return):
        return [pad + ("return;" if s.value is None else f"return {expr_str(s.value)};")]
    if isinstance(s, Break):
        return [pad + "break;"]
    if isinstance(s, Continue):
        return [pad + "continue;"]
    raise TypeError(f"unknown statement {type(s).__name__}")


def _body(s: Stmt | None, indent: int) -> list[str]:
    if s is None:
        return ["  " * (indent + 1) + ";"]
    if isinstance(s, Block):
        return stmt_lines(s, indent)
    return stmt_lines(s, indent + 1)


def to_source(ast: Ast) -> str:
    lines: list[str] = []
    for item in ast.items:
        if isinstance(item, Decl):
            lines.append(decl_str(item))
        elif isinstance(item, Prototype):
            lines.append(f"{' '.join(item.return_type)} {item.name}({_params(item.params, item.variadic)});")
        elif isinstance(item, Function):
            lines.append(f"{' '.join(item.return_type)} {item.name}({_params(item.params, item.variadic)}) {{")
            for s in item.body:
                lines.extend(stmt_lines(s, 1))
            lines.append("}")
    return "\n".join(lines) + "\n"
