"""Reject variants that contain undefined behavior or lose the test oracle.

The built-in checks only reason about constants: a finding is reported when
the offending value is a literal (or folds to one), never by symbolic
reasoning.  Deeper analyses plug in through an external command.
"""

from __future__ import annotations

import enum
import logging
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

from .program.ast import (
    Assign,
    Ast,
    Binary,
    Call,
    Cast,
    CharLit,
    Decl,
    Expr,
    For,
    Function,
    If,
    Index,
    InitList,
    IntLit,
    Name,
    SizeofType,
    Stmt,
    Ternary,
    Unary,
    VarDecl,
    While,
    child_stmts,
    stmt_exprs,
    sub_exprs,
    walk_expr,
    walk_stmt,
)
from .program.lexer import CSyntaxError
from .program.parser import SourceProgram, parse

log = logging.getLogger(__name__)


class UbCategory(str, enum.Enum):
    MEM_ACCESS = "mem_access"
    SHIFT = "shift"
    INDEX_BOUND = "index_bound"
    INITIALIZATION = "initialization"
    DIVISION_BY_ZERO = "division_by_zero"


class Verdict(str, enum.Enum):
    VALID = "valid"
    SEMANTIC_INVALID = "semantic_invalid"
    ORACLE_INVALID = "oracle_invalid"
    UNPARSEABLE = "unparseable"


class AnalyzerFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Finding:
    category: UbCategory
    line: int
    note: str


@dataclass(frozen=True)
class OracleMismatch:
    call: str  # "printf" or "abort"
    expected: int
    found: int


@dataclass(frozen=True)
class ValidationReport:
    verdict: Verdict
    cause: UbCategory | OracleMismatch | None = None
    line: int | None = None
    note: str = ""

    @property
    def is_valid(self) -> bool:
        return self.verdict is Verdict.VALID

    def to_dict(self) -> dict:
        cause = self.cause
        if isinstance(cause, OracleMismatch):
            cause = {"call": cause.call, "expected": cause.expected, "found": cause.found}
        elif isinstance(cause, UbCategory):
            cause = cause.value
        return {"verdict": self.verdict.value, "cause": cause, "line": self.line, "note": self.note}


VALID = ValidationReport(Verdict.VALID)

# --- constant folding ------------------------------------------------------------

_SIZES = {"char": 1, "_Bool": 1, "short": 2, "int": 4, "float": 4, "long": 8, "double": 8}


def fold(e: Expr | None) -> int | None:
    """Integer value of a constant expression, or None."""
    if isinstance(e, (IntLit, CharLit)):
        return e.value
    if isinstance(e, Cast):
        return fold(e.operand)
    if isinstance(e, Unary) and e.op in ("-", "+", "~", "!"):
        v = fold(e.operand)
        if v is None:
            return None
        return {"-": -v, "+": v, "~": ~v, "!": int(not v)}[e.op]
    if isinstance(e, Binary):
        a, b = fold(e.left), fold(e.right)
        if e.op in ("*", "&") and 0 in (a, b):
            return 0  # zero annihilates whatever the other operand is
        if a is None or b is None:
            return None
        try:
            return {
                "+": lambda: a + b,
                "-": lambda: a - b,
                "*": lambda: a * b,
                "/": lambda: int(a / b),
                "%": lambda: a - int(a / b) * b,
                "&": lambda: a & b,
                "|": lambda: a | b,
                "^": lambda: a ^ b,
                "<": lambda: int(a < b),
                ">": lambda: int(a > b),
                "<=": lambda: int(a <= b),
                ">=": lambda: int(a >= b),
                "==": lambda: int(a == b),
                "!=": lambda: int(a != b),
            }[e.op]()
        except (KeyError, ZeroDivisionError):
            return None
    if isinstance(e, Ternary):
        c = fold(e.cond)
        if c is None:
            return None
        return fold(e.then if c else e.other)
    return None


def type_size(tokens: list[str]) -> int:
    longs = tokens.count("long")
    if longs:
        return 8
    for t in ("char", "_Bool", "short", "float", "double"):
        if t in tokens:
            return _SIZES[t]
    return 4


# --- scope resolution --------------------------------------------------------------


class _Scope:
    """Name -> declaration for one function, locals shadowing globals."""

    def __init__(self, ast: Ast, fn: Function | None):
        self.decls: dict[str, VarDecl] = {v.name: v for v in ast.globals}
        if fn is not None:
            for p in fn.params:
                self.decls[p.name] = p
            for top in fn.body:
                for s in walk_stmt(top):
                    for v in _stmt_decls(s):
                        self.decls[v.name] = v

    def get(self, name: str) -> VarDecl | None:
        return self.decls.get(name)


def _stmt_decls(s: Stmt) -> list[VarDecl]:
    if isinstance(s, Decl):
        return s.vars
    if isinstance(s, For) and isinstance(s.init, Decl):
        return s.init.vars
    return []


def _array_dims(v: VarDecl) -> list[int | None]:
    dims = [fold(d) if d is not None else None for d in v.dims]
    if dims and dims[0] is None and isinstance(v.init, InitList):
        dims[0] = len(v.init.items)
    return dims


def _pointee_size(v: VarDecl) -> int:
    if len(v.pointer) > 1:
        return 8
    return type_size(v.specifiers)


def _object_size(v: VarDecl) -> int:
    return 8 if v.is_pointer else type_size(v.specifiers)


# --- built-in checks ---------------------------------------------------------------


@dataclass
class _Sources:
    """Everything ever assigned to each pointer, in source order."""

    values: dict[str, list[Expr]] = field(default_factory=dict)

    def sole(self, name: str) -> Expr | None:
        vals = self.values.get(name, [])
        return vals[0] if len(vals) == 1 else None


def _pointer_sources(ast: Ast) -> _Sources:
    src = _Sources()
    for v in ast.declarations():
        if v.is_pointer:
            src.values.setdefault(v.name, [])
            if v.init is not None:
                src.values[v.name].append(v.init)
    for top in ast.expressions():
        for e in walk_expr(top):
            if isinstance(e, Assign) and isinstance(e.target, Name) and e.target.id in src.values:
                src.values[e.target.id].append(e.value if e.op == "=" else e.target)
            elif isinstance(e, Unary) and e.op in ("++", "--") and isinstance(e.operand, Name):
                if e.operand.id in src.values:
                    src.values[e.operand.id].append(e)
    return src


class _Checker:
    def __init__(self, ast: Ast):
        self.ast = ast
        self.sources = _pointer_sources(ast)
        self.findings: list[Finding] = []

    def add(self, cat: UbCategory, line: int, note: str) -> None:
        self.findings.append(Finding(cat, line, note))

    def run(self) -> list[Finding]:
        gscope = _Scope(self.ast, None)
        for v in self.ast.globals:
            for e in ([v.init] if v.init is not None else []):
                self.expr_tree(e, gscope)
        for fn in self.ast.functions:
            scope = _Scope(self.ast, fn)
            for top in fn.body:
                for s in walk_stmt(top):
                    for e in stmt_exprs(s):
                        self.expr_tree(e, scope)
            self.uninitialized(fn)
        return sorted(self.findings, key=lambda f: f.line)

    def expr_tree(self, top: Expr, scope: _Scope) -> None:
        for e in walk_expr(top):
            if isinstance(e, Binary):
                self.arith(e.op, e.left, e.right, e.line, scope)
            elif isinstance(e, Assign) and e.op != "=":
                self.arith(e.op[:-1], e.target, e.value, e.line, scope)
            if isinstance(e, Index):
                self.index(e, scope)
            elif isinstance(e, Unary) and e.op == "*":
                self.deref(e.operand, e.line, scope)

    def arith(self, op: str, left: Expr, right: Expr, line: int, scope: _Scope) -> None:
        if op in ("/", "%") and fold(right) == 0:
            self.add(UbCategory.DIVISION_BY_ZERO, line, f"'{op}' by constant zero")
        if op in ("<<", ">>"):
            amount = fold(right)
            width = 8 * self.operand_size(left, scope)
            if amount is not None and (amount < 0 or amount >= width):
                self.add(UbCategory.SHIFT, line, f"shift amount {amount} outside [0, {width})")
            lhs = fold(left)
            if op == "<<" and lhs is not None and lhs < 0:
                self.add(UbCategory.SHIFT, line, f"left shift of negative value {lhs}")

    def operand_size(self, e: Expr, scope: _Scope) -> int:
        # Integer promotion: anything narrower than int is shifted as int.
        if isinstance(e, Name):
            v = scope.get(e.id)
            if v is not None and not v.is_pointer:
                return max(4, type_size(v.specifiers))
        if isinstance(e, IntLit) and any(c in e.text.lower() for c in "l"):
            return 8
        if isinstance(e, Cast):
            return max(4, type_size(e.type_tokens))
        return 4

    def index(self, e: Index, scope: _Scope) -> None:
        levels: list[Expr] = []
        base: Expr = e
        while isinstance(base, Index):
            levels.append(base.index)
            base = base.base
        if not isinstance(base, Name):
            return
        v = scope.get(base.id)
        if v is None:
            return
        levels.reverse()
        if v.is_array:
            dims = _array_dims(v)
            # Only the outermost subscript of this access chain is checked here.
            depth = len(levels) - 1
            if depth < len(dims):
                k = fold(levels[depth])
                n = dims[depth]
                if k is not None and n is not None and not 0 <= k < n:
                    self.add(UbCategory.INDEX_BOUND, e.line, f"index {k} outside {base.id}[{n}]")
        elif v.is_pointer and len(levels) == 1:
            self.pointer_offset(base.id, fold(levels[0]), e.line, scope)

    def deref(self, operand: Expr, line: int, scope: _Scope) -> None:
        if isinstance(operand, Name):
            self.pointer_offset(operand.id, 0, line, scope)
        elif isinstance(operand, Binary) and operand.op in ("+", "-") and isinstance(operand.left, Name):
            k = fold(operand.right)
            if k is not None and operand.op == "-":
                k = -k
            self.pointer_offset(operand.left.id, k, line, scope)
        elif fold(operand) is not None:
            self.add(UbCategory.MEM_ACCESS, line, "dereference of a constant address")

    def pointer_offset(self, name: str, offset: int | None, line: int, scope: _Scope) -> None:
        p = scope.get(name)
        if p is None or not p.is_pointer:
            return
        src = self.sources.sole(name)
        if src is None:
            return
        if fold(src) == 0:
            self.add(UbCategory.MEM_ACCESS, line, f"dereference of null pointer '{name}'")
            return
        if offset is None:
            return
        target: VarDecl | None = None
        base_offset = 0
        if isinstance(src, Unary) and src.op == "&" and isinstance(src.operand, Name):
            target = scope.get(src.operand.id)
            if target is not None and target.is_array:
                # &arr points at the whole array; treat like arr.
                base_offset = 0
            elif target is not None:
                size = _object_size(target)
                if offset != 0:
                    self.add(UbCategory.MEM_ACCESS, line, f"'{name}' offset {offset} past scalar '{target.name}'")
                elif _pointee_size(p) > size:
                    self.add(
                        UbCategory.MEM_ACCESS,
                        line,
                        f"{_pointee_size(p)}-byte access through '{name}' to {size}-byte '{target.name}'",
                    )
                return
        elif isinstance(src, Name):
            target = scope.get(src.id)
        if target is None or not target.is_array:
            return
        dims = _array_dims(target)
        if dims and dims[0] is not None:
            k = base_offset + offset
            if not 0 <= k < dims[0]:
                self.add(UbCategory.MEM_ACCESS, line, f"'{name}' offset {k} outside {target.name}[{dims[0]}]")

    def uninitialized(self, fn: Function) -> None:
        """Reads of an uninitialized local scalar before any write in source order."""
        tracked: dict[str, VarDecl] = {}
        written: set[str] = set()

        def defs_in(s: Stmt) -> set[str]:
            out = set()
            for sub in walk_stmt(s):
                for top in stmt_exprs(sub):
                    out |= _written_names(top)
            return out

        def visit_expr(e: Expr | None, loop_defs: set[str]) -> None:
            if e is None:
                return
            for name, line, is_write in _accesses(e):
                if name not in tracked:
                    continue
                if is_write:
                    written.add(name)
                elif name not in written and name not in loop_defs:
                    self.add(UbCategory.INITIALIZATION, line, f"'{name}' read before it is assigned")
                    written.add(name)  # report once

        def visit(s: Stmt, loop_defs: set[str]) -> None:
            if isinstance(s, Decl) or (isinstance(s, For) and isinstance(s.init, Decl)):
                decl = s if isinstance(s, Decl) else s.init
                for v in decl.vars:
                    if v.init is not None:
                        visit_expr(v.init, loop_defs)
                        written.add(v.name)
                        tracked.pop(v.name, None)
                    elif not (v.is_array or v.is_static or "extern" in v.specifiers):
                        tracked[v.name] = v
                        written.discard(v.name)
            if isinstance(s, (For, While)):
                inner = loop_defs | defs_in(s)
                if isinstance(s, For) and not isinstance(s.init, Decl):
                    visit_expr(s.init, loop_defs)
                visit_expr(s.cond, inner)
                if s.body is not None:
                    visit(s.body, inner)
                if isinstance(s, For):
                    visit_expr(s.step, inner)
                return
            if isinstance(s, If):
                visit_expr(s.cond, loop_defs)
                for c in child_stmts(s):
                    visit(c, loop_defs)
                return
            if not isinstance(s, Decl):
                for e in stmt_exprs(s):
                    visit_expr(e, loop_defs)
            for c in child_stmts(s):
                visit(c, loop_defs)

        if any(s.kind in ("goto", "label") for top in fn.body for s in walk_stmt(top)):
            return  # source order says nothing once control can jump backwards
        for top in fn.body:
            visit(top, set())


def _written_names(e: Expr) -> set[str]:
    return {name for name, _, w in _accesses(e) if w}


def _accesses(e: Expr):
    """(name, line, is_write) in evaluation order; address-taken counts as a write."""
    if isinstance(e, Name):
        yield e.id, e.line, False
    elif isinstance(e, Assign):
        if e.op != "=":
            yield from _accesses(e.target)
        else:
            yield from _lvalue_reads(e.target)
        yield from _accesses(e.value)
        root = _root_name(e.target)
        if root is not None:
            yield root, e.line, True
    elif isinstance(e, Unary) and e.op in ("++", "--"):
        yield from _accesses(e.operand)
        root = _root_name(e.operand)
        if root is not None:
            yield root, e.line, True
    elif isinstance(e, Unary) and e.op == "&":
        root = _root_name(e.operand)
        if root is not None:
            yield root, e.line, True
    elif isinstance(e, Unary) and e.op == "sizeof":
        return
    elif isinstance(e, SizeofType):
        return
    else:
        for c in sub_exprs(e):
            yield from _accesses(c)


def _lvalue_reads(target: Expr):
    if isinstance(target, Name):
        return
    if isinstance(target, Index):
        yield from _lvalue_reads(target.base)
        yield from _accesses(target.index)
        return
    if isinstance(target, Unary) and target.op == "*":
        yield from _accesses(target.operand)
        return
    yield from _accesses(target)


def _root_name(e: Expr) -> str | None:
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Index):
        return _root_name(e.base)
    return None


def builtin_findings(ast: Ast) -> list[Finding]:
    return _Checker(ast).run()


# --- external analyzer -------------------------------------------------------------


def run_analyzer(command: str, program: SourceProgram, timeout: float = 60.0) -> list[Finding]:
    """Run ``command <file>`` and parse its ``category:line:note`` lines."""
    fd, path = tempfile.mkstemp(suffix=".c", prefix="candidate-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(program.text)
        try:
            proc = subprocess.run(
                [*shlex.split(command), path], capture_output=True, text=True, timeout=timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise AnalyzerFailure(f"analyzer could not run: {exc}") from exc
    finally:
        os.unlink(path)
    if proc.returncode != 0:
        raise AnalyzerFailure(f"analyzer exited with status {proc.returncode}: {proc.stderr.strip()}")
    return parse_analyzer_output(proc.stdout)


def parse_analyzer_output(text: str) -> list[Finding]:
    findings = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split(":", 2)
        if len(parts) < 2 or not parts[1].strip().isdigit():
            raise AnalyzerFailure(f"malformed analyzer line: {raw!r}")
        try:
            cat = UbCategory(parts[0].strip())
        except ValueError:
            log.warning("ignoring analyzer finding outside the known categories: %s", raw)
            continue
        findings.append(Finding(cat, int(parts[1]), parts[2].strip() if len(parts) > 2 else ""))
    return findings


# --- public API --------------------------------------------------------------------


def semantic_validate(candidate: SourceProgram, analyzer: str | None = None) -> ValidationReport:
    findings = builtin_findings(parse(candidate))
    if not findings and analyzer:
        findings = run_analyzer(analyzer, candidate)
    if not findings:
        return VALID
    first = findings[0]
    return ValidationReport(Verdict.SEMANTIC_INVALID, first.category, first.line, first.note)


ORACLE_FUNCTIONS = {"printf": "printf", "abort": "abort", "__builtin_abort": "abort"}


def oracle_counts(ast: Ast) -> dict[str, int]:
    counts = {"printf": 0, "abort": 0}
    for top in ast.expressions():
        for e in walk_expr(top):
            if isinstance(e, Call) and e.func in ORACLE_FUNCTIONS:
                counts[ORACLE_FUNCTIONS[e.func]] += 1
    return counts


def oracle_validate(candidate: SourceProgram, failing: SourceProgram) -> ValidationReport:
    want = oracle_counts(parse(failing))
    got = oracle_counts(parse(candidate))
    for call in ("printf", "abort"):
        if want[call] != got[call]:
            return ValidationReport(
                Verdict.ORACLE_INVALID,
                OracleMismatch(call, want[call], got[call]),
                note=f"expected {want[call]} {call} call(s), found {got[call]}",
            )
    return VALID


def validate(candidate: SourceProgram, failing: SourceProgram, analyzer: str | None = None) -> ValidationReport:
    """Parse, then semantic checks, then oracle check; stops at the first failure."""
    try:
        parse(candidate)
    except CSyntaxError as exc:
        return ValidationReport(Verdict.UNPARSEABLE, line=exc.line, note=exc.message)
    report = semantic_validate(candidate, analyzer)
    if not report.is_valid:
        return report
    return oracle_validate(candidate, failing)


__all__ = [
    "AnalyzerFailure",
    "Finding",
    "OracleMismatch",
    "UbCategory",
    "ValidationReport",
    "Verdict",
    "builtin_findings",
    "fold",
    "oracle_counts",
    "oracle_validate",
    "parse_analyzer_output",
    "run_analyzer",
    "semantic_validate",
    "validate",
]
