"""Data-flow and control-flow complexity, and mutation target selection.

Variables are ranked by ``defs + uses``.  Statements are scored by the
cyclomatic complexity (edges - nodes + 2) of the chain of branch nodes
that govern them: a statement nested under k two-way decisions scores
k + 1.  This is the value the running cyclomatic count has reached when
a structured walk of the function arrives at the statement, so the
deepest loop nest scores highest, while a region never scores below what
it did before an ``if`` was added to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .program.ast import Ast, Call, For, If, Stmt, While, child_stmts, stmt_exprs, walk_expr
from .program.cfg import Cfg, all_cfgs
from .program.defuse import DefUseTable

ORACLE_CALLS = frozenset({"printf", "abort"})

# Comp-1 below or at this many variables, Comp-3 above it.
SMALL_PROGRAM_VARIABLES = 3


class EmptyProgram(ValueError):
    pass


class NoEligibleLocation(ValueError):
    pass


@dataclass(frozen=True)
class VariableRanking:
    entries: tuple[tuple[str, int], ...]

    @property
    def total_variables(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


@dataclass(frozen=True)
class Region:
    sid: int
    kind: str
    span: tuple[int, int]
    score: int
    function: str


@dataclass
class StatementComplexityMap:
    regions: dict[int, Region] = field(default_factory=dict)
    oracle_lines: set[int] = field(default_factory=set)

    def scores(self) -> dict[int, int]:
        return {sid: r.score for sid, r in self.regions.items()}

    def merge(self, other: "StatementComplexityMap") -> "StatementComplexityMap":
        return StatementComplexityMap({**self.regions, **other.regions}, self.oracle_lines | other.oracle_lines)


@dataclass(frozen=True)
class MutationTarget:
    variables: tuple[str, ...]
    location: tuple[int, int]


def rank_variables(table: DefUseTable) -> VariableRanking:
    if not table:
        raise EmptyProgram("program declares no variables")
    ordered = sorted(table.values(), key=lambda v: (-v.complexity, v.line, v.col))
    return VariableRanking(tuple((v.name, v.complexity) for v in ordered))


def _is_branch(stmt: Stmt) -> bool:
    return isinstance(stmt, (If, For, While))


def _oracle_lines(stmt: Stmt) -> set[int]:
    lines = set()
    for top in stmt_exprs(stmt):
        for e in walk_expr(top):
            if isinstance(e, Call) and e.func in ORACLE_CALLS:
                lines.add(e.line)
    return lines


def statement_complexity(cfg: Cfg, ast: Ast) -> StatementComplexityMap:
    """Score every statement of ``cfg.function``.

    Branch nodes contribute ``out_degree - 1`` each, taken from the CFG
    when the node is reachable and assumed two-way otherwise.
    """
    fn = ast.function(cfg.function)
    result = StatementComplexityMap()

    def extra(stmt: Stmt) -> int:
        if not _is_branch(stmt):
            return 0
        if stmt.sid in cfg.stmts:
            # Leaving the function counts as an edge to a virtual exit node.
            degree = cfg.out_degree(stmt.sid) + (stmt.sid in cfg.exits)
            return max(degree - 1, 0)
        return 1

    def visit(stmt: Stmt, inherited: int) -> None:
        own = inherited + extra(stmt)
        result.regions[stmt.sid] = Region(stmt.sid, stmt.kind, stmt.span, 1 + own, fn.name)
        result.oracle_lines |= _oracle_lines(stmt)
        for child in child_stmts(stmt):
            visit(child, own)

    for top in fn.body:
        visit(top, 0)
    return result


def program_complexity(ast: Ast) -> StatementComplexityMap:
    merged = StatementComplexityMap()
    for cfg in all_cfgs(ast).values():
        merged = merged.merge(statement_complexity(cfg, ast))
    return merged


def select_variables(ranking: VariableRanking, count: int | None = None) -> list[str]:
    """Top-1 for small programs, top-3 otherwise; ``count`` overrides."""
    if ranking.total_variables == 0:
        raise EmptyProgram("ranking is empty")
    if count is None:
        count = 1 if ranking.total_variables <= SMALL_PROGRAM_VARIABLES else 3
    return ranking.names()[:count]


def select_location(cmap: StatementComplexityMap) -> tuple[int, int]:
    """Span of the best-scoring region that holds no printf/abort line.

    Ties go to the earliest start line, then to the wider span.
    """
    best: Region | None = None
    for r in cmap.regions.values():
        lo, hi = r.span
        if any(lo <= ln <= hi for ln in cmap.oracle_lines):
            continue
        if best is None or (-r.score, r.span[0], -r.span[1]) < (-best.score, best.span[0], -best.span[1]):
            best = r
    if best is None:
        raise NoEligibleLocation("every statement region overlaps an oracle line")
    return best.span


def mutation_target(ast: Ast, table: DefUseTable, count: int | None = None) -> MutationTarget:
    variables = select_variables(rank_variables(table), count)
    location = select_location(program_complexity(ast))
    return MutationTarget(tuple(variables), location)


def format_report(ranking: VariableRanking, cmap: StatementComplexityMap) -> str:
    """Plain-text tables of the variable ranking and region scores."""
    lines = ["variable            complexity"]
    for name, score in ranking.entries:
        lines.append(f"{name:<20}{score:>10}")
    lines.append("")
    lines.append("function    kind      lines       score  oracle")
    for r in sorted(cmap.regions.values(), key=lambda r: (r.span[0], -r.span[1], r.sid)):
        lo, hi = r.span
        hit = any(lo <= ln <= hi for ln in cmap.oracle_lines)
        lines.append(f"{r.function:<12}{r.kind:<10}{f'{lo}-{hi}':<12}{r.score:>5}  {'yes' if hit else ''}")
    return "\n".join(lines)
