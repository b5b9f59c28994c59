"""Per-function statement-level control-flow graphs."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
    Ast,
    Block,
    Break,
    Continue,
    For,
    Goto,
    If,
    Label,
    Return,
    Stmt,
    While,
    walk_stmt,
)


class UnknownLabel(LookupError):
    pass


@dataclass(frozen=True)
class Cfg:
    function: str
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    entry: int | None
    exits: frozenset[int]
    stmts: dict[int, Stmt] = field(compare=False, repr=False, default_factory=dict)

    def successors(self, node: int) -> list[int]:
        return [b for a, b in self.edges if a == node]

    def out_degree(self, node: int) -> int:
        return sum(1 for a, _ in self.edges if a == node)

    def back_edges(self) -> list[tuple[int, int]]:
        """Edges closing a cycle in a depth-first walk from the entry."""
        if self.entry is None:
            return []
        succ: dict[int, list[int]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            succ[a].append(b)
        back: list[tuple[int, int]] = []
        state: dict[int, int] = {}  # 1 = on stack, 2 = done
        stack = [(self.entry, iter(succ[self.entry]))]
        state[self.entry] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                back.append((node, nxt))
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
        return back

    def cyclomatic_complexity(self) -> int:
        return len(self.edges) - len(self.nodes) + 2


class _Builder:
    def __init__(self, labels: dict[str, int]):
        self.labels = labels
        self.edges: list[tuple[int, int]] = []
        self.exits: set[int] = set()
        self.stmts: dict[int, Stmt] = {}

    def link(self, a: int, b: int | None) -> None:
        if b is None:
            self.exits.add(a)
        else:
            self.edges.append((a, b))

    def seq(self, stmts: list[Stmt], follow, brk, cont):
        nxt = follow
        for s in reversed(stmts):
            nxt = self.stmt(s, nxt, brk, cont)
        return nxt

    def stmt(self, s: Stmt, follow, brk, cont):
        if isinstance(s, Block):
            return self.seq(s.body, follow, brk, cont)
        self.stmts[s.sid] = s
        if isinstance(s, Return):
            self.exits.add(s.sid)
        elif isinstance(s, Break):
            self.link(s.sid, brk)
        elif isinstance(s, Continue):
            self.link(s.sid, cont)
        elif isinstance(s, Goto):
            if s.label not in self.labels:
                raise UnknownLabel(s.label)
            self.link(s.sid, self.labels[s.label])
        elif isinstance(s, If):
            then_entry = self.stmt(s.then, follow, brk, cont) if s.then is not None else follow
            else_entry = self.stmt(s.orelse, follow, brk, cont) if s.orelse is not None else follow
            self.link(s.sid, then_entry)
            self.link(s.sid, else_entry)
        elif isinstance(s, (For, While)):
            body = s.body
            body_entry = self.stmt(body, s.sid, follow, s.sid) if body is not None else s.sid
            self.link(s.sid, body_entry)
            if s.cond is not None:
                self.link(s.sid, follow)
        else:
            self.link(s.sid, follow)
        return s.sid


def build_cfg(ast: Ast, function: str) -> Cfg:
    """Statement-level CFG for ``function``; blocks are transparent.

    Unreachable statements are left out of ``nodes``.  Raises
    :class:`~bugisolate.program.ast.UnknownFunction` or
    :class:`UnknownLabel`.
    """
    fn = ast.function(function)
    labels = {
        s.name: s.sid for top in fn.body for s in walk_stmt(top) if isinstance(s, Label)
    }
    b = _Builder(labels)
    entry = b.seq(fn.body, None, None, None)
    if entry is None:
        return Cfg(fn.name, (), (), None, frozenset(), {})

    succ: dict[int, list[int]] = {}
    for a, c in b.edges:
        succ.setdefault(a, []).append(c)
    seen = {entry}
    todo = [entry]
    while todo:
        n = todo.pop()
        for m in succ.get(n, []):
            if m not in seen:
                seen.add(m)
                todo.append(m)
    nodes = tuple(sorted(seen))
    edges = tuple(sorted((a, c) for a, c in b.edges if a in seen))
    exits = frozenset(n for n in b.exits if n in seen)
    return Cfg(fn.name, nodes, edges, entry, exits, {n: b.stmts[n] for n in nodes})


def all_cfgs(ast: Ast) -> dict[str, Cfg]:
    return {fn.name: build_cfg(ast, fn.name) for fn in ast.functions}
