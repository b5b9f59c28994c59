import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bugisolate.complexity import (
    EmptyProgram,
    NoEligibleLocation,
    Region,
    StatementComplexityMap,
    format_report,
    mutation_target,
    program_complexity,
    rank_variables,
    select_location,
    select_variables,
    statement_complexity,
)
from bugisolate.program import DefUseTable, VarStats, build_cfg, def_use, parse
from cgen import programs


def table(**entries):
    t = DefUseTable()
    for line, (name, (d, u)) in enumerate(entries.items(), start=1):
        t[name] = VarStats(name, d, u, line=line)
    return t


def region_scores(text):
    cmap = program_complexity(parse(text))
    return {r.span: r.score for r in cmap.regions.values()}, cmap


class TestRankVariables:
    def test_direct_sum(self):
        assert rank_variables(table(x=(1, 2), y=(1, 0))).entries == (("x", 3), ("y", 1))

    def test_ties_keep_declaration_order(self):
        ranking = rank_variables(table(c=(1, 1), a=(0, 2), b=(2, 0)))
        assert ranking.names() == ["c", "a", "b"]

    def test_empty(self):
        with pytest.raises(EmptyProgram):
            rank_variables(DefUseTable())

    def test_running_example_scores_match_def_use(self, example_text):
        t = def_use(parse(example_text))
        for name, score in rank_variables(t).entries:
            assert score == t[name].def_count + t[name].use_count


class TestSelectVariables:
    def test_two_variables_gives_one(self):
        assert select_variables(rank_variables(table(x=(1, 1), y=(0, 1)))) == ["x"]

    def test_exactly_three_gives_one(self):
        assert len(select_variables(rank_variables(table(x=(1, 1), y=(0, 1), z=(0, 1))))) == 1

    def test_six_gives_three(self):
        t = table(**{f"v{i}": (i, 0) for i in range(6)})
        assert select_variables(rank_variables(t)) == ["v5", "v4", "v3"]

    def test_override(self):
        t = table(**{f"v{i}": (i, 0) for i in range(6)})
        assert len(select_variables(rank_variables(t), count=5)) == 5


class TestStatementComplexity:
    def test_straight_line_scores_one(self):
        scores, _ = region_scores("int a;\nvoid f(){\n a = 1;\n a = 2;\n}\n")
        assert set(scores.values()) == {1}

    def test_if_else_scores_two(self):
        src = "int a;\nvoid f(){\n if (a)\n  a = 1;\n else\n  a = 2;\n}\n"
        ast = parse(src)
        cmap = statement_complexity(build_cfg(ast, "f"), ast)
        by_span = {r.span: r.score for r in cmap.regions.values()}
        assert by_span[(3, 6)] == 2

    def test_oracle_lines_recorded(self):
        _, cmap = region_scores('int a;\nint main(){\n a = 1;\n printf("%d", a);\n abort();\n return 0;\n}\n')
        assert cmap.oracle_lines == {4, 5}

    def test_running_example_innermost_loop_is_maximal(self, example_text):
        scores, _ = region_scores(example_text)
        assert scores[(12, 18)] == max(scores.values())


class TestSelectLocation:
    def test_unconstrained_max(self):
        src = "int a;\nvoid f(){\n a = 0;\n while (a)\n {\n  a--;\n }\n}\n"
        _, cmap = region_scores(src)
        assert select_location(cmap) == (4, 7)

    def test_skips_region_with_printf(self):
        src = (
            "int a, b;\nint main(){\n"
            " while (a) {\n  if (b) {\n   b--;\n   printf(\"%d\", b);\n  }\n }\n"
            " if (a)\n  a = 0;\n"
            " return 0;\n}\n"
        )
        scores, cmap = region_scores(src)
        assert max(scores, key=scores.get) == (4, 7)
        # The enclosing if holds the printf; its body statement on line 5 does not.
        assert select_location(cmap) == (5, 5)
        cmap.oracle_lines.add(5)
        assert select_location(cmap) == (9, 10)

    def test_running_example(self, example_text):
        ast = parse(example_text)
        assert mutation_target(ast, def_use(ast)).location == (12, 18)

    def test_no_eligible(self):
        cmap = StatementComplexityMap({0: Region(0, "call", (3, 3), 1, "main")}, {3})
        with pytest.raises(NoEligibleLocation):
            select_location(cmap)

    def test_report_lists_every_region(self, example_text):
        ast = parse(example_text)
        text = format_report(rank_variables(def_use(ast)), program_complexity(ast))
        assert "12-18" in text and "d" in text


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefgh"), st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1))
def test_ranking_order_invariant_under_doubling(entries):
    t1 = table(**entries)
    t2 = table(**{k: (2 * d, 2 * u) for k, (d, u) in entries.items()})
    r1, r2 = rank_variables(t1), rank_variables(t2)
    assert r1.names() == r2.names()
    assert [2 * s for _, s in r1.entries] == [s for _, s in r2.entries]


def _with_printf(text, line_no):
    lines = text.splitlines()
    # cgen bodies start at line 7 (after the prelude and 'int main() {').
    idx = 6 + line_no % (len(lines) - 8)
    lines.insert(idx, '  printf("%d", x0);')
    return "\n".join(lines) + "\n"


@settings(max_examples=100, deadline=None)
@given(programs(), st.integers(0, 50))
def test_location_avoids_oracle_lines(text, k):
    text = _with_printf(text, k)
    _, cmap = region_scores(text)
    try:
        lo, hi = select_location(cmap)
    except NoEligibleLocation:
        return
    assert not any(lo <= ln <= hi for ln in cmap.oracle_lines)


@settings(max_examples=100, deadline=None)
@given(programs(), st.integers(0, 50))
def test_inserting_if_never_lowers_region_score(text, k):
    lines = text.splitlines()
    body_lines = range(6, len(lines) - 2)  # 0-based indices of statements inside main
    assume(len(body_lines) > 0)
    at = body_lines[k % len(body_lines)]
    assume(not lines[at].strip().startswith("}"))
    new_lines = lines[: at + 1] + ["  if (x0) x1 = 1;"] + lines[at + 1 :]
    before, _ = region_scores(text)
    after, _ = region_scores("\n".join(new_lines) + "\n")
    ins = at + 1  # 1-based line the new statement follows
    for (lo, hi), score in before.items():
        if lo <= ins < hi:
            assert after[(lo, hi + 1)] >= score
