import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugisolate.program import SourceProgram
from bugisolate.validation import (
    AnalyzerFailure,
    OracleMismatch,
    UbCategory,
    Verdict,
    builtin_findings,
    oracle_validate,
    parse_analyzer_output,
    semantic_validate,
    validate,
)
from bugisolate.program import parse
from conftest import FIXTURES

CORPUS = FIXTURES / "ub_corpus"


def prog(text):
    return SourceProgram("t", text)


def category(text):
    r = semantic_validate(prog(text))
    return r.cause.value if r.cause else "valid"


class TestBuiltinChecks:
    def test_negative_shift(self):
        assert category("int c, f = 1;\nint main(){ c = f << (-1); return 0; }") == "shift"

    def test_constant_index_out_of_bounds(self):
        assert category("int main(){ int u[3]; u[5]=0; return 0; }") == "index_bound"

    def test_use_before_init(self):
        assert category("int main(){ int x; int y = x; return y; }") == "initialization"

    def test_globals_are_zero_initialized(self):
        assert category("int x; int main(){ int y = x; return y; }") == "valid"

    def test_read_inside_loop_that_also_writes_is_not_flagged(self):
        src = "int main(){ int x, i; for (i = 0; i < 3; i++) { if (i) i = x; x = i; } return 0; }"
        assert category(src) == "valid"

    def test_division_by_folded_zero(self):
        assert category("int a = 1;\nint main(){ a = a / (1 - 1); return 0; }") == "division_by_zero"

    def test_null_dereference(self):
        assert category("int main(){ int *p = 0; return *p; }") == "mem_access"

    def test_negative_shift_example(self):
        r = semantic_validate(SourceProgram.from_file(FIXTURES / "negative_shift.c"))
        assert (r.verdict, r.cause, r.line) == (Verdict.SEMANTIC_INVALID, UbCategory.SHIFT, 11)

    def test_narrow_object_through_wide_pointer(self):
        r = semantic_validate(SourceProgram.from_file(FIXTURES / "wide_pointer_access.c"))
        assert (r.cause, r.line) == (UbCategory.MEM_ACCESS, 12)

    def test_running_example_is_clean(self, example_text):
        assert semantic_validate(prog(example_text)).is_valid


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.c")), ids=lambda p: p.stem)
def test_seeded_corpus(path):
    expected = "valid" if path.stem.startswith("clean") else path.stem.rsplit("_", 1)[0]
    assert category(path.read_text()) == expected


names = st.sampled_from(["a", "b", "c", "d"])


@st.composite
def constant_free_programs(draw):
    """No constants, arrays, division or shifts; every variable initialized from another."""
    lines = ["int z;", "int a = z, b = z, c = z, d = z;", "int main() {"]
    for _ in range(draw(st.integers(1, 8))):
        x, y, w = draw(names), draw(names), draw(names)
        op = draw(st.sampled_from(["+", "-", "*", "&", "|", "^", "<", "==", "&&"]))
        form = draw(st.sampled_from(["assign", "if", "while"]))
        if form == "assign":
            lines.append(f"  {x} = {y} {op} {w};")
        elif form == "if":
            lines.append(f"  if ({y}) {{ {x} = {w}; }}")
        else:
            lines.append(f"  while ({y} {op} {w}) {{ {x}--; }}")
    lines.append("  return a;\n}")
    return "\n".join(lines) + "\n"


@settings(max_examples=200, deadline=None)
@given(constant_free_programs())
def test_programs_without_risky_constructs_are_valid(text):
    assert semantic_validate(prog(text)).is_valid


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(["/", "%", "<<", ">>", "+", "*"]),
    st.integers(-70, 70),
    st.sampled_from(["int", "long", "char", "short"]),
)
def test_builtin_categories_stay_in_the_five(op, k, ty):
    src = f"{ty} g = 3; int u[4];\nint main() {{ int x = g {op} ({k}); u[{k}] = x; return x; }}\n"
    for f in builtin_findings(parse(src)):
        assert f.category in set(UbCategory)


class TestOracle:
    FAILING = 'int a;\nint main(){\n a = 1;\n printf("%d\\n", a);\n return 0;\n}\n'

    def test_identity(self):
        assert oracle_validate(prog(self.FAILING), prog(self.FAILING)).is_valid

    def test_dropped_printf(self):
        cand = self.FAILING.replace(' printf("%d\\n", a);\n', "")
        r = oracle_validate(prog(cand), prog(self.FAILING))
        assert r.verdict is Verdict.ORACLE_INVALID
        assert r.cause == OracleMismatch("printf", 1, 0)

    def test_extra_printf(self):
        cand = self.FAILING.replace(" return 0;", ' printf("%d\\n", a);\n return 0;')
        r = oracle_validate(prog(cand), prog(self.FAILING))
        assert r.cause == OracleMismatch("printf", 1, 2)

    def test_abort_counted(self):
        cand = self.FAILING.replace(" return 0;", " abort();\n return 0;")
        assert oracle_validate(prog(cand), prog(self.FAILING)).cause == OracleMismatch("abort", 0, 1)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 2))
    def test_swapping_arguments_flips_expected_and_found(self, p1, p2, a1, a2):
        def make(p, a):
            body = ' printf("x");\n' * p + " abort();\n" * a
            return prog("int main(){\n" + body + " return 0;\n}\n")

        x, y = make(p1, a1), make(p2, a2)
        r1, r2 = oracle_validate(x, y), oracle_validate(y, x)
        assert r1.is_valid == r2.is_valid
        if not r1.is_valid:
            assert r1.cause.call == r2.cause.call
            assert (r1.cause.expected, r1.cause.found) == (r2.cause.found, r2.cause.expected)


class TestPipeline:
    def test_unparseable(self):
        r = validate(prog("int main(){ x = ; }"), prog("int main(){return 0;}"))
        assert r.verdict is Verdict.UNPARSEABLE and r.line == 1

    def test_semantic_before_oracle(self):
        failing = prog('int main(){ printf("x"); return 0; }')
        cand = prog("int main(){ int a = 1 / 0; return a; }")
        assert validate(cand, failing).verdict is Verdict.SEMANTIC_INVALID


class TestExternalAnalyzer:
    def _script(self, tmp_path, body):
        path = tmp_path / "analyzer.py"
        path.write_text("import sys\n" + body)
        return f"{sys.executable} {path}"

    def test_finding_is_merged(self, tmp_path):
        cmd = self._script(tmp_path, "print('mem_access:12:out-of-bound read')\n")
        r = semantic_validate(prog("int main(){ return 0; }"), analyzer=cmd)
        assert (r.cause, r.line, r.note) == (UbCategory.MEM_ACCESS, 12, "out-of-bound read")

    def test_clean_output(self, tmp_path):
        cmd = self._script(tmp_path, "pass\n")
        assert semantic_validate(prog("int main(){ return 0; }"), analyzer=cmd).is_valid

    def test_abnormal_exit(self, tmp_path):
        cmd = self._script(tmp_path, "sys.exit(3)\n")
        with pytest.raises(AnalyzerFailure):
            semantic_validate(prog("int main(){ return 0; }"), analyzer=cmd)

    def test_receives_file(self, tmp_path):
        cmd = self._script(tmp_path, "src = open(sys.argv[1]).read()\nprint('shift:1:' + str(len(src)))\n")
        r = semantic_validate(prog("int main(){ return 0; }"), analyzer=cmd)
        assert r.note == str(len("int main(){ return 0; }"))

    def test_malformed_line(self):
        with pytest.raises(AnalyzerFailure):
            parse_analyzer_output("garbage\n")

    def test_unknown_category_ignored(self):
        assert parse_analyzer_output("signed_overflow:3:x\n") == []
