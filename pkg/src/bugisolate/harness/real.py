"""Compile, run and collect coverage with an actual compiler build."""

from __future__ import annotations

import logging
import os
import re
import subprocess
import tempfile
import time
from pathlib import Path

from filelock import FileLock

from ..program.parser import SourceProgram
from .coverage import CoverageSpectrum, CoverageUnavailable, spectrum_from_reports
from .outcome import Classification, CompilerSpec, ExecutionOutcome, OptionResult, OracleKind, classify

log = logging.getLogger(__name__)

_SOURCE_RE = re.compile(r"\s*-:\s*0:Source:")


def _run(cmd: list[str], timeout: float, cwd: str | None = None) -> tuple[int, str, str, bool]:
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout, cwd=cwd, errors="replace")
    except subprocess.TimeoutExpired:
        return -1, "", "", True
    return proc.returncode, proc.stdout, proc.stderr, False


def execute(program: SourceProgram, spec: CompilerSpec, oracle: OracleKind) -> ExecutionOutcome:
    """Compile under every option set; for wrong-code bugs also run each binary."""
    start = time.monotonic()
    results = []
    with tempfile.TemporaryDirectory(prefix="isolate-", dir=spec.workdir) as tmp:
        src = Path(tmp) / "candidate.c"
        src.write_text(program.text)
        for k, options in enumerate(spec.option_sets):
            exe = Path(tmp) / f"candidate-{k}"
            cmd = [spec.compiler, *options, str(src)]
            cmd += ["-o", str(exe)] if oracle is OracleKind.WRONG_CODE else ["-c", "-o", str(exe) + ".o"]
            status, _, err, timed_out = _run(cmd, spec.timeout, tmp)
            if timed_out:
                results.append(OptionResult(-1, err, timed_out=True))
                continue
            if oracle is OracleKind.CRASH or status != 0:
                results.append(OptionResult(status, err))
                continue
            pstatus, out, _, timed_out = _run([str(exe)], spec.timeout, tmp)
            results.append(OptionResult(status, err, pstatus, out, timed_out))
    return ExecutionOutcome(tuple(results), time.monotonic() - start)


def reset_counters(build_dir: Path) -> None:
    for gcda in build_dir.rglob("*.gcda"):
        gcda.unlink()


def split_reports(stdout: str):
    """Split ``gcov --stdout`` output into one report per ``Source:`` header."""
    chunk: list[str] = []
    for line in stdout.splitlines(keepends=True):
        if _SOURCE_RE.match(line) and chunk:
            yield "".join(chunk)
            chunk = []
        chunk.append(line)
    if chunk:
        yield "".join(chunk)


def _reports(build_dir: Path, gcov: str, timeout: float):
    # Run from the object directory so relative source paths in the notes resolve.
    for gcda in sorted(build_dir.rglob("*.gcda")):
        cmd = [gcov, "--stdout", "-o", str(gcda.parent), gcda.name]
        status, out, err, timed_out = _run(cmd, timeout, str(gcda.parent))
        if status != 0 or timed_out:
            log.warning("gcov failed on %s: %s", gcda, err.strip())
            continue
        for k, report in enumerate(split_reports(out)):
            yield f"{gcda.stem}.{k}", report


def collect_coverage(program: SourceProgram, spec: CompilerSpec) -> CoverageSpectrum:
    """Compile once with the instrumented build and read back its line coverage.

    Counter reset, compilation and report collection hold a lock on the
    build directory, so concurrent workers cannot mix their counters.
    """
    if not spec.build_dir:
        raise CoverageUnavailable("no instrumented build directory configured")
    build_dir = Path(spec.build_dir)
    compiler = spec.coverage_compiler or spec.compiler
    with FileLock(str(build_dir / ".isolate.lock")):
        reset_counters(build_dir)
        with tempfile.TemporaryDirectory(prefix="isolate-cov-", dir=spec.workdir) as tmp:
            src = Path(tmp) / "candidate.c"
            src.write_text(program.text)
            cmd = [compiler, *spec.option_sets[0], "-c", str(src), "-o", os.devnull]
            _run(cmd, spec.timeout, tmp)
        spectrum = spectrum_from_reports(_reports(build_dir, spec.gcov, spec.timeout))
    if not spectrum.files:
        raise CoverageUnavailable(f"no coverage reports were produced under {build_dir}")
    return spectrum


class RealBackend:
    def __init__(self, spec: CompilerSpec, oracle: OracleKind):
        spec.check_paths()
        self.spec = spec
        self.oracle = oracle

    def evaluate(self, program: SourceProgram) -> tuple[Classification, CoverageSpectrum | None]:
        verdict = classify(execute(program, self.spec, self.oracle), self.oracle)
        if verdict is Classification.DISCARD:
            return verdict, None
        return verdict, collect_coverage(program, self.spec)
