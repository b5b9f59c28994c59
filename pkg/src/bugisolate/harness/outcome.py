"""Execution outcomes and their passing/failing classification."""

from __future__ import annotations

import enum
import shlex
import shutil
from dataclasses import dataclass, field
from pathlib import Path


class OracleKind(str, enum.Enum):
    CRASH = "crash"
    WRONG_CODE = "wrong_code"


class Classification(str, enum.Enum):
    PASSING = "passing"
    FAILING = "failing"
    DISCARD = "discard"


class SetupError(RuntimeError):
    pass


@dataclass(frozen=True)
class CompilerSpec:
    """How to invoke the compiler under test.

    ``option_sets[0]`` triggers the bug; the last entry is the reference
    configuration.  Coverage comes from ``coverage_compiler`` (defaults to
    ``compiler``) whose ``.gcda`` files live under ``build_dir``.
    """

    compiler: str
    option_sets: tuple[tuple[str, ...], ...]
    coverage_compiler: str | None = None
    build_dir: str | None = None
    workdir: str | None = None
    timeout: float = 10.0
    gcov: str = "gcov"

    def __post_init__(self) -> None:
        if not self.option_sets:
            raise ValueError("at least one option set is required")

    @classmethod
    def from_dict(cls, data: dict) -> "CompilerSpec":
        sets = tuple(tuple(shlex.split(s)) if isinstance(s, str) else tuple(s) for s in data["option_sets"])
        keys = ("coverage_compiler", "build_dir", "workdir", "timeout", "gcov")
        return cls(data["compiler"], sets, **{k: data[k] for k in keys if k in data})

    def check_paths(self) -> None:
        for exe in filter(None, (self.compiler, self.coverage_compiler)):
            if shutil.which(exe) is None and not Path(exe).exists():
                raise SetupError(f"compiler {exe!r} not found")
        for d in filter(None, (self.build_dir, self.workdir)):
            if not Path(d).is_dir():
                raise SetupError(f"directory {d!r} does not exist")

    def to_dict(self) -> dict:
        return {
            "compiler": self.compiler,
            "option_sets": [" ".join(s) for s in self.option_sets],
            "coverage_compiler": self.coverage_compiler,
            "build_dir": self.build_dir,
            "workdir": self.workdir,
            "timeout": self.timeout,
            "gcov": self.gcov,
        }


CRASH_MARKERS = ("internal compiler error", "PLEASE submit a bug report", "Segmentation fault")


@dataclass(frozen=True)
class OptionResult:
    """Compile (and, for wrong-code bugs, run) under one option set."""

    compiler_status: int
    diagnostics: str = ""
    program_status: int | None = None
    stdout: str | None = None
    timed_out: bool = False

    @property
    def compiler_crashed(self) -> bool:
        # Killed by a signal, or an ICE banner; exit status 1 is an ordinary rejection.
        if self.compiler_status < 0:
            return True
        if self.compiler_status not in (0, 1):
            return True
        return any(m in self.diagnostics for m in CRASH_MARKERS)

    @property
    def compiled(self) -> bool:
        return self.compiler_status == 0 and not self.compiler_crashed


@dataclass(frozen=True)
class ExecutionOutcome:
    results: tuple[OptionResult, ...]
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)


def classify(outcome: ExecutionOutcome, oracle: OracleKind) -> Classification:
    """Failing/passing per the oracle; timeouts and reference-rejected programs are discarded."""
    results = outcome.results
    if not results:
        raise ValueError("outcome has no option-set results")
    if any(r.timed_out for r in results):
        return Classification.DISCARD
    trigger, reference = results[0], results[-1]
    if oracle is OracleKind.CRASH:
        if trigger.compiler_crashed:
            return Classification.FAILING
        if not reference.compiled:
            return Classification.DISCARD
        if all(r.compiled for r in results):
            return Classification.PASSING
        return Classification.DISCARD
    if not all(r.compiled for r in results):
        return Classification.DISCARD
    observed = {(r.program_status, r.stdout) for r in results}
    return Classification.FAILING if len(observed) > 1 else Classification.PASSING
