"""Compile-and-classify harness with real and simulated compiler backends."""

from typing import Protocol

from ..program.parser import SourceProgram
from .coverage import CoverageSpectrum, CoverageUnavailable, parse_gcov_lines, spectrum_from_reports
from .features import features
from .outcome import (
    Classification,
    CompilerSpec,
    ExecutionOutcome,
    OptionResult,
    OracleKind,
    SetupError,
    classify,
)
from .real import RealBackend, collect_coverage, execute
from .simulated import Scenario, ScenarioError, SimulatedBackend, scenario_problems, simulate


class Backend(Protocol):
    oracle: OracleKind

    def evaluate(self, program: SourceProgram) -> tuple[Classification, CoverageSpectrum | None]: ...


__all__ = [
    "Backend",
    "Classification",
    "CompilerSpec",
    "CoverageSpectrum",
    "CoverageUnavailable",
    "ExecutionOutcome",
    "OptionResult",
    "OracleKind",
    "RealBackend",
    "Scenario",
    "ScenarioError",
    "SetupError",
    "SimulatedBackend",
    "classify",
    "collect_coverage",
    "execute",
    "features",
    "parse_gcov_lines",
    "scenario_problems",
    "simulate",
    "spectrum_from_reports",
]
