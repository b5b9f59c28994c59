"""A deterministic stand-in for a coverage-instrumented buggy compiler.

A scenario lists synthetic compiler files, the faulty one, the lines a
compilation covers by default, and rules keyed on how a variant's syntactic
features differ from the failing program's.  The first matching rule fixes
the verdict and edits the covered lines.  Innocent files additionally lose
a hash-chosen subset of lines per program, so distinct variants yield
distinct but reproducible spectra.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import operator
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from ..program.parser import SourceProgram, parse
from .coverage import CoverageSpectrum
from .features import features
from .outcome import Classification, OracleKind


class ScenarioError(ValueError):
    pass


_RANGES = {
    "type": "array",
    "items": {
        "oneOf": [
            {"type": "integer", "minimum": 1},
            {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        ]
    },
}
_COVERAGE = {"type": "object", "additionalProperties": _RANGES}

SCHEMA = {
    "type": "object",
    "required": ["files", "faulty_file", "base_coverage", "rules"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "oracle": {"enum": [k.value for k in OracleKind]},
        "files": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {"type": "integer", "minimum": 1},
        },
        "faulty_file": {"type": "string"},
        "base_coverage": _COVERAGE,
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["when", "verdict"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "when": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["feature", "op", "delta"],
                            "additionalProperties": False,
                            "properties": {
                                "feature": {"type": "string", "minLength": 1},
                                "op": {"enum": [">", ">=", "<", "<=", "==", "!="]},
                                "delta": {"type": "integer"},
                            },
                        },
                    },
                    "verdict": {"enum": [c.value for c in Classification]},
                    "drop": _COVERAGE,
                    "add": _COVERAGE,
                },
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rate": {"type": "number", "minimum": 0, "maximum": 1},
                "max_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                "exclude": {"type": "array", "items": {"type": "string"}},
            },
        },
    },
}

_OPS = {
    ">": operator.gt,
    ">=": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
}


def _expand(ranges) -> set[int]:
    lines: set[int] = set()
    for r in ranges:
        if isinstance(r, int):
            lines.add(r)
        else:
            lo, hi = r
            if lo > hi:
                raise ScenarioError(f"empty line range {r}")
            lines.update(range(lo, hi + 1))
    return lines


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    delta: int

    def holds(self, delta: int) -> bool:
        return _OPS[self.op](delta, self.delta)


@dataclass(frozen=True)
class Rule:
    name: str
    when: tuple[Condition, ...]
    verdict: Classification
    drop: dict[str, frozenset[int]]
    add: dict[str, frozenset[int]]

    def matches(self, deltas: Counter) -> bool:
        return all(c.holds(deltas.get(c.feature, 0)) for c in self.when)


@dataclass(frozen=True)
class Scenario:
    name: str
    oracle: OracleKind
    files: dict[str, int]
    faulty_file: str
    base_coverage: dict[str, frozenset[int]]
    rules: tuple[Rule, ...]
    noise_rate: float = 0.0
    noise_max_fraction: float = 0.0
    noise_exclude: frozenset[str] = frozenset()
    raw: dict | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ScenarioError(f"invalid scenario: {exc.message}") from exc
        files = dict(data["files"])
        if data["faulty_file"] not in files:
            raise ScenarioError("faulty_file is not one of the scenario files")

        def coverage(obj: dict, what: str) -> dict[str, frozenset[int]]:
            out = {}
            for path, ranges in obj.items():
                if path not in files:
                    raise ScenarioError(f"{what} names unknown file {path!r}")
                lines = _expand(ranges)
                if lines and max(lines) > files[path]:
                    raise ScenarioError(f"{what} line {max(lines)} is past the end of {path}")
                out[path] = frozenset(lines)
            return out

        base = coverage(data["base_coverage"], "base_coverage")
        if not base.get(data["faulty_file"]):
            raise ScenarioError("the failing program must cover the faulty file")
        rules = []
        for i, r in enumerate(data["rules"]):
            rules.append(
                Rule(
                    r.get("name", f"rule{i + 1}"),
                    tuple(Condition(**c) for c in r["when"]),
                    Classification(r["verdict"]),
                    coverage(r.get("drop", {}), f"rule {i + 1} drop"),
                    coverage(r.get("add", {}), f"rule {i + 1} add"),
                )
            )
        noise = data.get("noise", {})
        return cls(
            data.get("name", "scenario"),
            OracleKind(data.get("oracle", "wrong_code")),
            files,
            data["faulty_file"],
            base,
            tuple(rules),
            float(noise.get("rate", 0.0)),
            float(noise.get("max_fraction", 0.0)),
            frozenset(noise.get("exclude", [])) | {data["faulty_file"]},
            data,
        )

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(data)


def _unit(*parts) -> float:
    h = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "big") / 2**64


def _noise(scenario: Scenario, covered: dict[str, set[int]], program_key: str, seed: int) -> None:
    if scenario.noise_rate <= 0 or scenario.noise_max_fraction <= 0:
        return
    for path in sorted(covered):
        if path in scenario.noise_exclude:
            continue
        lines = sorted(covered[path])
        budget = int(scenario.noise_max_fraction * len(lines))
        ranked = sorted(lines, key=lambda n: _unit(seed, program_key, path, n, "pick"))[:budget]
        for n in ranked:
            if _unit(seed, program_key, path, n, "drop") < scenario.noise_rate:
                covered[path].discard(n)


def feature_deltas(program: SourceProgram, failing: SourceProgram) -> Counter:
    now, base = features(parse(program)), features(parse(failing))
    return Counter({k: now[k] - base[k] for k in set(now) | set(base) if now[k] != base[k]})


def matching_rule(scenario: Scenario, deltas: Counter) -> Rule | None:
    for rule in scenario.rules:
        if rule.matches(deltas):
            return rule
    return None


def simulate(
    program: SourceProgram, scenario: Scenario, failing: SourceProgram, seed: int = 0
) -> tuple[Classification, CoverageSpectrum]:
    """Classification and spectrum of ``program``; a pure function of its arguments."""
    rule = matching_rule(scenario, feature_deltas(program, failing))
    covered = {p: set(lines) for p, lines in scenario.base_coverage.items()}
    verdict = Classification.FAILING
    if rule is not None:
        verdict = rule.verdict
        for p, lines in rule.drop.items():
            covered.setdefault(p, set()).difference_update(lines)
        for p, lines in rule.add.items():
            covered.setdefault(p, set()).update(lines)
    if verdict is Classification.DISCARD:
        return verdict, CoverageSpectrum.empty()
    _noise(scenario, covered, hashlib.sha256(program.text.encode()).hexdigest(), seed)
    return verdict, CoverageSpectrum.of(covered)


def scenario_problems(scenario: Scenario, span: int = 2) -> list[str]:
    """Brute-force consistency check over small feature deltas.

    Every rule must be reachable (some delta assignment matches it and no
    earlier rule), the unmodified failing program must match no rule, and
    passing rules must uncover part of the faulty file.
    """
    problems = []
    feats = sorted({c.feature for r in scenario.rules for c in r.when})
    if matching_rule(scenario, Counter()) is not None:
        problems.append("the unmodified failing program matches a rule")
    reachable = set()
    values = range(-span, span + 1)
    for combo in itertools.product(values, repeat=len(feats)):
        deltas = Counter({f: d for f, d in zip(feats, combo) if d})
        rule = matching_rule(scenario, deltas)
        if rule is not None:
            reachable.add(rule.name)
    for r in scenario.rules:
        if r.name not in reachable:
            problems.append(f"rule {r.name!r} is shadowed or unsatisfiable")
        if r.verdict is Classification.PASSING:
            if not r.drop.get(scenario.faulty_file, frozenset()) & scenario.base_coverage[scenario.faulty_file]:
                problems.append(f"passing rule {r.name!r} leaves the faulty file fully covered")
    return problems


class SimulatedBackend:
    def __init__(self, scenario: Scenario, failing: SourceProgram, seed: int = 0):
        self.scenario = scenario
        self.failing = failing
        self.seed = seed
        self.oracle = scenario.oracle

    def evaluate(self, program: SourceProgram) -> tuple[Classification, CoverageSpectrum | None]:
        verdict, spectrum = simulate(program, self.scenario, self.failing, self.seed)
        return verdict, (None if verdict is Classification.DISCARD else spectrum)
