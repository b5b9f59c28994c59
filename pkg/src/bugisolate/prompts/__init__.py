"""Mutation prompts and feedback prompts rendered from versioned templates."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

from ..complexity import MutationTarget
from ..program.parser import SourceProgram
from ..validation import OracleMismatch, UbCategory, ValidationReport, Verdict

TEMPLATE_VERSION = "v1"


class NoFailure(ValueError):
    """Raised when asked to render feedback for a valid program."""


class MalformedPrompt(ValueError):
    pass


@dataclass(frozen=True)
class MutationRule:
    id: int
    description: str


@dataclass(frozen=True)
class PromptInstance:
    rule: MutationRule
    variables: tuple[str, ...]
    location: tuple[int, int]
    program_text: str
    rendered: str


@dataclass(frozen=True)
class FeedbackPrompt:
    cause: str
    rendered: str


def _resource(name: str, version: str = TEMPLATE_VERSION) -> str:
    return resources.files(__package__).joinpath("templates", f"{name}.{version}.txt").read_text("utf-8")


def _table(name: str) -> list[tuple[str, str]]:
    rows = []
    for line in _resource(name).splitlines():
        if line.strip():
            key, value = line.split("\t", 1)
            rows.append((key, value))
    return rows


@lru_cache(maxsize=None)
def _catalog() -> tuple[MutationRule, ...]:
    return tuple(MutationRule(int(k), v) for k, v in _table("rules"))


def rule_catalog() -> list[MutationRule]:
    return list(_catalog())


def rule(rule_id: int) -> MutationRule:
    for r in _catalog():
        if r.id == rule_id:
            return r
    raise KeyError(f"no mutation rule {rule_id}")


@lru_cache(maxsize=None)
def ub_phrases() -> dict[UbCategory, str]:
    return {UbCategory(k): v for k, v in _table("ub_phrases")}


def system_prompt() -> str:
    return _resource("system").strip()


def format_variables(names) -> str:
    return ", ".join(names)


def render_prompt(mutation_rule: MutationRule, target: MutationTarget, program: SourceProgram) -> PromptInstance:
    text = program.text if program.text.endswith("\n") else program.text + "\n"
    start, end = target.location
    rendered = Template(_resource("mutation")).substitute(
        rule=mutation_rule.description,
        variables=format_variables(target.variables),
        start=start,
        end=end,
        program=text,
    )
    return PromptInstance(mutation_rule, tuple(target.variables), (start, end), program.text, rendered)


_PROMPT_RE = re.compile(
    r"Please generate a variant program P of the input program F by (?P<rule>.+?) "
    r"and reusing the variables in the list \{(?P<vars>[^}]*)\} between lines (?P<start>\d+)-(?P<end>\d+)\.\n"
    r"\n```c\n(?P<program>.*)```\n?\Z",
    re.S,
)


def parse_prompt(rendered: str) -> tuple[int, tuple[str, ...], tuple[int, int], str]:
    """Recover (rule id, variables, line range, program text) from a rendered prompt.

    A feedback sentence prefixed to the prompt is skipped.
    """
    idx = rendered.find("Please generate a variant program")
    m = _PROMPT_RE.match(rendered[idx:]) if idx >= 0 else None
    if m is None:
        raise MalformedPrompt("text does not follow the mutation prompt pattern")
    by_text = {r.description: r.id for r in _catalog()}
    if m["rule"] not in by_text:
        raise MalformedPrompt(f"unknown mutation rule text: {m['rule']!r}")
    names = tuple(v.strip() for v in m["vars"].split(",") if v.strip())
    return by_text[m["rule"]], names, (int(m["start"]), int(m["end"])), m["program"]


def render_feedback(report: ValidationReport) -> FeedbackPrompt:
    if report.verdict is Verdict.VALID:
        raise NoFailure("the program passed validation")
    if report.verdict is Verdict.SEMANTIC_INVALID and isinstance(report.cause, UbCategory):
        phrase = ub_phrases()[report.cause]
        text = Template(_resource("feedback_ub")).substitute(phrase=phrase).rstrip("\n")
        return FeedbackPrompt(report.cause.value, text)
    if report.verdict is Verdict.ORACLE_INVALID and isinstance(report.cause, OracleMismatch):
        c = report.cause
        text = Template(_resource("feedback_oracle")).substitute(call=c.call, expected=c.expected, found=c.found)
        return FeedbackPrompt(f"oracle_{c.call}", text.rstrip("\n"))
    raise ValueError(f"no feedback is defined for a {report.verdict.value} report")


def with_feedback(feedback: FeedbackPrompt | None, prompt: PromptInstance) -> str:
    """User message text: pending feedback, if any, followed by the next prompt."""
    if feedback is None:
        return prompt.rendered
    return f"{feedback.rendered}\n\n{prompt.rendered}"


__all__ = [
    "FeedbackPrompt",
    "MalformedPrompt",
    "MutationRule",
    "NoFailure",
    "PromptInstance",
    "TEMPLATE_VERSION",
    "parse_prompt",
    "render_feedback",
    "render_prompt",
    "rule",
    "rule_catalog",
    "system_prompt",
    "ub_phrases",
    "with_feedback",
]
