"""Command-line entry points: ``isolate`` runs a session, ``isolate-debug`` inspects pieces."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from .complexity import format_report, mutation_target, program_complexity, rank_variables
from .harness import SetupError
from .llm import GatewayError
from .orchestrator import ConfigError, LogMismatch, RunConfig, replay, run
from .program import CSyntaxError, SourceProgram, def_use, parse, to_json
from .prompts import render_prompt, rule
from .sbfl import RankedFile, FileRanking, MissingGroundTruth, eval_metrics, load_ground_truth
from .validation import AnalyzerFailure, validate

EXIT_SETUP = 3
EXIT_GATEWAY = 4
EXIT_MISMATCH = 5


def _apply_overrides(config: RunConfig, seed, backend, budget, target, out, max_steps) -> RunConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if backend is not None:
        kind = "simulated" if backend == "sim" else "real"
        changes["backend"] = {**config.backend, "kind": kind}
    if budget is not None:
        changes["budget_seconds"] = budget
    if target is not None:
        changes["target"] = target
    if out is not None:
        changes["output_dir"] = Path(out)
    if max_steps is not None:
        changes["max_steps"] = max_steps
    return replace(config, **changes)


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Run configuration (JSON).")
@click.option("--seed", type=int, help="Random seed; generated and logged when omitted.")
@click.option("--backend", type=click.Choice(["real", "sim"]), help="Override the configured backend kind.")
@click.option("--budget", type=float, help="Wall-clock budget in seconds.")
@click.option("--target", type=int, help="Stop after this many accepted passing programs.")
@click.option("--max-steps", type=int, help="Hard cap on generation steps.")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory for the report and run log.")
@click.option("-v", "--verbose", count=True, help="More logging.")
def main(config_path, seed, backend, budget, target, max_steps, out, verbose):
    """Generate witness programs for a failing test and rank suspicious compiler files."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _apply_overrides(RunConfig.from_file(config_path), seed, backend, budget, target, out, max_steps)
        report = run(config)
    except (ConfigError, SetupError, CSyntaxError) as exc:
        click.echo(f"setup error: {exc}", err=True)
        sys.exit(EXIT_SETUP)
    except GatewayError as exc:
        click.echo(f"LLM gateway failed: {exc}", err=True)
        sys.exit(EXIT_GATEWAY)
    click.echo(report.to_text(), nl=False)


@click.group()
def debug():
    """Inspect the analyses behind a run."""


def _program(path: str) -> SourceProgram:
    try:
        return SourceProgram.from_file(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc


def _parse(program: SourceProgram):
    try:
        return parse(program)
    except CSyntaxError as exc:
        raise click.ClickException(f"line {exc.line}: {exc.message}") from exc


@debug.command("ast")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
def ast_cmd(source):
    """Print the parsed program as JSON."""
    click.echo(json.dumps(to_json(_parse(_program(source))), indent=2))


@debug.command("complexity")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--variables", type=int, help="How many variables to select.")
def complexity_cmd(source, variables):
    """Variable and statement complexity tables, and the chosen mutation target."""
    ast = _parse(_program(source))
    table = def_use(ast)
    click.echo(format_report(rank_variables(table), program_complexity(ast)))
    target = mutation_target(ast, table, variables)
    lo, hi = target.location
    click.echo(f"\ntarget variables: {', '.join(target.variables)}  lines {lo}-{hi}")


@debug.command("validate")
@click.argument("candidate", type=click.Path(exists=True, dir_okay=False))
@click.option("--failing", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--analyzer", help="External analyzer command, run as '<command> <file>'.")
def validate_cmd(candidate, failing, analyzer):
    """Semantic and oracle validation of a candidate against the failing program."""
    try:
        report = validate(_program(candidate), _program(failing), analyzer)
    except AnalyzerFailure as exc:
        raise click.ClickException(f"analyzer failed: {exc}") from exc
    click.echo(json.dumps(report.to_dict(), indent=2))
    sys.exit(0 if report.is_valid else 1)


@debug.command("prompt")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--rule", "rule_id", type=click.IntRange(1, 13), required=True)
def prompt_cmd(source, rule_id):
    """Render the mutation prompt for one rule."""
    program = _program(source)
    ast = _parse(program)
    click.echo(render_prompt(rule(rule_id), mutation_target(ast, def_use(ast)), program).rendered, nl=False)


@debug.command("replay")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
def replay_cmd(config_path, log_path, as_json):
    """Recompute a run from its log and print the report."""
    try:
        report = replay(log_path, RunConfig.from_file(config_path))
    except LogMismatch as exc:
        click.echo(f"log mismatch: {exc}", err=True)
        sys.exit(EXIT_MISMATCH)
    except (ConfigError, SetupError) as exc:
        click.echo(f"setup error: {exc}", err=True)
        sys.exit(EXIT_SETUP)
    click.echo(report.to_json() if as_json else report.to_text(), nl=False)


@debug.command("evaluate")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
def evaluate_cmd(manifest):
    """Top-N, MFR and MAR over several reports.

    MANIFEST is JSON mapping bug ids to {"report": path, "truth": path}; paths
    are relative to the manifest.
    """
    base = Path(manifest).parent
    entries = json.loads(Path(manifest).read_text())
    rankings, truth = {}, {}
    for bug, paths in entries.items():
        data = json.loads((base / paths["report"]).read_text())
        rankings[bug] = FileRanking(tuple(RankedFile(e["file"], e["score"], e["rank"]) for e in data["ranking"]))
        truth[bug] = load_ground_truth(base / paths["truth"])
    try:
        metrics = eval_metrics(rankings, truth)
    except MissingGroundTruth as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(metrics.to_dict(), indent=2))
