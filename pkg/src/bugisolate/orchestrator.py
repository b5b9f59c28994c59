"""The mutate, validate, classify and learn loop, and its run log."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import secrets
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .agent import A2CAgent, Hyperparams, encode_state
from .complexity import mutation_target
from .harness import (
    Backend,
    Classification,
    CompilerSpec,
    OracleKind,
    RealBackend,
    Scenario,
    SetupError,
    SimulatedBackend,
)
from .llm import Conversation, Gateway, GatewayError, HttpGateway, LlmReply, MockGateway, ModelConfig, extract_program, prompt_hash
from .program import SourceProgram, def_use, parse
from .prompts import FeedbackPrompt, render_feedback, render_prompt, rule, system_prompt, with_feedback
from .sbfl import FileRanking, eval_metrics, isolate, load_ground_truth
from .spectra import DEFAULT_ALPHA, INITIAL, QualityState, SpectrumSet, quality
from .validation import AnalyzerFailure, validate

log = logging.getLogger(__name__)

LOG_VERSION = 1
HISTORY_MESSAGES = 6


class LogMismatch(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


# --- configuration -------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    bug_id: str
    failing_program: Path
    backend: dict
    llm: dict
    oracle: OracleKind | None = None
    alpha: float = DEFAULT_ALPHA
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    budget_seconds: float | None = 3600.0
    target: int | None = 10
    max_steps: int = 200
    seed: int | None = None
    output_dir: Path | None = None
    analyzer: str | None = None
    variables: int | None = None
    ground_truth: Path | None = None

    def __post_init__(self) -> None:
        if self.budget_seconds is None and self.target is None:
            raise ConfigError("set a wall-clock budget, a target count, or both")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ConfigError("budget_seconds must be positive")
        if self.target is not None and self.target < 1:
            raise ConfigError("target must be at least 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.backend.get("kind") not in ("real", "simulated"):
            raise ConfigError("backend.kind must be 'real' or 'simulated'")
        if self.llm.get("gateway", "http") not in ("http", "mock"):
            raise ConfigError("llm.gateway must be 'http' or 'mock'")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".") -> "RunConfig":
        """Build from the JSON config layout; relative paths resolve against ``base_dir``."""
        base = Path(base_dir)
        data = copy.deepcopy(data)

        def path(value):
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        try:
            backend = data["backend"]
            for key in ("scenario", "build_dir", "workdir"):
                if backend.get(key) is not None:
                    backend[key] = str(path(backend[key]))
            llm = data.get("llm", {"gateway": "http"})
            if llm.get("fixtures") is not None:
                llm["fixtures"] = str(path(llm["fixtures"]))
            term = data.get("termination", {})
            return cls(
                bug_id=str(data.get("bug_id", "bug")),
                failing_program=path(data["failing_program"]),
                backend=backend,
                llm=llm,
                oracle=OracleKind(data["oracle"]) if data.get("oracle") else None,
                alpha=float(data.get("alpha", DEFAULT_ALPHA)),
                hyperparams=Hyperparams(**data.get("agent", {})),
                budget_seconds=term.get("budget_seconds", 3600.0),
                target=term.get("target", 10),
                max_steps=int(term.get("max_steps", 200)),
                seed=data.get("seed"),
                output_dir=path(data.get("output_dir")),
                analyzer=data.get("analyzer"),
                variables=data.get("variables"),
                ground_truth=path(data.get("ground_truth")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid run configuration: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        return cls.from_dict(data, p.parent)

    def to_dict(self) -> dict:
        hp = self.hyperparams
        return {
            "bug_id": self.bug_id,
            "failing_program": str(self.failing_program),
            "oracle": self.oracle.value if self.oracle else None,
            "backend": self.backend,
            "llm": self.llm,
            "alpha": self.alpha,
            "agent": {"gamma": hp.gamma, "beta": hp.beta, "lookahead": hp.lookahead, "hidden": hp.hidden},
            "termination": {"budget_seconds": self.budget_seconds, "target": self.target, "max_steps": self.max_steps},
            "seed": self.seed,
            "analyzer": self.analyzer,
            "variables": self.variables,
            "ground_truth": str(self.ground_truth) if self.ground_truth else None,
        }

    def config_hash(self) -> str:
        """Digest of everything that affects results; the output directory is left out."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def with_seed(self) -> "RunConfig":
        if self.seed is not None:
            return self
        return replace(self, seed=secrets.randbelow(2**31))


def build_backend(config: RunConfig, failing: SourceProgram) -> Backend:
    spec = {k: v for k, v in config.backend.items() if k != "kind"}
    if config.backend["kind"] == "simulated":
        if "scenario" not in spec:
            raise ConfigError("the simulated backend needs a scenario file")
        scenario = Scenario.load(spec["scenario"])
        if config.oracle and config.oracle is not scenario.oracle:
            raise SetupError(f"config oracle {config.oracle.value} disagrees with scenario oracle {scenario.oracle.value}")
        return SimulatedBackend(scenario, failing, config.seed or 0)
    try:
        compiler = CompilerSpec.from_dict(spec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid compiler spec: {exc}") from exc
    return RealBackend(compiler, config.oracle or OracleKind.WRONG_CODE)


def model_config(config: RunConfig) -> ModelConfig:
    try:
        return ModelConfig(**{k: v for k, v in config.llm.items() if k not in ("gateway", "fixtures")})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid llm settings: {exc}") from exc


def build_gateway(config: RunConfig) -> Gateway:
    if config.llm.get("gateway", "http") == "mock":
        if not config.llm.get("fixtures"):
            raise ConfigError("the mock gateway needs a fixtures directory")
        return MockGateway(config.llm["fixtures"])
    return HttpGateway()


# --- run log -------------------------------------------------------------------------


class RunLog:
    """Append-only newline-delimited JSON, flushed after every record."""

    def __init__(self, path: Path | None = None):
        self.path = path
        self.records: list[dict] = []
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def append(self, record: dict) -> None:
        if record.get("type") == "step" and self.steps() and record["t"] <= self.steps()[-1]["t"]:
            raise ValueError("step numbers must increase")
        self.records.append(record)
        if self._fh:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()

    def steps(self) -> list[dict]:
        return [r for r in self.records if r.get("type") == "step"]

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    @staticmethod
    def read(path: str | Path) -> list[dict]:
        try:
            return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise LogMismatch(f"cannot read run log {path}: {exc}") from exc


# --- report --------------------------------------------------------------------------


@dataclass(frozen=True)
class IsolationReport:
    bug_id: str
    seed: int
    config_hash: str
    config: dict
    ranking: FileRanking
    summary: dict
    quality: QualityState
    evaluation: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "bug_id": self.bug_id,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "config": self.config,
            "summary": self.summary,
            "quality": self.quality.to_dict(),
            "ranking": self.ranking.to_json(),
        }
        if self.evaluation is not None:
            out["evaluation"] = self.evaluation
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self, limit: int = 20) -> str:
        s = self.summary
        lines = [
            f"bug {self.bug_id}  seed {self.seed}",
            f"steps {s['steps']}  accepted {s['accepted']}  passing {s['passing']}  valid {s['valid']}"
            f"  invalid {s['invalid']}  unparseable {s['unparseable']}  ({s['termination']})",
            f"quality {self.quality.q:.6f}  sim {self.quality.sim:.6f}  div {self.quality.div:.6f}",
            "",
            self.ranking.format_text(limit),
        ]
        if self.evaluation:
            lines += ["", "faulty file ranks: " + ", ".join(f"{f} {r}" for f, r in self.evaluation["ranks"].items())]
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(self.to_json())
        (out_dir / "report.txt").write_text(self.to_text())


# --- the loop ------------------------------------------------------------------------


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class _Tally:
    steps: int = 0
    unparseable: int = 0
    invalid: int = 0
    valid: int = 0
    passing: int = 0
    accepted: int = 0
    rejected: int = 0


class _ReplayGateway:
    def __init__(self, steps: list[dict]):
        self.steps = steps
        self.i = 0

    def complete(self, conversation: Conversation, config: ModelConfig | None = None) -> LlmReply:
        if self.i >= len(self.steps):
            raise LogMismatch("the run asked for more replies than the log holds")
        rec = self.steps[self.i]
        self.i += 1
        if prompt_hash(conversation.last_user()) != rec["prompt_hash"]:
            raise LogMismatch(f"prompt at step {rec['t']} differs from the logged one")
        if _sha(rec["reply"]) != rec["reply_hash"]:
            raise LogMismatch(f"logged reply at step {rec['t']} does not match its hash")
        return LlmReply(rec["reply"])


_CHECKED = ("rule", "prompt_hash", "reply_hash", "outcome", "verdict", "classification", "spectrum", "accepted")
_CHECKED_FLOATS = ("delta_q", "reward", "q")


def _compare(expected: dict, got: dict) -> None:
    for key in _CHECKED:
        if expected.get(key) != got.get(key):
            raise LogMismatch(f"step {got['t']}: {key} is {got.get(key)!r}, log says {expected.get(key)!r}")
    for key in _CHECKED_FLOATS:
        if expected.get(key) != got.get(key):
            raise LogMismatch(f"step {got['t']}: {key} is {got.get(key)!r}, log says {expected.get(key)!r}")


def _prepare(config: RunConfig):
    try:
        failing = SourceProgram.from_file(config.failing_program)
    except (OSError, ValueError) as exc:
        raise SetupError(f"cannot read failing program {config.failing_program}: {exc}") from exc
    ast = parse(failing)
    target = mutation_target(ast, def_use(ast), config.variables)
    backend = build_backend(config, failing)
    verdict, spectrum = backend.evaluate(failing)
    if verdict is not Classification.FAILING or not spectrum:
        raise SetupError(f"the failing program is classified {verdict.value} by the backend")
    return failing, target, backend, spectrum


def _ground_truth(config: RunConfig, backend: Backend) -> list[str] | None:
    if config.ground_truth:
        return load_ground_truth(config.ground_truth)
    if isinstance(backend, SimulatedBackend):
        return [backend.scenario.faulty_file]
    return None


def _loop(
    config: RunConfig,
    gateway: Gateway,
    model: ModelConfig,
    runlog: RunLog,
    clock: Callable[[], float],
    replay_steps: list[dict] | None = None,
    replay_reason: str | None = None,
) -> IsolationReport:
    failing, target, backend, failing_spectrum = _prepare(config)
    agent = A2CAgent(replace(config.hyperparams, seed=config.seed))
    spectra = SpectrumSet(failing_spectrum)
    current: QualityState = replace(INITIAL, alpha=config.alpha)
    history = Conversation().system(system_prompt())
    feedback: FeedbackPrompt | None = None
    tally = _Tally()
    last_action: int | None = None
    n_max = config.target or config.max_steps
    limit = len(replay_steps) if replay_steps is not None else config.max_steps
    start = clock()
    reason = "max_steps"

    runlog.append(
        {"type": "header", "version": LOG_VERSION, "bug_id": config.bug_id, "seed": config.seed,
         "config_hash": config.config_hash(), "config": config.to_dict(),
         "target": {"variables": list(target.variables), "location": list(target.location)}}
    )
    for t in range(limit):
        state = encode_state(t, config.max_steps, current.sim, current.div, current.n, n_max, last_action, agent.ledger.means())
        action = agent.select_action(state)
        prompt = render_prompt(rule(action + 1), target, failing)
        user = with_feedback(feedback, prompt)
        feedback = None
        conversation = Conversation(list(history.window(HISTORY_MESSAGES).messages)).user(user)
        try:
            reply = gateway.complete(conversation, model)
        except GatewayError as exc:
            runlog.append({"type": "end", "reason": "gateway_error", "error": str(exc), "steps": tally.steps})
            raise
        history = conversation.assistant(reply.text)

        rec = {"type": "step", "t": t, "rule": action + 1, "prompt_hash": prompt_hash(user),
               "reply_hash": _sha(reply.text), "reply": reply.text, "verdict": None, "cause": None,
               "classification": None, "spectrum": None, "accepted": False}
        delta_q = 0.0
        program = extract_program(reply)
        if program is None:
            rec["outcome"] = "unparseable"
            tally.unparseable += 1
        else:
            try:
                report = validate(program, failing, config.analyzer)
            except AnalyzerFailure as exc:
                log.warning("analyzer failed at step %d: %s", t, exc)
                report = None
            if report is None:
                rec.update(outcome="rejected", verdict="analyzer_error")
                tally.rejected += 1
            elif not report.is_valid:
                rec.update(outcome="invalid", verdict=report.verdict.value, cause=report.to_dict().get("cause"))
                try:
                    feedback = render_feedback(report)
                except ValueError:
                    feedback = None
                tally.invalid += 1
            else:
                tally.valid += 1
                verdict, spectrum = backend.evaluate(program)
                rec.update(verdict="valid", classification=verdict.value)
                if spectrum is not None:
                    rec["spectrum"] = spectrum.digest()
                if verdict is Classification.PASSING and spectrum is not None:
                    tally.passing += 1
                    candidate = quality(spectra.with_passing(spectrum), config.alpha)
                    gain = candidate.q - current.q
                    if gain > 0:
                        spectra, current, delta_q = spectra.with_passing(spectrum), candidate, gain
                        rec["accepted"] = True
                        tally.accepted += 1
                rec["outcome"] = "accepted" if rec["accepted"] else "rejected"
                if not rec["accepted"]:
                    tally.rejected += 1
        reward = agent.observe(state, action, delta_q)
        last_action = action
        tally.steps += 1
        rec.update(delta_q=delta_q, reward=reward, q=current.q, elapsed=round(clock() - start, 6))
        if replay_steps is not None:
            _compare(replay_steps[t], rec)
        runlog.append(rec)

        if config.target is not None and tally.accepted >= config.target:
            reason = "target"
            break
        if replay_steps is None and config.budget_seconds is not None and clock() - start >= config.budget_seconds:
            reason = "budget"
            break
    else:
        if replay_steps is not None:
            reason = replay_reason
    if replay_steps is not None and tally.steps != len(replay_steps):
        raise LogMismatch(f"the run stops after {tally.steps} steps but the log holds {len(replay_steps)}")
    agent.finish()

    ranking = isolate(failing_spectrum, list(spectra.passing))
    summary = {**tally.__dict__, "termination": reason}
    evaluation = None
    truth = _ground_truth(config, backend)
    if truth:
        ranks = {f: ranking.rank_of(f) for f in truth}
        evaluation = {"ranks": ranks}
        if any(r is not None for r in ranks.values()):
            evaluation["metrics"] = eval_metrics({config.bug_id: ranking}, {config.bug_id: truth}).to_dict()
    runlog.append({"type": "end", "reason": reason, "steps": tally.steps})
    if config.output_dir is not None:
        agent.save(config.output_dir / "agent.npz")
    return IsolationReport(config.bug_id, config.seed, config.config_hash(), config.to_dict(), ranking, summary, current, evaluation)


def run(config: RunConfig, gateway: Gateway | None = None, clock: Callable[[], float] = time.monotonic) -> IsolationReport:
    """Generate witness programs until a termination condition holds, then rank files.

    Writes ``run.jsonl``, ``report.json``, ``report.txt`` and ``agent.npz``
    when the configuration names an output directory.
    """
    config = config.with_seed()
    model = model_config(config)
    gateway = gateway if gateway is not None else build_gateway(config)
    if config.output_dir is not None:
        config.output_dir.mkdir(parents=True, exist_ok=True)
    runlog = RunLog(config.output_dir / "run.jsonl" if config.output_dir else None)
    try:
        report = _loop(config, gateway, model, runlog, clock)
    finally:
        runlog.close()
    if config.output_dir is not None:
        report.write(config.output_dir)
    return report


def replay(records: list[dict] | str | Path, config: RunConfig) -> IsolationReport:
    """Recompute a run from its logged replies; any divergence raises :class:`LogMismatch`."""
    if not isinstance(records, list):
        records = RunLog.read(records)
    header = next((r for r in records if r.get("type") == "header"), None)
    end = next((r for r in records if r.get("type") == "end"), None)
    if header is None or header.get("version") != LOG_VERSION:
        raise LogMismatch("run log has no compatible header")
    if config.seed is None:
        config = replace(config, seed=header["seed"])
    if header["config_hash"] != config.config_hash():
        raise LogMismatch("config hash mismatch: the log was produced with a different configuration")
    steps = [r for r in records if r.get("type") == "step"]
    if [r["t"] for r in steps] != list(range(len(steps))):
        raise LogMismatch("step numbers in the log are not consecutive")
    for r in steps:
        if not math.isfinite(r.get("delta_q", math.nan)):
            raise LogMismatch(f"step {r['t']} has no finite delta_q")
    reason = end["reason"] if end else None
    return _loop(replace(config, output_dir=None), _ReplayGateway(steps), model_config(config), RunLog(), time.monotonic, steps, reason)


__all__ = [
    "ConfigError",
    "IsolationReport",
    "LogMismatch",
    "RunConfig",
    "RunLog",
    "SetupError",
    "build_backend",
    "build_gateway",
    "model_config",
    "replay",
    "run",
]
