"""Advantage actor-critic selection of mutation rules."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

N_RULES = 13
STATE_SIZE = 4 + 2 * N_RULES
CHECKPOINT_VERSION = 1


class DivisionGuard(ZeroDivisionError):
    """A reward was requested for a rule that was never selected."""


class NonFiniteGradient(FloatingPointError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.9
    beta: float = 0.1
    lookahead: int = 5
    hidden: int = 32
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.lookahead < 1:
            raise ValueError("lookahead must be at least 1")
        if self.hidden < 1:
            raise ValueError("hidden size must be positive")


# --- reward ledger -------------------------------------------------------------------


class RewardLedger:
    """Per-rule cumulative quality gain and selection counts."""

    def __init__(self, n_rules: int = N_RULES):
        self.sums = [0.0] * n_rules
        self.counts = [0] * n_rules
        self.t = 0

    def record(self, rule: int, delta_q: float) -> None:
        self.sums[rule] += delta_q
        self.counts[rule] += 1
        self.t += 1

    def reward(self, rule: int) -> float:
        if self.counts[rule] == 0:
            raise DivisionGuard(f"rule index {rule} has not been selected")
        return self.sums[rule] / self.counts[rule]

    def means(self) -> list[float]:
        return [s / c if c else 0.0 for s, c in zip(self.sums, self.counts)]

    def to_dict(self) -> dict:
        return {"sums": self.sums, "counts": self.counts, "t": self.t}

    @classmethod
    def from_dict(cls, data: dict) -> "RewardLedger":
        ledger = cls(len(data["sums"]))
        ledger.sums = [float(x) for x in data["sums"]]
        ledger.counts = [int(x) for x in data["counts"]]
        ledger.t = int(data["t"])
        return ledger


def encode_state(
    t: int,
    t_max: int,
    sim: float,
    div: float,
    n: int,
    n_max: int,
    last_action: int | None,
    mean_gain: list[float],
) -> np.ndarray:
    """Progress, current set quality, last action one-hot and per-rule mean gain."""
    onehot = np.zeros(len(mean_gain))
    if last_action is not None:
        onehot[last_action] = 1.0
    head = [t / max(t_max, 1), sim, div, n / max(n_max, 1)]
    return np.concatenate([np.array(head, dtype=float), onehot, np.asarray(mean_gain, dtype=float)])


def advantage_loss(rewards, value_t: float, value_tu: float, gamma: float) -> float:
    """sum_i gamma^i R_{t+i} + gamma^(u+1) V(s_{t+u}) - V(s_t), where u = len(rewards) - 1."""
    u = len(rewards) - 1
    ret = math.fsum(gamma**i * r for i, r in enumerate(rewards))
    return ret + gamma ** (u + 1) * value_tu - value_t


# --- networks ------------------------------------------------------------------------


class Mlp:
    """One tanh hidden layer followed by a linear output layer.

    Weights start uniform in [-scale, scale] and biases at zero, so an
    all-zero input gives equal outputs.
    """

    def __init__(self, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator, scale: float = 0.1):
        self.params = {
            "W1": rng.uniform(-scale, scale, (n_hidden, n_in)),
            "b1": np.zeros(n_hidden),
            "W2": rng.uniform(-scale, scale, (n_out, n_hidden)),
            "b2": np.zeros(n_out),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        h = np.tanh(p["W1"] @ x + p["b1"])
        return h, p["W2"] @ h + p["b2"]

    def backward(self, x: np.ndarray, h: np.ndarray, dout: np.ndarray) -> dict[str, np.ndarray]:
        """Gradient of ``dout . output`` with respect to every parameter."""
        p = self.params
        dz = (p["W2"].T @ dout) * (1.0 - h * h)
        return {"W1": np.outer(dz, x), "b1": dz, "W2": np.outer(dout, h), "b2": dout.copy()}

    def step(self, grads: dict[str, np.ndarray], scale: float) -> None:
        """params += scale * grads, all or nothing."""
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise NonFiniteGradient("gradient contains NaN or infinity")
        updated = {k: v + scale * grads[k] for k, v in self.params.items()}
        if not all(np.all(np.isfinite(v)) for v in updated.values()):
            raise NonFiniteGradient("update would make weights non-finite")
        self.params = updated


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


class PolicyNet(Mlp):
    def probs(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x)[1])

    def log_prob_grads(self, x: np.ndarray, action: int) -> dict[str, np.ndarray]:
        """Gradient of log pi(action | x)."""
        h, logits = self.forward(x)
        dout = -softmax(logits)
        dout[action] += 1.0
        return self.backward(x, h, dout)


class ValueNet(Mlp):
    def value(self, x: np.ndarray) -> float:
        return float(self.forward(x)[1][0])

    def regression_grads(self, x: np.ndarray, target: float) -> dict[str, np.ndarray]:
        """Negative gradient of 0.5 * (target - V(x))^2, i.e. the descent direction."""
        h, out = self.forward(x)
        return self.backward(x, h, np.array([target - out[0]]))


# --- agent ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Update:
    step: int
    action: int
    advantage: float
    target: float
    horizon: int


class A2CAgent:
    """Samples rules from the actor and learns from u-step advantages.

    An observed step is held back until ``lookahead`` later rewards exist, then
    updates both networks; :meth:`finish` flushes the remainder with shrinking
    horizons and a zero terminal value.
    """

    def __init__(self, hp: Hyperparams = Hyperparams(), n_actions: int = N_RULES, n_features: int | None = None):
        self.hp = hp
        self.n_actions = n_actions
        self.n_features = n_features if n_features is not None else 4 + 2 * n_actions
        self.rng = np.random.default_rng(hp.seed)
        self.actor = PolicyNet(self.n_features, hp.hidden, n_actions, self.rng, hp.init_scale)
        self.critic = ValueNet(self.n_features, hp.hidden, 1, self.rng, hp.init_scale)
        self.ledger = RewardLedger(n_actions)
        self.pending: deque[tuple[int, np.ndarray, int, float]] = deque()
        self.updates: list[Update] = []
        self.steps = 0

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        return self.actor.probs(state)

    def select_action(self, state: np.ndarray) -> int:
        """Action index in [0, n_actions); the very first choice is uniform."""
        if self.steps == 0 and not self.pending and sum(self.ledger.counts) == 0:
            return int(self.rng.integers(self.n_actions))
        p = self.actor.probs(state)
        return int(self.rng.choice(self.n_actions, p=p))

    def observe(self, state: np.ndarray, action: int, delta_q: float) -> float:
        """Record the step's quality gain; returns the reward credited to ``action``."""
        self.ledger.record(action, delta_q)
        reward = self.ledger.reward(action)
        self.pending.append((self.steps, np.asarray(state, dtype=float), action, reward))
        self.steps += 1
        while len(self.pending) > self.hp.lookahead:
            self._update(bootstrap=True)
        return reward

    def finish(self) -> None:
        while self.pending:
            self._update(bootstrap=False)

    def _update(self, bootstrap: bool) -> None:
        window = list(self.pending)[: self.hp.lookahead + 1] if bootstrap else list(self.pending)
        step, state, action, _ = window[0]
        rewards = [w[3] for w in window]
        v_t = self.critic.value(state)
        v_tu = self.critic.value(window[-1][1]) if bootstrap else 0.0
        adv = advantage_loss(rewards, v_t, v_tu, self.hp.gamma)
        target = adv + v_t
        self.pending.popleft()
        if not math.isfinite(adv):
            raise NonFiniteGradient("advantage is not finite")
        self.update_weights(state, action, adv, target)
        self.updates.append(Update(step, action, adv, target, len(rewards) - 1))

    def update_weights(self, state: np.ndarray, action: int, advantage: float, target: float) -> None:
        """Policy ascent on advantage * log pi and a critic step toward ``target``.

        Both gradients are checked before either network changes.
        """
        if not (math.isfinite(advantage) and math.isfinite(target)):
            raise NonFiniteGradient("advantage or critic target is not finite")
        pg = {k: advantage * g for k, g in self.actor.log_prob_grads(state, action).items()}
        vg = self.critic.regression_grads(state, target)
        for g in (*pg.values(), *vg.values()):
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient("gradient contains NaN or infinity")
        self.actor.step(pg, self.hp.beta)
        self.critic.step(vg, self.hp.beta)

    # --- checkpoints ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "hyperparams": asdict(self.hp),
            "n_actions": self.n_actions,
            "n_features": self.n_features,
            "ledger": self.ledger.to_dict(),
            "steps": self.steps,
            "rng": self.rng.bit_generator.state,
            "pending": [(s, st.tolist(), a, r) for s, st, a, r in self.pending],
        }
        arrays = {f"actor_{k}": v for k, v in self.actor.params.items()}
        arrays.update({f"critic_{k}": v for k, v in self.critic.params.items()})
        with open(path, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "A2CAgent":
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                arrays = {k: data[k] for k in data.files if k != "meta"}
        except (OSError, ValueError, KeyError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {meta.get('version')}")
        agent = cls(Hyperparams(**meta["hyperparams"]), meta["n_actions"], meta["n_features"])
        agent.actor.params = {k[6:]: v for k, v in arrays.items() if k.startswith("actor_")}
        agent.critic.params = {k[7:]: v for k, v in arrays.items() if k.startswith("critic_")}
        agent.ledger = RewardLedger.from_dict(meta["ledger"])
        agent.steps = meta["steps"]
        agent.rng.bit_generator.state = meta["rng"]
        agent.pending = deque((s, np.array(st), a, r) for s, st, a, r in meta["pending"])
        return agent


__all__ = [
    "A2CAgent",
    "CheckpointError",
    "DivisionGuard",
    "Hyperparams",
    "Mlp",
    "N_RULES",
    "NonFiniteGradient",
    "PolicyNet",
    "RewardLedger",
    "STATE_SIZE",
    "Update",
    "ValueNet",
    "advantage_loss",
    "encode_state",
    "softmax",
]
