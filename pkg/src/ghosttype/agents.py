"""Suggestion policies: oracle/random/threshold baselines plus tabular
online Q-learning and offline fitted Q-iteration over discrete features.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .corpus import SentenceRecord
from .errors import ConfigError, ContractViolation
from .lm import LanguageModel, LmConfig
from .mdp import (
    WAIT,
    AgentAction,
    AutocompleteEnv,
    EnvState,
    RewardParams,
    suggest,
    user_react,
)

EMPTY_FEATURE = ("empty",)


@dataclass(frozen=True)
class FeatureConfig:
    """Bin layout for the discrete Q-table state."""

    raw_prob_bins: int = 20  # equal-width bins of the top candidate's raw_prob
    insertion_len_cap: int = 5  # 1,2,3,4,5+
    prefix_len_cap: int = 3  # 0,1,2,3+

    def to_json(self) -> dict:
        return {
            "raw_prob_bins": self.raw_prob_bins,
            "insertion_len_cap": self.insertion_len_cap,
            "prefix_len_cap": self.prefix_len_cap,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FeatureConfig":
        return cls(**doc)


def featurize(state: EnvState, fc: FeatureConfig = FeatureConfig()) -> tuple:
    """Discrete feature state of the top candidate (per-action indices are
    handled by the action slot, not the state)."""
    top = state.top
    if top is None:
        return EMPTY_FEATURE
    pbin = min(int(top.raw_prob * fc.raw_prob_bins), fc.raw_prob_bins - 1)
    lbin = min(len(top.completion), fc.insertion_len_cap)
    plbin = min(len(state.current_prefix), fc.prefix_len_cap)
    return (pbin, lbin, plbin)


def available_actions(state: EnvState) -> list[AgentAction]:
    return [WAIT] + [suggest(i) for i in range(len(state.candidates))]


def _available_keys(state: EnvState) -> list[str]:
    return [a.key() for a in available_actions(state)]


# ---------------------------------------------------------------------------
# Baseline policies


class WaitPolicy:
    name = "wait"

    def act(self, state: EnvState) -> AgentAction:
        return WAIT


class ThresholdPolicy:
    """Surface the top candidate iff its raw probability clears tau."""

    def __init__(self, tau: float):
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"tau must be in [0,1], got {tau}")
        self.tau = tau
        self.name = f"threshold:{tau:g}"

    def act(self, state: EnvState) -> AgentAction:
        top = state.top
        if top is not None and top.raw_prob >= self.tau:
            return suggest(0)
        return WAIT


class OraclePolicy:
    """Privileged access to the target: suggests only what will be accepted."""

    name = "oracle"

    def __init__(self, literal_prefix: bool = False):
        self.literal_prefix = literal_prefix
        self.target: Optional[SentenceRecord] = None

    def start_episode(self, target: SentenceRecord) -> None:
        self.target = target

    def act(self, state: EnvState) -> AgentAction:
        if self.target is None:
            raise ContractViolation("oracle used outside an episode")
        for i, cand in enumerate(state.candidates):
            accepted, _ = user_react(self.target, state.typed, cand, self.literal_prefix)
            if accepted:
                return suggest(i)
        return WAIT


class RandomPolicy:
    """Uniform over wait plus the existing candidates."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def act(self, state: EnvState) -> AgentAction:
        return self.rng.choice(available_actions(state))


# ---------------------------------------------------------------------------
# Q-table


@dataclass
class QTable:
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    gamma: float = 0.99
    values: dict[tuple, float] = field(default_factory=dict)
    visits: dict[tuple, int] = field(default_factory=dict)
    training_curve: list[tuple[int, float]] = field(default_factory=list)

    def get(self, feat: tuple, action_key: str) -> float:
        return self.values.get((feat, action_key), 0.0)

    def best(self, feat: tuple, action_keys: Sequence[str]) -> float:
        return max(self.get(feat, k) for k in action_keys)

    def save(self, path: str) -> None:
        entries = [
            {"state": list(feat), "action": ak, "value": v, "visits": self.visits.get((feat, ak), 0)}
            for (feat, ak), v in sorted(self.values.items(), key=lambda kv: (str(kv[0][0]), kv[0][1]))
        ]
        doc = {
            "features_config": self.feature_config.to_json(),
            "gamma": self.gamma,
            "entries": entries,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path: str) -> "QTable":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        table = cls(
            feature_config=FeatureConfig.from_json(doc["features_config"]),
            gamma=doc.get("gamma", 0.99),
        )
        for e in doc["entries"]:
            key = (tuple(e["state"]), e["action"])
            table.values[key] = float(e["value"])
            table.visits[key] = int(e["visits"])
        return table


def greedy_act(table: QTable, state: EnvState) -> AgentAction:
    """Argmax over available actions; ties resolve toward wait."""
    feat = featurize(state, table.feature_config)
    best, best_v = WAIT, table.get(feat, "wait")
    for i in range(len(state.candidates)):
        v = table.get(feat, f"s{i}")
        if v > best_v:
            best, best_v = suggest(i), v
    return best


class GreedyQPolicy:
    def __init__(self, table: QTable, name: str = "q"):
        self.table = table
        self.name = name

    def act(self, state: EnvState) -> AgentAction:
        return greedy_act(self.table, state)


class DpPolicy:
    """Executes a theory.PolicyTable (word tries only): show the top candidate
    whenever the table marks the current prefix as a show state."""

    name = "dp"

    def __init__(self, table):
        self.table = table

    def act(self, state: EnvState) -> AgentAction:
        entry = self.table.entries.get(state.typed)
        if entry is not None and entry.action == "show" and state.candidates:
            return suggest(0)
        return WAIT


# ---------------------------------------------------------------------------
# Online Q-learning


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    steps: int = 250_000
    learning_rate: Optional[float] = None  # None = per-cell sample averages
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    seed: int = 0

    def epsilon(self, step: int) -> float:
        """Linear decay over the first half of training, then flat."""
        half = max(1, self.steps // 2)
        frac = min(1.0, step / half)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


EnvFactory = Callable[[], AutocompleteEnv]


def q_learning_train(
    env_factory: EnvFactory,
    config: TrainConfig = TrainConfig(),
    feature_config: FeatureConfig = FeatureConfig(),
) -> QTable:
    """One-step TD with epsilon-greedy behavior over the feature table."""
    rng = random.Random(config.seed)
    table = QTable(feature_config=feature_config, gamma=config.gamma)
    env = env_factory()
    state = env.reset()
    episode_return = 0.0
    recent: list[float] = []
    for step_i in range(1, config.steps + 1):
        feat = featurize(state, feature_config)
        actions = available_actions(state)
        if rng.random() < config.epsilon(step_i):
            action = rng.choice(actions)
        else:
            action = greedy_act(table, state)
        next_state, outcome = env.step(action)
        episode_return += outcome.reward
        key = (feat, action.key())
        table.visits[key] = table.visits.get(key, 0) + 1
        if outcome.done:
            target = outcome.reward
        else:
            target = outcome.reward + config.gamma * table.best(
                featurize(next_state, feature_config), _available_keys(next_state)
            )
        lr = (
            config.learning_rate
            if config.learning_rate is not None
            else 1.0 / table.visits[key]
        )
        old = table.values.get(key, 0.0)
        new = old + lr * (target - old)
        if not math.isfinite(new):
            raise ContractViolation(
                f"non-finite Q update at {key}: old={old} target={target} lr={lr}"
            )
        table.values[key] = new
        if outcome.done:
            recent.append(episode_return)
            episode_return = 0.0
            env = env_factory()
            state = env.reset()
        else:
            state = next_state
        if step_i % 1000 == 0:
            mean = sum(recent[-50:]) / len(recent[-50:]) if recent else 0.0
            table.training_curve.append((step_i, mean))
    return table


def make_env_factory(
    sentences: Sequence[SentenceRecord],
    model: LanguageModel,
    config: LmConfig = LmConfig(),
    params: Optional[RewardParams] = None,
    seed: int = 0,
    literal_prefix: bool = False,
) -> EnvFactory:
    """Targets sampled uniformly from the sentence multiset."""
    if not sentences:
        raise ConfigError("env factory needs a nonempty sentence set")
    rng = random.Random(seed)

    def factory() -> AutocompleteEnv:
        target = sentences[rng.randrange(len(sentences))]
        return AutocompleteEnv(target, model, config, params, literal_prefix)

    return factory


# ---------------------------------------------------------------------------
# Offline data collection and fitted Q-iteration


@dataclass(frozen=True)
class Transition:
    feat: tuple
    action_key: str
    reward: float
    next_feat: tuple
    next_actions: tuple[str, ...]  # action keys available at the successor
    done: bool
    explored: bool


@dataclass
class OfflineDataset:
    transitions: list[Transition]
    provenance: dict

    @property
    def n_trajectories(self) -> int:
        return self.provenance["n_trajectories"]

    def random_action_rate(self) -> float:
        if not self.transitions:
            return 0.0
        return sum(t.explored for t in self.transitions) / len(self.transitions)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps({"provenance": self.provenance}) + "\n")
            for t in self.transitions:
                f.write(
                    json.dumps(
                        {
                            "s": list(t.feat),
                            "a": t.action_key,
                            "r": t.reward,
                            "s2": list(t.next_feat),
                            "avail2": list(t.next_actions),
                            "done": t.done,
                            "explored": t.explored,
                        }
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: str) -> "OfflineDataset":
        transitions = []
        provenance = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                doc = json.loads(line)
                if "provenance" in doc:
                    provenance = doc["provenance"]
                    continue
                transitions.append(
                    Transition(
                        feat=tuple(doc["s"]),
                        action_key=doc["a"],
                        reward=float(doc["r"]),
                        next_feat=tuple(doc["s2"]),
                        next_actions=tuple(doc["avail2"]),
                        done=bool(doc["done"]),
                        explored=bool(doc.get("explored", False)),
                    )
                )
        return cls(transitions=transitions, provenance=provenance)


def collect_offline(
    base_policy,
    env_factory: EnvFactory,
    n_trajectories: int = 5000,
    exploration_rate: float = 0.05,
    seed: int = 0,
    feature_config: FeatureConfig = FeatureConfig(),
) -> OfflineDataset:
    """Episodes from the base policy with a uniform-random action with
    probability exploration_rate at each step."""
    rng = random.Random(seed)
    transitions: list[Transition] = []
    for _ in range(n_trajectories):
        env = env_factory()
        state = env.reset()
        start = getattr(base_policy, "start_episode", None)
        if start is not None:
            start(env.target)
        while True:
            explored = rng.random() < exploration_rate
            if explored:
                action = rng.choice(available_actions(state))
            else:
                action = base_policy.act(state)
            feat = featurize(state, feature_config)
            next_state, outcome = env.step(action)
            transitions.append(
                Transition(
                    feat=feat,
                    action_key=action.key(),
                    reward=outcome.reward,
                    next_feat=featurize(next_state, feature_config),
                    next_actions=tuple(_available_keys(next_state)),
                    done=outcome.done,
                    explored=explored,
                )
            )
            if outcome.done:
                break
            state = next_state
    provenance = {
        "base_policy": getattr(base_policy, "name", type(base_policy).__name__),
        "exploration_rate": exploration_rate,
        "n_trajectories": n_trajectories,
        "seed": seed,
        "n_transitions": len(transitions),
        "n_explored": sum(t.explored for t in transitions),
    }
    return OfflineDataset(transitions=transitions, provenance=provenance)


def fitted_q_train(
    dataset: OfflineDataset,
    config: TrainConfig = TrainConfig(),
    feature_config: FeatureConfig = FeatureConfig(),
    tol: float = 1e-9,
    max_iters: int = 10_000,
) -> QTable:
    """Iterated Bellman backups over the discrete feature table.

    Unseen (state, action) cells keep the wait-equivalent default of 0.
    Deterministic: same dataset -> bit-identical table.
    """
    if not dataset.transitions:
        raise ConfigError("cannot fit Q on an empty dataset")
    # compress each cell into grouped successor statistics
    cells: dict[tuple, dict] = {}
    for t in dataset.transitions:
        cell = cells.setdefault(
            (t.feat, t.action_key), {"n": 0, "r_sum": 0.0, "succ": {}}
        )
        cell["n"] += 1
        cell["r_sum"] += t.reward
        if not t.done:
            succ_key = (t.next_feat, t.next_actions)
            cell["succ"][succ_key] = cell["succ"].get(succ_key, 0) + 1
    table = QTable(feature_config=feature_config, gamma=config.gamma)
    keys = sorted(cells, key=lambda k: (str(k[0]), k[1]))
    for key in keys:
        table.visits[key] = cells[key]["n"]
        table.values[key] = 0.0
    for _ in range(max_iters):
        delta = 0.0
        for key in keys:
            cell = cells[key]
            backup = cell["r_sum"]
            for (feat2, avail2), count in cell["succ"].items():
                backup += config.gamma * count * table.best(feat2, avail2)
            new = backup / cell["n"]
            delta = max(delta, abs(new - table.values[key]))
            table.values[key] = new
        if delta < tol:
            break
    return table


# ---------------------------------------------------------------------------
# Policy specs


@dataclass(frozen=True)
class PolicySpec:
    kind: str  # oracle | random | threshold | dp | q_online | q_offline | q | wait
    tau: Optional[float] = None
    seed: Optional[int] = None
    table_path: Optional[str] = None

    KINDS = ("oracle", "random", "threshold", "dp", "q_online", "q_offline", "q", "wait")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0,1], got {self.tau}")


def parse_policy_spec(text: str) -> PolicySpec:
    """Parse CLI forms like `oracle`, `threshold:0.3`, `q:/path/table.json`."""
    kind, _, arg = text.partition(":")
    kind = kind.strip()
    if kind == "threshold":
        return PolicySpec(kind="threshold", tau=float(arg))
    if kind in ("q", "dp"):
        return PolicySpec(kind=kind, table_path=arg or None)
    if kind == "random":
        return PolicySpec(kind="random", seed=int(arg) if arg else None)
    return PolicySpec(kind=kind)


def build_policy(spec: PolicySpec, seed: int = 0, literal_prefix: bool = False):
    if spec.kind == "oracle":
        return OraclePolicy(literal_prefix=literal_prefix)
    if spec.kind == "random":
        return RandomPolicy(seed=spec.seed if spec.seed is not None else seed)
    if spec.kind == "threshold":
        return ThresholdPolicy(spec.tau)
    if spec.kind == "wait":
        return WaitPolicy()
    if spec.kind == "q":
        if not spec.table_path:
            raise ConfigError("q policy needs a table path")
        return GreedyQPolicy(QTable.load(spec.table_path))
    raise ConfigError(f"policy kind {spec.kind!r} needs a training harness")
