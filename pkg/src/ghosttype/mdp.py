"""The autocomplete decision process.

States carry the typed context and the current candidate slate; the agent
either waits or surfaces one candidate; a deterministic simulated user
accepts exactly-matching suggestions and otherwise types the next target
character. Rewards are proportional to typing time saved minus the
cognitive load of reading suggestions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .corpus import SentenceRecord
from .errors import ConfigError, ContractViolation
from .lm import Candidate, LanguageModel, LmConfig

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz'")
_TRAILING_WORD_RE = re.compile(r"[a-z']*$")
_LAST_WORD_RE = re.compile(r"([a-z']+)[^a-z']*$")


@dataclass(frozen=True)
class TimingConstants:
    """Millisecond timings behind the reward parameters."""

    char_write_ms: float = 521.0
    char_read_ms: float = 40.0
    saccade_ms: float = 30.0


@dataclass(frozen=True)
class RewardParams:
    """Cognitive-load split: alpha per suggested character, beta per suggestion."""

    alpha: float
    beta_correct: float
    beta_incorrect: float

    @classmethod
    def default(cls, timing: TimingConstants = TimingConstants()) -> "RewardParams":
        alpha = timing.char_read_ms / timing.char_write_ms
        beta = 2.0 * timing.saccade_ms / timing.char_write_ms
        return cls(alpha=alpha, beta_correct=beta, beta_incorrect=beta)

    @classmethod
    def study(cls, timing: TimingConstants = TimingConstants()) -> "RewardParams":
        w = timing.char_write_ms
        return cls(alpha=0.0, beta_correct=10.0 / w, beta_incorrect=50.0 / w)

    @classmethod
    def preset(cls, name: str) -> "RewardParams":
        presets = {"default": cls.default, "study": cls.study}
        if name not in presets:
            raise ConfigError(f"unknown reward preset {name!r} (default|study)")
        return presets[name]()


@dataclass(frozen=True)
class AgentAction:
    suggest_index: Optional[int] = None  # None = wait

    @property
    def is_wait(self) -> bool:
        return self.suggest_index is None

    def key(self) -> str:
        return "wait" if self.is_wait else f"s{self.suggest_index}"

    @classmethod
    def from_key(cls, key: str) -> "AgentAction":
        if key == "wait":
            return WAIT
        if key.startswith("s") and key[1:].isdigit():
            return cls(int(key[1:]))
        raise ConfigError(f"bad action key {key!r}")


WAIT = AgentAction(None)


def suggest(index: int) -> AgentAction:
    return AgentAction(index)


@dataclass(frozen=True)
class EnvState:
    typed: str
    current_prefix: str
    candidates: tuple[Candidate, ...]

    @property
    def top(self) -> Optional[Candidate]:
        return self.candidates[0] if self.candidates else None


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    accepted: bool
    inserted: str  # characters added by an accepted suggestion, else ""
    done: bool


@dataclass(frozen=True)
class EpisodeStep:
    t: int
    typed_len: int
    action: AgentAction
    candidate_word: Optional[str]
    raw_prob: Optional[float]
    accepted: bool
    inserted: str
    reward: float


@dataclass
class EpisodeLog:
    target: SentenceRecord
    steps: list[EpisodeStep] = field(default_factory=list)

    @property
    def return_undiscounted(self) -> float:
        return sum(s.reward for s in self.steps)

    @property
    def chars_saved(self) -> int:
        return sum(len(s.inserted) for s in self.steps if s.accepted)

    @property
    def horizon(self) -> int:
        return len(self.steps)

    def to_jsonl(self) -> str:
        lines = []
        for s in self.steps:
            lines.append(
                json.dumps(
                    {
                        "t": s.t,
                        "typed_len": s.typed_len,
                        "action": s.action.key(),
                        "candidate_word": s.candidate_word,
                        "raw_prob": s.raw_prob,
                        "accepted": s.accepted,
                        "reward": s.reward,
                    }
                )
            )
        return "\n".join(lines) + "\n"


def load_env_config(path: str) -> dict:
    """Environment config file (JSON): either {"preset": "default"|"study"}
    or explicit {"alpha", "beta_correct", "beta_incorrect"}, plus optional
    "k" and "literal_prefix". Returns {"params", "k", "literal_prefix"}."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if "preset" in doc:
        params = RewardParams.preset(doc["preset"])
    else:
        try:
            params = RewardParams(
                alpha=float(doc["alpha"]),
                beta_correct=float(doc["beta_correct"]),
                beta_incorrect=float(doc["beta_incorrect"]),
            )
        except KeyError as e:
            raise ConfigError(f"env config missing field {e}")
    return {
        "params": params,
        "k": int(doc.get("k", 1)),
        "literal_prefix": bool(doc.get("literal_prefix", False)),
    }


def context_parts(typed: str) -> tuple[Optional[str], str]:
    """Split typed text into (previous complete word, current word prefix)."""
    prefix = _TRAILING_WORD_RE.search(typed).group(0)
    before = typed[: len(typed) - len(prefix)]
    m = _LAST_WORD_RE.search(before)
    return (m.group(1) if m else None), prefix


def insertion_for(candidate: Candidate, current_prefix: str) -> str:
    """Characters acceptance would insert at the caret."""
    if not candidate.full_words[0].startswith(current_prefix):
        raise ContractViolation(
            f"candidate {candidate.full_words} does not extend prefix {current_prefix!r}"
        )
    return candidate.completion


def user_react(
    target: SentenceRecord,
    typed: str,
    suggestion: Optional[Candidate],
    literal_prefix: bool = False,
) -> tuple[bool, str]:
    """Idealized user: (accepted, chars entered this step).

    Accepts iff the suggestion's insertion matches the next target characters
    and (unless literal_prefix) the character after the insertion is a word
    boundary; otherwise types the next target character. Never makes typos.
    """
    if not target.text.startswith(typed) or typed == target.text:
        raise ContractViolation(f"typed {typed!r} is not a proper prefix of target")
    remaining = target.text[len(typed):]
    if suggestion is not None:
        ins = suggestion.completion
        if ins and remaining.startswith(ins):
            after = remaining[len(ins):]
            if literal_prefix or not after or after[0] not in _WORD_CHARS:
                return True, ins
    return False, remaining[0]


def reward(
    action: AgentAction, accepted: bool, insertion_len: int, params: RewardParams
) -> float:
    """0 for wait; (1-a)*len - b_c if accepted; -a*len - b_w if ignored."""
    if action.is_wait:
        return 0.0
    if accepted:
        return (1.0 - params.alpha) * insertion_len - params.beta_correct
    return -params.alpha * insertion_len - params.beta_incorrect


def make_state(
    typed: str,
    target: SentenceRecord,
    model: LanguageModel,
    config: LmConfig,
) -> EnvState:
    prev_word, prefix = context_parts(typed)
    if typed == target.text:
        cands: tuple[Candidate, ...] = ()
    else:
        cands = tuple(model.candidates(prev_word, prefix, config))
    return EnvState(typed=typed, current_prefix=prefix, candidates=cands)


def step(
    state: EnvState,
    action: AgentAction,
    target: SentenceRecord,
    model: LanguageModel,
    config: LmConfig,
    params: RewardParams,
    literal_prefix: bool = False,
) -> tuple[EnvState, StepOutcome]:
    """One environment transition: agent acts, user enters one key."""
    suggestion = None
    if not action.is_wait:
        if action.suggest_index >= len(state.candidates):
            raise ContractViolation(
                f"suggest index {action.suggest_index} out of range "
                f"({len(state.candidates)} candidates)"
            )
        suggestion = state.candidates[action.suggest_index]
    accepted, entered = user_react(target, state.typed, suggestion, literal_prefix)
    typed = state.typed + entered
    r = reward(action, accepted, len(suggestion.completion) if suggestion else 0, params)
    outcome = StepOutcome(
        reward=r,
        accepted=accepted,
        inserted=entered if accepted else "",
        done=typed == target.text,
    )
    return make_state(typed, target, model, config), outcome


class AutocompleteEnv:
    """Single-episode environment; fresh instance (or reset) per target."""

    def __init__(
        self,
        target: SentenceRecord,
        model: LanguageModel,
        config: LmConfig = LmConfig(),
        params: Optional[RewardParams] = None,
        literal_prefix: bool = False,
    ):
        self.target = target
        self.model = model
        self.config = config
        self.params = params if params is not None else RewardParams.default()
        self.literal_prefix = literal_prefix
        self.state: Optional[EnvState] = None

    def reset(self) -> EnvState:
        self.state = make_state("", self.target, self.model, self.config)
        return self.state

    def step(self, action: AgentAction) -> tuple[EnvState, StepOutcome]:
        if self.state is None:
            raise ContractViolation("step before reset")
        self.state, outcome = step(
            self.state,
            action,
            self.target,
            self.model,
            self.config,
            self.params,
            self.literal_prefix,
        )
        return self.state, outcome


def run_episode(
    policy,
    target: SentenceRecord,
    model: LanguageModel,
    config: LmConfig = LmConfig(),
    params: Optional[RewardParams] = None,
    literal_prefix: bool = False,
) -> EpisodeLog:
    """Roll one episode to completion under `policy` (has .act(state))."""
    env = AutocompleteEnv(target, model, config, params, literal_prefix)
    state = env.reset()
    start = getattr(policy, "start_episode", None)
    if start is not None:
        start(target)
    log = EpisodeLog(target=target)
    t = 0
    while True:
        action = policy.act(state)
        top = None if action.is_wait else state.candidates[action.suggest_index]
        typed_before = len(state.typed)
        state, outcome = env.step(action)
        log.steps.append(
            EpisodeStep(
                t=t,
                typed_len=typed_before,
                action=action,
                candidate_word=top.display() if top else None,
                raw_prob=top.raw_prob if top else None,
                accepted=outcome.accepted,
                inserted=outcome.inserted,
                reward=outcome.reward,
            )
        )
        t += 1
        if outcome.done:
            break
        if t > target.char_count + 1:
            raise ContractViolation("episode exceeded horizon bound")
    return log
