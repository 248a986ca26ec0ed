"""Exact analysis of myopic vs farsighted suggestion policies.

Closed-form Q-values for the two-word setting, the interval of per-character
load values where the two optimal policies disagree, brute-force backward
induction as the oracle, and an exact DP solver over word tries used for the
disagreement sweep.

All solvers are Markov over *contexts*: the acceptance probability of the
shown candidate is the posterior mass consistent with the current prefix,
resampled each step. Rejection history does not condition later states.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import ConfigError, ContractViolation

SHOW = "show"
WAIT = "wait"


@dataclass(frozen=True)
class TwoWordInstance:
    """Two length-n words sharing exactly their first m letters."""

    n: int
    m: int
    alpha: float
    beta: float

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ConfigError(f"need 1 <= m < n, got m={self.m}, n={self.n}")


@dataclass(frozen=True)
class QPair:
    q_show: float
    q_wait: float

    @property
    def action(self) -> str:
        return SHOW if self.q_show > self.q_wait else WAIT


@dataclass(frozen=True)
class FarsightedQ(QPair):
    in_validity_regime: bool = True


def q_myopic_at_m(inst: TwoWordInstance) -> QPair:
    """gamma=0 Q-values at the last shared letter."""
    d = inst.n - inst.m
    return QPair(q_show=d * (0.5 - inst.alpha) - inst.beta, q_wait=0.0)


def farsighted_validity(inst: TwoWordInstance) -> bool:
    """Closed form assumes showing is worthwhile once the prefix diverges."""
    return (inst.n - inst.m - 1) * (1.0 - inst.alpha) >= inst.beta


def q_farsighted_at_m(inst: TwoWordInstance) -> FarsightedQ:
    """gamma=1 Q-values at the last shared letter (flagged outside regime)."""
    d = inst.n - inst.m
    q_wait = (d - 1) * (1.0 - inst.alpha) - inst.beta
    q_show = d * (1.0 - 1.5 * inst.alpha) - 0.5 * (1.0 - inst.alpha) - 1.5 * inst.beta
    return FarsightedQ(q_show=q_show, q_wait=q_wait, in_validity_regime=farsighted_validity(inst))


@dataclass(frozen=True)
class ConstraintInterval:
    alpha_lo: float
    alpha_hi: float

    @property
    def nonempty(self) -> bool:
        return self.alpha_lo < self.alpha_hi

    def contains(self, alpha: float) -> bool:
        return self.alpha_lo < alpha < self.alpha_hi


def disagreement_interval(n: int, m: int, beta: float) -> ConstraintInterval:
    """Alpha range where gamma=1 waits but gamma=0 shows at position m."""
    d = n - m
    return ConstraintInterval(alpha_lo=(1.0 - beta) / (d + 1), alpha_hi=(0.5 * d - beta) / d)


@dataclass
class TwoWordTable:
    """Backward-induction Q table over t in [1, n]; t=n is terminal (0)."""

    inst: TwoWordInstance
    gamma: float
    q_show: dict[int, float]
    q_wait: dict[int, float]

    def q(self, t: int, action: str) -> float:
        return self.q_show[t] if action == SHOW else self.q_wait[t]

    def v(self, t: int) -> float:
        return max(self.q_show[t], self.q_wait[t])

    def action_at(self, t: int) -> str:
        return SHOW if self.q_show[t] > self.q_wait[t] else WAIT


def brute_force_two_word(inst: TwoWordInstance, gamma: float) -> TwoWordTable:
    """Exact backward induction over the two-word context MDP.

    For t <= m the single candidate is the designated word, correct with
    probability 0.5; for t > m the candidate is the target. Accepting ends
    the episode (the whole word is completed); Q(t=n, .) = 0.
    """
    n, m, a, b = inst.n, inst.m, inst.alpha, inst.beta
    q_show = {n: 0.0}
    q_wait = {n: 0.0}
    for t in range(n - 1, m, -1):  # diverged: candidate is the target
        v_next = max(q_show[t + 1], q_wait[t + 1])
        q_show[t] = (n - t) * (1.0 - a) - b
        q_wait[t] = gamma * v_next
    for t in range(m, 0, -1):  # shared prefix: accept with probability 0.5
        v_next = max(q_show[t + 1], q_wait[t + 1])
        q_wait[t] = gamma * v_next
        q_show[t] = 0.5 * ((n - t) * (1.0 - a) - b) + 0.5 * (
            -(n - t) * a - b + gamma * v_next
        )
    return TwoWordTable(inst=inst, gamma=gamma, q_show=q_show, q_wait=q_wait)


# ---------------------------------------------------------------------------
# Word-trie MDP


@dataclass(frozen=True)
class TrieMdp:
    """Finite MDP over prefixes of a weighted word list, k=1 candidate rule."""

    words: tuple[str, ...]
    priors: tuple[float, ...]
    alpha: float
    beta_correct: float
    beta_incorrect: float
    gamma: float = 1.0
    literal_prefix: bool = False

    def __post_init__(self):
        if not self.words:
            raise ConfigError("TrieMdp needs at least one target word")
        if len(self.words) != len(self.priors):
            raise ConfigError("words and priors must have equal length")
        if len(set(self.words)) != len(self.words):
            raise ConfigError("target words must be distinct")
        total = sum(self.priors)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"priors must sum to 1, got {total}")
        if any(p <= 0 for p in self.priors):
            raise ConfigError("priors must be positive")

    @classmethod
    def from_frequencies(
        cls,
        words: Sequence[str],
        weights: Optional[Sequence[float]] = None,
        *,
        alpha: float,
        beta: Optional[float] = None,
        beta_correct: Optional[float] = None,
        beta_incorrect: Optional[float] = None,
        gamma: float = 1.0,
        uniform: bool = False,
        literal_prefix: bool = False,
    ) -> "TrieMdp":
        if beta is not None:
            beta_correct = beta_incorrect = beta
        if beta_correct is None or beta_incorrect is None:
            raise ConfigError("need beta or both beta_correct/beta_incorrect")
        if uniform or weights is None:
            weights = [1.0] * len(words)
        total = float(sum(weights))
        return cls(
            words=tuple(words),
            priors=tuple(w / total for w in weights),
            alpha=alpha,
            beta_correct=beta_correct,
            beta_incorrect=beta_incorrect,
            gamma=gamma,
            literal_prefix=literal_prefix,
        )

    def states(self) -> list[str]:
        """All proper prefixes of target words (reachable, non-terminal)."""
        seen = set()
        for w in self.words:
            for i in range(len(w)):
                seen.add(w[:i])
        return sorted(seen, key=lambda s: (-len(s), s))

    def posterior(self, state: str) -> list[tuple[int, float]]:
        """(word index, probability) over targets strictly extending state."""
        idx = [
            i
            for i, w in enumerate(self.words)
            if len(w) > len(state) and w.startswith(state)
        ]
        total = sum(self.priors[i] for i in idx)
        return [(i, self.priors[i] / total) for i in idx]

    def candidate(self, state: str) -> int:
        """Top-1 prefix-consistent target by prior; ties to the earliest listed."""
        post = self.posterior(state)
        if not post:
            raise ContractViolation(f"state {state!r} has no consistent target")
        return max(post, key=lambda ip: (ip[1], -ip[0]))[0]

    def accepts(self, target: str, cand: str) -> bool:
        if self.literal_prefix:
            return target.startswith(cand)
        return target == cand


@dataclass(frozen=True)
class StateEntry:
    action: str
    v: float
    q_show: float
    q_wait: float


@dataclass
class PolicyTable:
    gamma: float
    entries: dict[str, StateEntry]

    def action(self, state: str) -> str:
        return self.entries[state].action

    def v(self, state: str) -> float:
        return self.entries[state].v

    @property
    def root_value(self) -> float:
        return self.entries[""].v


@dataclass(frozen=True)
class DisagreementReport:
    total_states: int
    disagreements: int

    @property
    def fraction(self) -> float:
        return self.disagreements / self.total_states if self.total_states else 0.0


def _backward(mdp: TrieMdp, policy: Optional[dict[str, str]] = None) -> PolicyTable:
    """Backward induction over prefix states (transitions strictly lengthen).

    With `policy` given, evaluates that fixed policy instead of optimizing.
    """
    values: dict[str, float] = {}
    entries: dict[str, StateEntry] = {}

    def v_of(prefix: str, word: str) -> float:
        # the continuation after one more character of `word` is typed
        if len(word) == len(prefix) + 1:
            return 0.0  # typing that character completes the target
        return values[word[: len(prefix) + 1]]

    for s in mdp.states():  # sorted by decreasing length: successors done first
        post = mdp.posterior(s)
        ci = mdp.candidate(s)
        cand = mdp.words[ci]
        ins_len = len(cand) - len(s)
        q_wait = mdp.gamma * sum(p * v_of(s, mdp.words[i]) for i, p in post)
        q_show = 0.0
        for i, p in post:
            w = mdp.words[i]
            if mdp.accepts(w, cand):
                r = (1.0 - mdp.alpha) * ins_len - mdp.beta_correct
                cont = 0.0 if w == cand else values[cand]  # literal mode may continue
                q_show += p * (r + mdp.gamma * cont)
            else:
                r = -mdp.alpha * ins_len - mdp.beta_incorrect
                q_show += p * (r + mdp.gamma * v_of(s, w))
        if policy is None:
            action = SHOW if q_show > q_wait else WAIT
            v = max(q_show, q_wait)
        else:
            action = policy[s]
            v = q_show if action == SHOW else q_wait
        values[s] = v
        entries[s] = StateEntry(action=action, v=v, q_show=q_show, q_wait=q_wait)
    return PolicyTable(gamma=mdp.gamma, entries=entries)


def solve_dp(mdp: TrieMdp) -> PolicyTable:
    """Exact optimal policy/value table by backward dynamic programming."""
    return _backward(mdp, policy=None)


def policy_value(mdp: TrieMdp, policy: dict[str, str]) -> float:
    """Root value of a fixed policy evaluated under mdp's discount."""
    return _backward(mdp, policy=policy).root_value


def count_disagreements(a: PolicyTable, b: PolicyTable) -> DisagreementReport:
    if set(a.entries) != set(b.entries):
        raise ContractViolation("policy tables cover different state sets")
    diff = sum(1 for s in a.entries if a.entries[s].action != b.entries[s].action)
    return DisagreementReport(total_states=len(a.entries), disagreements=diff)


def alpha_sweep(
    words: Sequence[str],
    weights: Optional[Sequence[float]],
    alphas: Sequence[float],
    beta: float,
    uniform: bool = False,
) -> list[tuple[float, DisagreementReport]]:
    """Per alpha: solve gamma=1 and gamma=0, count action disagreements."""
    out = []
    for alpha in alphas:
        base = TrieMdp.from_frequencies(
            words, weights, alpha=alpha, beta=beta, gamma=1.0, uniform=uniform
        )
        far = solve_dp(base)
        myo = solve_dp(replace(base, gamma=0.0))
        out.append((alpha, count_disagreements(far, myo)))
    return out


def default_alpha_grid() -> list[float]:
    return [round(0.05 * i, 2) for i in range(1, 20)]


def simulate_return(
    mdp: TrieMdp, policy: dict[str, str], rng: random.Random, max_steps: int = 10_000
) -> float:
    """One Monte-Carlo rollout of the trie MDP's own (context-Markov) dynamics."""
    s = ""
    total = 0.0
    discount = 1.0
    for _ in range(max_steps):
        post = mdp.posterior(s)
        r = rng.random()
        acc = 0.0
        wi = post[-1][0]
        for i, p in post:
            acc += p
            if r < acc:
                wi = i
                break
        w = mdp.words[wi]
        if policy[s] == SHOW:
            cand = mdp.words[mdp.candidate(s)]
            ins_len = len(cand) - len(s)
            if mdp.accepts(w, cand):
                total += discount * ((1.0 - mdp.alpha) * ins_len - mdp.beta_correct)
                if w == cand:
                    return total
                s = cand
                discount *= mdp.gamma
                continue
            total += discount * (-mdp.alpha * ins_len - mdp.beta_incorrect)
        # one character of w gets typed
        if len(w) == len(s) + 1:
            return total
        s = w[: len(s) + 1]
        discount *= mdp.gamma
    raise ContractViolation("rollout did not terminate")
