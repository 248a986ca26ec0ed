"""Experiment harness: return/characters-saved tables with confidence
intervals, threshold sweeps, the discount-factor comparison, and the
multi-word crowding analysis.

Reported returns are always undiscounted sums, whatever the training gamma.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .agents import (
    FeatureConfig,
    GreedyQPolicy,
    OraclePolicy,
    RandomPolicy,
    ThresholdPolicy,
    TrainConfig,
    collect_offline,
    fitted_q_train,
    make_env_factory,
    q_learning_train,
)
from .corpus import SentenceRecord
from .errors import ConfigError
from .lm import LanguageModel, LmConfig
from .mdp import EpisodeLog, RewardParams, run_episode


@dataclass(frozen=True)
class EvalConfig:
    sentences: tuple[SentenceRecord, ...]
    runs: int = 5
    params: RewardParams = field(default_factory=RewardParams.default)
    lm_config: LmConfig = LmConfig()
    seed_base: int = 0
    literal_prefix: bool = False
    keep_logs: bool = False

    def __post_init__(self):
        if self.runs < 2:
            raise ConfigError("need runs >= 2 for confidence intervals")
        if not self.sentences:
            raise ConfigError("evaluation sentence set is empty")


@dataclass
class MetricsRow:
    policy: str
    mean_return: float
    ci95_return: float
    mean_chars_saved: float
    ci95_chars_saved: float
    suggestions_made: int
    acceptance_rate: float
    per_run_return: list[float] = field(default_factory=list)
    per_run_chars: list[float] = field(default_factory=list)
    logs: list[EpisodeLog] = field(default_factory=list)


def ci95(values: Sequence[float]) -> float:
    """1.96 * standard error across runs."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return 0.0
    return 1.96 * arr.std(ddof=1) / math.sqrt(arr.size)


# A provider builds a fresh policy for each run (retraining if it learns).
PolicyProvider = tuple[str, Callable[[int], object]]


def evaluate(
    providers: Sequence[PolicyProvider],
    model: LanguageModel,
    config: EvalConfig,
) -> list[MetricsRow]:
    """Per policy, per run: average return over all sentences (reshuffled
    per run); rows carry across-run means and 95% CIs."""
    rows = []
    for name, build in providers:
        run_returns: list[float] = []
        run_chars: list[float] = []
        suggestions = 0
        accepts = 0
        logs: list[EpisodeLog] = []
        for run in range(config.runs):
            seed = config.seed_base + run
            policy = build(seed)
            order = list(config.sentences)
            random.Random(seed).shuffle(order)
            returns = []
            chars = []
            for target in order:
                log = run_episode(
                    policy,
                    target,
                    model,
                    config.lm_config,
                    config.params,
                    config.literal_prefix,
                )
                returns.append(log.return_undiscounted)
                chars.append(log.chars_saved)
                suggestions += sum(1 for s in log.steps if not s.action.is_wait)
                accepts += sum(1 for s in log.steps if s.accepted)
                if config.keep_logs:
                    logs.append(log)
            run_returns.append(float(np.mean(returns)))
            run_chars.append(float(np.mean(chars)))
        rows.append(
            MetricsRow(
                policy=name,
                mean_return=float(np.mean(run_returns)),
                ci95_return=ci95(run_returns),
                mean_chars_saved=float(np.mean(run_chars)),
                ci95_chars_saved=ci95(run_chars),
                suggestions_made=suggestions,
                acceptance_rate=accepts / suggestions if suggestions else 0.0,
                per_run_return=run_returns,
                per_run_chars=run_chars,
                logs=logs,
            )
        )
    return rows


def baseline_providers(
    taus: Sequence[float] = (0.3,),
    literal_prefix: bool = False,
) -> list[PolicyProvider]:
    providers: list[PolicyProvider] = [
        ("oracle", lambda seed: OraclePolicy(literal_prefix=literal_prefix)),
        ("random", lambda seed: RandomPolicy(seed=seed)),
    ]
    for tau in taus:
        providers.append(
            (f"threshold:{tau:g}", lambda seed, tau=tau: ThresholdPolicy(tau))
        )
    return providers


def threshold_sweep(
    taus: Sequence[float],
    model: LanguageModel,
    config: EvalConfig,
) -> tuple[list[MetricsRow], float]:
    """Evaluate a threshold agent per tau; best tau by mean return (ties to
    the lower tau)."""
    providers = [
        (f"threshold:{tau:g}", lambda seed, tau=tau: ThresholdPolicy(tau))
        for tau in taus
    ]
    rows = evaluate(providers, model, config)
    best_i = max(range(len(taus)), key=lambda i: (rows[i].mean_return, -taus[i]))
    return rows, taus[best_i]


def gamma_comparison(
    agent_kind: str,
    model: LanguageModel,
    train_sentences: Sequence[SentenceRecord],
    config: EvalConfig,
    gammas: Sequence[float] = (0.0, 0.99),
    train_steps: int = 50_000,
    n_trajectories: int = 2000,
    base_tau: float = 0.3,
    feature_config: FeatureConfig = FeatureConfig(),
) -> list[MetricsRow]:
    """Train per gamma (online tabular Q or offline fitted Q), evaluate
    undiscounted on the shared evaluation set."""
    if agent_kind not in ("q_online", "q_offline"):
        raise ConfigError(f"gamma comparison expects q_online|q_offline, got {agent_kind}")
    providers: list[PolicyProvider] = []
    for gamma in gammas:
        def build(seed: int, gamma=gamma):
            factory = make_env_factory(
                train_sentences,
                model,
                config.lm_config,
                config.params,
                seed=seed,
                literal_prefix=config.literal_prefix,
            )
            tc = TrainConfig(gamma=gamma, steps=train_steps, seed=seed)
            if agent_kind == "q_online":
                table = q_learning_train(factory, tc, feature_config)
            else:
                dataset = collect_offline(
                    ThresholdPolicy(base_tau),
                    factory,
                    n_trajectories=n_trajectories,
                    seed=seed,
                    feature_config=feature_config,
                )
                table = fitted_q_train(dataset, tc, feature_config)
            return GreedyQPolicy(table, name=f"{agent_kind}:g{gamma:g}")

        providers.append((f"{agent_kind}:gamma={gamma:g}", build))
    return evaluate(providers, model, config)


# ---------------------------------------------------------------------------
# Multi-word crowding analysis


@dataclass(frozen=True)
class CrowdingReport:
    states_examined: int
    crowded_states: int
    oracle_saved_single: int
    oracle_saved_mixed: int


def crowding_report(
    model: LanguageModel,
    sentences: Sequence[SentenceRecord],
    k: int = 5,
    lam: float = 0.7,
    literal_prefix: bool = False,
    multiword: bool = True,
) -> CrowdingReport:
    """Replay oracle decisions under single-word vs mixed top-k slates.

    States examined are all typed-prefixes of each sentence (the wait-only
    trajectory); a state is crowded when the single-word slate contains the
    correct 1-word candidate but the mixed slate does not. With multiword
    disabled both slates are single-word and nothing can be crowded.
    """
    width = max(16, k)
    single_cfg = LmConfig(k=k, lam=lam, multiword=False, beam_width=width)
    mixed_cfg = LmConfig(k=k, lam=lam, multiword=multiword, beam_width=width)
    from .mdp import make_state, user_react

    states = 0
    crowded = 0
    for target in sentences:
        for cut in range(len(target.text)):
            typed = target.text[:cut]
            states += 1
            s1 = make_state(typed, target, model, single_cfg)
            correct_1w = None
            for cand in s1.candidates:
                ok, _ = user_react(target, typed, cand, literal_prefix)
                if ok:
                    correct_1w = cand
                    break
            if correct_1w is None:
                continue
            s2 = make_state(typed, target, model, mixed_cfg)
            if not any(
                c.full_words == correct_1w.full_words for c in s2.candidates
            ):
                crowded += 1
    saved = {}
    for label, cfg in (("single", single_cfg), ("mixed", mixed_cfg)):
        total = 0
        for target in sentences:
            policy = OraclePolicy(literal_prefix=literal_prefix)
            log = run_episode(policy, target, model, cfg, RewardParams.default(), literal_prefix)
            total += log.chars_saved
        saved[label] = total
    return CrowdingReport(
        states_examined=states,
        crowded_states=crowded,
        oracle_saved_single=saved["single"],
        oracle_saved_mixed=saved["mixed"],
    )


def crowding_fixture() -> tuple[list[str], list[str]]:
    """Training lines and an evaluation sentence where 2-word candidates
    crowd the correct 1-word completion out of the top-5 slate."""
    train = (
        ["i am grateful for everything you did"] * 10
        + ["i am grateful to you"] * 8
        + ["that was great for him"] * 4
        + ["it was great with them"] * 4
    )
    return train, ["great."]


# ---------------------------------------------------------------------------
# Output formats


def rows_to_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(
        [
            "policy",
            "mean_return",
            "ci95_return",
            "mean_chars_saved",
            "ci95_chars_saved",
            "suggestions_made",
            "acceptance_rate",
        ]
    )
    for r in rows:
        w.writerow(
            [
                r.policy,
                f"{r.mean_return:.6f}",
                f"{r.ci95_return:.6f}",
                f"{r.mean_chars_saved:.6f}",
                f"{r.ci95_chars_saved:.6f}",
                r.suggestions_made,
                f"{r.acceptance_rate:.6f}",
            ]
        )
    return buf.getvalue()


def results_bundle(
    rows: Sequence[MetricsRow], model: LanguageModel, config: EvalConfig
) -> str:
    """JSON bundle embedding the config and the LM artifact's content hash."""
    doc = {
        "model_hash": model.content_hash(),
        "config": {
            "runs": config.runs,
            "n_sentences": len(config.sentences),
            "alpha": config.params.alpha,
            "beta_correct": config.params.beta_correct,
            "beta_incorrect": config.params.beta_incorrect,
            "k": config.lm_config.k,
            "lam": config.lm_config.lam,
            "multiword": config.lm_config.multiword,
            "seed_base": config.seed_base,
            "return_discounting": "undiscounted",
        },
        "rows": [
            {
                "policy": r.policy,
                "mean_return": r.mean_return,
                "ci95_return": r.ci95_return,
                "mean_chars_saved": r.mean_chars_saved,
                "ci95_chars_saved": r.ci95_chars_saved,
                "suggestions_made": r.suggestions_made,
                "acceptance_rate": r.acceptance_rate,
            }
            for r in rows
        ],
    }
    return json.dumps(doc, indent=2)
