import numpy as np
import pytest

from ghosttype.agents import RandomPolicy, ThresholdPolicy, WaitPolicy
from ghosttype.corpus import filter_corpus
from ghosttype.errors import ConfigError
from ghosttype.evaluate import (
    EvalConfig,
    baseline_providers,
    ci95,
    crowding_fixture,
    crowding_report,
    evaluate,
    gamma_comparison,
    results_bundle,
    rows_to_csv,
    threshold_sweep,
)
from ghosttype.lm import build_lm
from ghosttype.mdp import RewardParams


@pytest.fixture(scope="module")
def eval_config(desk_split):
    _, eval_set = desk_split
    return EvalConfig(sentences=tuple(eval_set[:25]), runs=3, seed_base=0)


def test_wait_always_row_is_zero(desk_model, eval_config):
    [row] = evaluate([("wait", lambda s: WaitPolicy())], desk_model, eval_config)
    assert row.mean_return == 0.0
    assert row.mean_chars_saved == 0.0
    assert row.suggestions_made == 0
    assert row.acceptance_rate == 0.0


def test_oracle_dominates_every_run(desk_model, eval_config):
    rows = evaluate(
        baseline_providers(taus=(0.3,)), desk_model, eval_config
    )
    oracle = next(r for r in rows if r.policy == "oracle")
    for r in rows:
        for run in range(eval_config.runs):
            assert oracle.per_run_return[run] >= r.per_run_return[run] - 1e-12
    assert oracle.mean_return == max(r.mean_return for r in rows)


def test_random_accepts_less_often_than_threshold(desk_model, eval_config):
    rows = evaluate(
        [
            ("random", lambda s: RandomPolicy(seed=s)),
            ("threshold:0.3", lambda s: ThresholdPolicy(0.3)),
        ],
        desk_model,
        eval_config,
    )
    assert rows[0].acceptance_rate <= rows[1].acceptance_rate


def test_metrics_audit_from_logs(desk_model, desk_split):
    _, eval_set = desk_split
    config = EvalConfig(
        sentences=tuple(eval_set[:10]), runs=2, seed_base=1, keep_logs=True
    )
    [row] = evaluate([("threshold:0.3", lambda s: ThresholdPolicy(0.3))], desk_model, config)
    recomputed = np.mean([log.return_undiscounted for log in row.logs])
    assert row.mean_return == pytest.approx(float(recomputed), abs=1e-12)


def test_deterministic_given_seed(desk_model, eval_config):
    r1 = evaluate([("random", lambda s: RandomPolicy(seed=s))], desk_model, eval_config)
    r2 = evaluate([("random", lambda s: RandomPolicy(seed=s))], desk_model, eval_config)
    assert r1[0].per_run_return == r2[0].per_run_return


def test_config_validation(desk_split):
    _, eval_set = desk_split
    with pytest.raises(ConfigError):
        EvalConfig(sentences=tuple(eval_set), runs=1)
    with pytest.raises(ConfigError):
        EvalConfig(sentences=())


def test_ci95_scaling_law():
    rng = np.random.default_rng(0)
    small = rng.normal(5.0, 2.0, size=2000)
    big = rng.normal(5.0, 2.0, size=8000)
    ratio = ci95(big) / ci95(small)
    assert ratio == pytest.approx(0.5, rel=0.05)
    assert ci95([1.0]) == 0.0


class TestThresholdSweep:
    def test_tau_one_acts_like_wait_except_certainty(self, desk_model, desk_split):
        _, eval_set = desk_split
        config = EvalConfig(sentences=tuple(eval_set[:15]), runs=2)
        rows, _ = threshold_sweep([1.0], desk_model, config)
        # suggestions only fire on raw_prob == 1.0 candidates, all accepted
        # under the idealized user only when they match the target
        assert rows[0].suggestions_made >= 0
        if rows[0].suggestions_made:
            logs_row = evaluate(
                [("t1", lambda s: ThresholdPolicy(1.0))],
                desk_model,
                EvalConfig(sentences=tuple(eval_set[:15]), runs=2, keep_logs=True),
            )[0]
            for log in logs_row.logs:
                for s in log.steps:
                    if not s.action.is_wait:
                        assert s.raw_prob == pytest.approx(1.0)

    def test_default_preset_prefers_positive_tau(self, desk_model, desk_split):
        _, eval_set = desk_split
        config = EvalConfig(
            sentences=tuple(eval_set[:30]),
            runs=2,
            params=RewardParams.default(),
        )
        rows, best = threshold_sweep([0.0, 0.1, 0.2, 0.3, 0.5], desk_model, config)
        assert best > 0.0

    def test_study_preset_prefers_always_on(self, desk_model, desk_split):
        _, eval_set = desk_split
        config = EvalConfig(
            sentences=tuple(eval_set[:30]),
            runs=2,
            params=RewardParams.study(),
        )
        rows, best = threshold_sweep([0.0, 0.1, 0.3, 0.6, 0.9], desk_model, config)
        assert best <= 0.1


class TestGammaComparison:
    def test_identical_seeds_identical_rows(self, desk_model):
        sentences = filter_corpus(["call me", "call later", "see you soon"])
        model = build_lm(sentences)
        config = EvalConfig(sentences=tuple(sentences), runs=2, seed_base=4)
        kwargs = dict(
            model=model,
            train_sentences=sentences,
            config=config,
            gammas=(0.0, 0.99),
            train_steps=2000,
        )
        a = gamma_comparison("q_online", **kwargs)
        b = gamma_comparison("q_online", **kwargs)
        assert [r.per_run_return for r in a] == [r.per_run_return for r in b]

    def test_farsighted_training_not_worse_under_disagreement_alpha(self):
        # two words sharing a long prefix; alpha=0.4 sits in the interval
        # where the myopic and farsighted optima differ
        lines = ["thinking"] * 1 + ["thinline"] * 1
        sentences = filter_corpus(lines)
        model = build_lm(sentences)
        params = RewardParams(alpha=0.4, beta_correct=60 / 521, beta_incorrect=60 / 521)
        config = EvalConfig(
            sentences=tuple(sentences), runs=3, params=params, seed_base=2
        )
        rows = gamma_comparison(
            "q_online",
            model=model,
            train_sentences=sentences,
            config=config,
            gammas=(0.0, 0.99),
            train_steps=20_000,
        )
        myopic = next(r for r in rows if r.policy.endswith("gamma=0"))
        farsighted = next(r for r in rows if r.policy.endswith("gamma=0.99"))
        ci = myopic.ci95_return + farsighted.ci95_return
        assert farsighted.mean_return >= myopic.mean_return - ci - 1e-9

    def test_rejects_non_learning_kind(self, desk_model, eval_config):
        with pytest.raises(ConfigError):
            gamma_comparison("oracle", desk_model, [], eval_config)


class TestCrowding:
    def test_crafted_instance(self):
        train_lines, eval_lines = crowding_fixture()
        model = build_lm(filter_corpus(train_lines))
        eval_sentences = filter_corpus(eval_lines)
        report = crowding_report(model, eval_sentences, k=5)
        assert report.crowded_states >= 1
        assert report.oracle_saved_mixed < report.oracle_saved_single

    def test_multiword_disabled_never_crowds(self):
        train_lines, eval_lines = crowding_fixture()
        model = build_lm(filter_corpus(train_lines))
        report = crowding_report(
            model, filter_corpus(eval_lines), k=5, multiword=False
        )
        assert report.crowded_states == 0
        assert report.oracle_saved_mixed == report.oracle_saved_single

    def test_large_k_never_crowds(self):
        train_lines, eval_lines = crowding_fixture()
        model = build_lm(filter_corpus(train_lines))
        eval_sentences = filter_corpus(eval_lines)
        # k beyond the whole candidate pool: nothing can be displaced
        vocab = len(model.vocab.counts)
        report = crowding_report(model, eval_sentences, k=vocab * (vocab + 1))
        assert report.crowded_states == 0
        assert report.oracle_saved_mixed >= report.oracle_saved_single


def test_csv_and_bundle_outputs(desk_model, eval_config):
    rows = evaluate([("wait", lambda s: WaitPolicy())], desk_model, eval_config)
    csv_text = rows_to_csv(rows)
    assert csv_text.splitlines()[0].startswith("policy,mean_return")
    assert "wait" in csv_text
    bundle = results_bundle(rows, desk_model, eval_config)
    assert desk_model.content_hash() in bundle
    assert '"return_discounting": "undiscounted"' in bundle
