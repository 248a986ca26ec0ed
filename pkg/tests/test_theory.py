import random
from dataclasses import replace

import numpy as np
import pytest

from ghosttype.errors import ConfigError, ContractViolation
from ghosttype.theory import (
    SHOW,
    WAIT,
    ConstraintInterval,
    DisagreementReport,
    TrieMdp,
    TwoWordInstance,
    alpha_sweep,
    brute_force_two_word,
    count_disagreements,
    default_alpha_grid,
    disagreement_interval,
    farsighted_validity,
    policy_value,
    q_farsighted_at_m,
    q_myopic_at_m,
    simulate_return,
    solve_dp,
)

BETA = 60 / 521


class TestClosedForms:
    def test_myopic_example(self):
        q = q_myopic_at_m(TwoWordInstance(4, 2, 0.4, BETA))
        assert q.q_show == pytest.approx(0.084837, abs=1e-6)
        assert q.q_wait == 0.0
        assert q.action == SHOW

    def test_myopic_collapses_at_half(self):
        q = q_myopic_at_m(TwoWordInstance(9, 3, 0.5, 0.2))
        assert q.q_show == pytest.approx(-0.2)
        assert q.action == WAIT

    def test_myopic_at_default_params(self):
        q = q_myopic_at_m(TwoWordInstance(4, 2, 40 / 521, BETA))
        assert q.q_show == pytest.approx(0.731286, abs=1e-5)

    def test_farsighted_example(self):
        q = q_farsighted_at_m(TwoWordInstance(4, 2, 0.4, BETA))
        assert q.q_wait == pytest.approx(0.484837, abs=1e-6)
        assert q.q_show == pytest.approx(0.327255, abs=1e-6)
        assert q.action == WAIT
        assert q.in_validity_regime
        # the wait condition in closed form: (n-m+1) alpha + beta > 1
        assert 3 * 0.4 + BETA == pytest.approx(1.315163, abs=1e-6)

    def test_farsighted_shows_at_default_params(self):
        inst = TwoWordInstance(4, 2, 40 / 521, BETA)
        assert 3 * inst.alpha + inst.beta == pytest.approx(0.345489, abs=1e-6)
        assert q_farsighted_at_m(inst).action == SHOW

    def test_validity_flag(self):
        assert not q_farsighted_at_m(TwoWordInstance(3, 2, 0.9, 0.5)).in_validity_regime

    def test_instance_validation(self):
        with pytest.raises(ConfigError):
            TwoWordInstance(3, 3, 0.1, 0.1)
        with pytest.raises(ConfigError):
            TwoWordInstance(3, 0, 0.1, 0.1)


class TestDisagreementInterval:
    def test_example(self):
        iv = disagreement_interval(4, 2, BETA)
        assert iv.alpha_lo == pytest.approx(0.294946, abs=1e-6)
        assert iv.alpha_hi == pytest.approx(0.442419, abs=1e-6)
        assert iv.contains(0.4)

    def test_adjacent_words_empty(self):
        iv = disagreement_interval(5, 4, 0.5)
        assert iv.alpha_lo == pytest.approx(0.25)
        assert iv.alpha_hi == pytest.approx(0.0)
        assert not iv.nonempty

    def test_default_alpha_below_interval(self):
        for d in range(1, 10):
            iv = disagreement_interval(d + 2, 2, BETA)
            assert 40 / 521 < iv.alpha_lo


class TestBruteForce:
    def test_matches_farsighted_closed_form(self):
        inst = TwoWordInstance(4, 2, 0.4, BETA)
        table = brute_force_two_word(inst, 1.0)
        far = q_farsighted_at_m(inst)
        assert table.q(2, SHOW) == pytest.approx(far.q_show, abs=1e-12)
        assert table.q(2, WAIT) == pytest.approx(far.q_wait, abs=1e-12)

    def test_gamma_zero_reduces_to_myopic(self):
        inst = TwoWordInstance(4, 2, 0.4, BETA)
        table = brute_force_two_word(inst, 0.0)
        myo = q_myopic_at_m(inst)
        assert table.q(2, SHOW) == pytest.approx(myo.q_show, abs=1e-12)
        assert table.q(2, WAIT) == 0.0

    def test_free_suggestions_dominate(self):
        # alpha = beta = 0: showing can never lose
        for n, m in [(4, 2), (8, 3), (6, 5)]:
            table = brute_force_two_word(TwoWordInstance(n, m, 0.0, 0.0), 1.0)
            assert table.q(m, SHOW) >= table.q(m, WAIT)

    def test_closed_forms_in_validity_regime_random(self):
        rng = random.Random(1)
        checked = 0
        while checked < 300:
            n = rng.randint(2, 12)
            m = rng.randint(1, n - 1)
            alpha = rng.random()
            beta = rng.random()
            inst = TwoWordInstance(n, m, alpha, beta)
            if not farsighted_validity(inst):
                continue
            far = q_farsighted_at_m(inst)
            myo = q_myopic_at_m(inst)
            t1 = brute_force_two_word(inst, 1.0)
            t0 = brute_force_two_word(inst, 0.0)
            assert abs(t1.q(m, SHOW) - far.q_show) < 1e-12
            assert abs(t1.q(m, WAIT) - far.q_wait) < 1e-12
            assert abs(t0.q(m, SHOW) - myo.q_show) < 1e-12
            assert abs(t0.q(m, WAIT) - myo.q_wait) < 1e-12
            checked += 1

    def test_constraint_soundness_sample(self):
        rng = random.Random(2)
        checked = 0
        while checked < 200:
            n = rng.randint(3, 12)
            m = rng.randint(1, n - 2)
            beta = rng.random()
            iv = disagreement_interval(n, m, beta)
            if not iv.nonempty:
                continue
            inst_args = dict(n=n, m=m, beta=beta)
            inside = 0.5 * (iv.alpha_lo + iv.alpha_hi)
            inst = TwoWordInstance(alpha=inside, **inst_args)
            assert brute_force_two_word(inst, 1.0).action_at(m) == WAIT
            assert brute_force_two_word(inst, 0.0).action_at(m) == SHOW
            # strictly outside on either side at least one condition flips
            below = max(1e-9, iv.alpha_lo * 0.5)
            above = min(1.0, iv.alpha_hi + 0.5 * (1 - iv.alpha_hi))
            for alpha in (below, above):
                t1 = brute_force_two_word(TwoWordInstance(alpha=alpha, **inst_args), 1.0)
                t0 = brute_force_two_word(TwoWordInstance(alpha=alpha, **inst_args), 0.0)
                assert t1.action_at(m) == SHOW or t0.action_at(m) == WAIT
            checked += 1


class TestTrieMdp:
    def test_two_target_reduction(self):
        inst = TwoWordInstance(4, 2, 0.4, BETA)
        for gamma in (0.0, 0.35, 1.0):
            mdp = TrieMdp.from_frequencies(
                ["this", "they"], [1, 1], alpha=0.4, beta=BETA, gamma=gamma
            )
            table = solve_dp(mdp)
            bf = brute_force_two_word(inst, gamma)
            for t in range(1, 4):
                e = table.entries["this"[:t]]
                assert e.q_show == pytest.approx(bf.q(t, SHOW), abs=1e-12)
                assert e.q_wait == pytest.approx(bf.q(t, WAIT), abs=1e-12)

    def test_single_target_shows_immediately_when_worthwhile(self):
        mdp = TrieMdp.from_frequencies(["call"], [1], alpha=40 / 521, beta=BETA)
        table = solve_dp(mdp)
        assert table.entries[""].action == SHOW
        assert table.root_value == pytest.approx(4 * (1 - 40 / 521) - BETA)
        # with (1 - alpha) * len < beta everywhere, showing never pays
        costly = TrieMdp.from_frequencies(["ab"], [1], alpha=0.6, beta=0.9)
        assert all(e.action == WAIT for e in solve_dp(costly).entries.values())

    def test_posterior_excludes_completed_targets(self):
        mdp = TrieMdp.from_frequencies(["the", "they"], [3, 1], alpha=0.1, beta=0.1)
        post = dict(mdp.posterior("the"))
        assert list(post) == [1]  # only "they" can continue past "the"
        assert post[1] == pytest.approx(1.0)

    def test_empty_targets_rejected(self):
        with pytest.raises(ConfigError):
            TrieMdp(words=(), priors=(), alpha=0.1, beta_correct=0.1, beta_incorrect=0.1)
        with pytest.raises(ConfigError):
            TrieMdp.from_frequencies(["a", "a"], [1, 1], alpha=0.1, beta=0.1)

    def test_count_disagreements_identical_is_zero(self):
        mdp = TrieMdp.from_frequencies(["this", "they"], [1, 1], alpha=0.4, beta=BETA)
        table = solve_dp(mdp)
        rep = count_disagreements(table, table)
        assert rep.disagreements == 0 and rep.fraction == 0.0

    def test_two_word_disagreement_states(self):
        # at (n=4, m=2, alpha=0.4) the policies differ at the shared-prefix
        # states t=1 and t=m=2: the myopic EV is positive at both, while the
        # farsighted solver waits for the words to diverge.
        mdp = TrieMdp.from_frequencies(["this", "they"], [1, 1], alpha=0.4, beta=BETA)
        far = solve_dp(mdp)
        myo = solve_dp(replace(mdp, gamma=0.0))
        rep = count_disagreements(far, myo)
        assert far.entries["th"].action == WAIT
        assert myo.entries["th"].action == SHOW
        assert rep.total_states == 5  # '', t, th, thi, the
        assert rep.disagreements == 2

    def test_mismatched_state_sets_rejected(self):
        a = solve_dp(TrieMdp.from_frequencies(["ab"], [1], alpha=0.1, beta=0.1))
        b = solve_dp(TrieMdp.from_frequencies(["cd"], [1], alpha=0.1, beta=0.1))
        with pytest.raises(ContractViolation):
            count_disagreements(a, b)

    def test_high_alpha_no_disagreements(self, desk_model):
        top = desk_model.vocab.most_common(500)
        words = [w for w, _ in top]
        weights = [c for _, c in top]
        [(alpha, rep)] = alpha_sweep(words, weights, [0.95], BETA)
        assert rep.fraction < 0.005

    def test_literal_prefix_accepts_nested_words(self):
        mdp = TrieMdp.from_frequencies(
            ["great", "greatly"], [1, 1], alpha=0.0, beta=0.01,
            gamma=1.0, literal_prefix=True,
        )
        table = solve_dp(mdp)
        # accepting "great" while typing "greatly" keeps the episode alive,
        # so showing at the shared prefix is nearly free
        assert table.entries["g"].action == SHOW

    def test_policy_value_matches_optimal_when_executing_optimal(self):
        mdp = TrieMdp.from_frequencies(
            ["call", "sorry", "later"], [3, 2, 1], alpha=0.2, beta=BETA
        )
        table = solve_dp(mdp)
        policy = {s: e.action for s, e in table.entries.items()}
        assert policy_value(mdp, policy) == pytest.approx(table.root_value, abs=1e-12)

    def test_myopic_policy_never_beats_farsighted_value(self):
        rng = random.Random(5)
        vocab = [
            "call", "calm", "cake", "sorry", "store", "stone", "storm",
            "later", "light", "great", "green", "thanks", "theme", "track",
        ]
        strict = 0
        for _ in range(40):
            k = rng.randint(2, 8)
            words = rng.sample(vocab, k)
            weights = [rng.randint(1, 9) for _ in words]
            mdp = TrieMdp.from_frequencies(
                words, weights, alpha=rng.choice([0.4, 0.3, 0.25]), beta=BETA
            )
            far = solve_dp(mdp)
            myo = solve_dp(replace(mdp, gamma=0.0))
            myo_policy = {s: e.action for s, e in myo.entries.items()}
            v = policy_value(mdp, myo_policy)
            assert v <= far.root_value + 1e-12
            if v < far.root_value - 1e-9:
                strict += 1
        assert strict > 0

    def test_dp_value_matches_monte_carlo(self):
        mdp = TrieMdp.from_frequencies(
            ["call", "calm", "sorry", "store", "stone", "later"],
            [5, 2, 4, 3, 2, 1],
            alpha=0.3,
            beta=BETA,
        )
        table = solve_dp(mdp)
        policy = {s: e.action for s, e in table.entries.items()}
        rng = random.Random(11)
        returns = [simulate_return(mdp, policy, rng) for _ in range(10_000)]
        mean = float(np.mean(returns))
        se = float(np.std(returns, ddof=1) / np.sqrt(len(returns)))
        assert abs(mean - table.root_value) <= 3 * se


def test_default_alpha_grid():
    grid = default_alpha_grid()
    assert grid[0] == 0.05 and grid[-1] == 0.95 and len(grid) == 19


def test_constraint_interval_dataclass():
    iv = ConstraintInterval(0.2, 0.4)
    assert iv.nonempty and iv.contains(0.3) and not iv.contains(0.2)
    report = DisagreementReport(total_states=10, disagreements=2)
    assert report.fraction == pytest.approx(0.2)
