import pytest

from ghosttype.errors import (
    ConfigError,
    EstimationError,
    OrderingError,
    SessionError,
)
from ghosttype.lm import LmConfig
from ghosttype.study import (
    KeyEvent,
    PlantedLoad,
    PromptRun,
    SessionLog,
    StudyServer,
    SuggestionView,
    TypistConfig,
    analysis_document,
    create_session,
    estimate_load,
    fatigue_curve,
    load_session_logs,
    mean_load_by_length,
    paired_samples,
    replay_events,
    simulate_session,
)

PROMPTS = [
    "call me later.",
    "see you at noon.",
    "thanks for the coffee.",
    "the meeting starts soon.",
    "bring the keys please.",
]


@pytest.fixture(scope="module")
def server(desk_model):
    return StudyServer(desk_model, LmConfig(), default_prompts=PROMPTS)


def make_event(seq, ts, key, context, suggestion=None, accepted=False):
    return KeyEvent(
        seq=seq,
        timestamp_ms=ts,
        key=key,
        context=context,
        suggestion=suggestion,
        accepted=accepted,
    )


class TestSessions:
    def test_counterbalanced_blocks(self):
        s = create_session("p1", PROMPTS, seed=1)
        assert len(s.blocks) == 2
        assert {b.condition for b in s.blocks} == {"with", "without"}
        for b in s.blocks:
            assert sorted(b.prompt_indices) == list(range(len(PROMPTS)))
        total = sum(len(b.prompt_indices) for b in s.blocks)
        assert total == 2 * len(PROMPTS)

    def test_seed_reproducible_order(self):
        a = create_session("p", PROMPTS, seed=7)
        b = create_session("p", PROMPTS, seed=7)
        assert a.blocks == b.blocks
        assert a.id != b.id  # same label still gets a distinct session

    def test_block_order_varies_with_seed(self):
        firsts = {create_session("p", PROMPTS, seed=s).blocks[0].condition
                  for s in range(12)}
        assert firsts == {"with", "without"}

    def test_empty_prompts_rejected(self):
        with pytest.raises(ConfigError):
            create_session("p", [])
        with pytest.raises(ConfigError):
            create_session("p", ["meet at 3pm"])  # fails corpus filter


class TestServing:
    def test_suggest_in_without_block_is_none(self, server):
        session = server.create_session("p-without", seed=4)
        cond = session.blocks[0].condition
        view = server.suggest(session.id, "")
        if cond == "without":
            assert view is None
        else:
            assert view is not None

    def test_threshold_zero_serves_whenever_lm_has_candidates(self, desk_model):
        srv = StudyServer(desk_model, LmConfig(), default_prompts=PROMPTS)
        session = srv.create_session("p", seed=0)  # seed 0: check both blocks
        info = srv.current_prompt(session.id)
        if info["condition"] == "with":
            view = srv.suggest(session.id, "")
            assert view is not None and view.insertion
            assert view.raw_prob > 0

    def test_unknown_session_rejected(self, server):
        with pytest.raises(SessionError):
            server.suggest("nope", "")
        with pytest.raises(SessionError):
            server.record_events("nope", [])

    def test_correctness_computed_against_prompt(self, desk_model):
        srv = StudyServer(desk_model, LmConfig(), default_prompts=["call me later."])
        session = None
        for seed in range(10):
            s = srv.create_session("p", seed=seed)
            if s.blocks[0].condition == "with":
                session = s
                break
        assert session is not None
        view = srv.suggest(session.id, "call me l")
        assert view is not None
        assert view.correct == (view.insertion == "ater")


class TestEventLog:
    def test_ordering_and_idempotency(self, server):
        session = server.create_session("p-events", seed=2)
        e0 = make_event(0, 100.0, "c", "")
        e1 = make_event(1, 200.0, "a", "c")
        out = server.record_events(session.id, [e0, e1])
        assert out == {"applied": 2, "last_seq": 1}
        # a retry of the same batch applies nothing
        out = server.record_events(session.id, [e0, e1])
        assert out == {"applied": 0, "last_seq": 1}
        # a gap in sequence numbers is an ordering error
        with pytest.raises(OrderingError):
            server.record_events(session.id, [make_event(5, 300.0, "l", "ca")])
        # timestamps must not go backwards
        with pytest.raises(OrderingError):
            server.record_events(session.id, [make_event(2, 50.0, "l", "ca")])

    def test_accept_without_suggestion_rejected(self, server):
        session = server.create_session("p-accept", seed=2)
        with pytest.raises(ValueError):
            server.record_events(
                session.id, [make_event(0, 10.0, "tab", "", None, accepted=True)]
            )
        with pytest.raises(ValueError):
            server.record_events(
                session.id, [make_event(0, 10.0, "tab", "", None, accepted=False)]
            )

    def test_context_must_match_reconstruction(self, server):
        session = server.create_session("p-ctx", seed=2)
        server.record_events(session.id, [make_event(0, 10.0, "c", "")])
        with pytest.raises(OrderingError):
            server.record_events(session.id, [make_event(1, 20.0, "x", "wrong")])

    def test_backspace_applies(self, server):
        session = server.create_session("p-bs", seed=2)
        events = [
            make_event(0, 10.0, "c", ""),
            make_event(1, 20.0, "x", "c"),
            make_event(2, 30.0, "backspace", "cx"),
            make_event(3, 40.0, "a", "c"),
        ]
        server.record_events(session.id, events)
        assert replay_events(events) == "ca"


class TestReplayAndAdvance:
    def test_wrong_text_blocks_advance(self, server):
        session = server.create_session("p-adv", seed=3)
        result = server.advance(session.id, "whatever")
        assert not result["ok"]

    def test_advance_moves_through_blocks(self, desk_model):
        srv = StudyServer(desk_model, LmConfig(), default_prompts=PROMPTS[:2])
        session = srv.create_session("p", seed=5)
        seq = 0
        ts = 0.0
        for _ in range(4):  # 2 prompts x 2 conditions
            info = srv.current_prompt(session.id)
            assert not info["done"]
            prompt = info["prompt"]
            batch = []
            typed = ""
            for ch in prompt:
                ts += 100.0
                batch.append(make_event(seq, ts, ch, typed))
                seq += 1
                typed += ch
            srv.record_events(session.id, batch)
            result = srv.advance(session.id, typed)
            assert result["ok"]
        assert srv.current_prompt(session.id)["done"]
        assert srv.get_session(session.id).status == "complete"


class TestSimulationRoundTrip:
    def test_replay_reconstructs_prompts(self, desk_model, tmp_path):
        srv = StudyServer(
            desk_model, LmConfig(), default_prompts=PROMPTS, log_dir=str(tmp_path)
        )
        sid = simulate_session(
            srv, "sim", PlantedLoad(), TypistConfig(typo_rate=0.02), seed=1
        )
        log = srv.session_log(sid)
        assert len(log.runs) == 2 * len(PROMPTS)
        for run in log.runs:
            assert replay_events(run.events) == run.prompt
        # the persisted JSONL rebuilds the same structure
        [loaded] = load_session_logs(str(tmp_path))
        assert [r.prompt for r in loaded.runs] == [r.prompt for r in log.runs]
        assert [len(r.events) for r in loaded.runs] == [len(r.events) for r in log.runs]


def synthetic_logs(load_with, load_without=0.0, n_contexts=40, slen=3, correct=True):
    """Minimal two-condition logs with controlled inter-key intervals."""
    sugg = SuggestionView(insertion="x" * slen, words=("w",), raw_prob=0.5, correct=correct)
    with_run = PromptRun(condition="with", prompt_index=0, prompt="p")
    wo_run = PromptRun(condition="without", prompt_index=0, prompt="p")
    ts = 0.0
    for i in range(n_contexts):
        ctx = "c" * (i % 10) + str(i)
        base = 150.0 + (i % 7) * 10.0
        with_run.events.append(
            make_event(i, ts + base + load_with, "k", ctx, sugg)
        )
        ts += base + load_with
    ts = 0.0
    for i in range(n_contexts):
        ctx = "c" * (i % 10) + str(i)
        base = 150.0 + (i % 7) * 10.0
        wo_run.events.append(make_event(i, ts + base + load_without, "k", ctx))
        ts += base + load_without
    session = create_session("synthetic", ["placeholder prompt"], seed=0)
    return [SessionLog(session=session, runs=[with_run, wo_run])]


class TestPairing:
    def test_identical_timings_zero_load(self):
        logs = synthetic_logs(load_with=0.0)
        samples = paired_samples(logs)
        assert len(samples) == 39  # first event of each run has no interval
        assert all(s.load_ms == pytest.approx(0.0) for s in samples)

    def test_planted_constant_load(self):
        logs = synthetic_logs(load_with=30.0)
        for s in paired_samples(logs):
            assert s.load_ms == pytest.approx(30.0)
            assert s.suggestion_len == 3

    def test_block_order_symmetry(self):
        logs = synthetic_logs(load_with=25.0)
        flipped = [SessionLog(session=logs[0].session, runs=list(reversed(logs[0].runs)))]
        a = sorted((s.context_hash, s.key, s.load_ms) for s in paired_samples(logs))
        b = sorted((s.context_hash, s.key, s.load_ms) for s in paired_samples(flipped))
        assert a == b

    def test_backspace_excludes_rest_of_word(self):
        sugg = SuggestionView(insertion="xyz", words=("w",), raw_prob=0.5, correct=True)
        with_run = PromptRun(condition="with", prompt_index=0, prompt="p")
        events = [
            ("a", "", 100.0),
            ("b", "a", 100.0),
            ("backspace", "ab", 100.0),
            ("b", "a", 100.0),      # same word: excluded
            (" ", "ab", 100.0),     # separator: excluded, ends the word
            ("c", "ab ", 100.0),    # clean again
        ]
        ts = 0.0
        for i, (key, ctx, dt) in enumerate(events):
            ts += dt
            with_run.events.append(make_event(i, ts, key, ctx, sugg))
        wo_run = PromptRun(condition="without", prompt_index=0, prompt="p")
        ts = 0.0
        for i, (key, ctx, dt) in enumerate(events):
            if key == "backspace":
                continue
            ts += dt
            wo_run.events.append(make_event(i, ts, key, ctx))
        session = create_session("synthetic", ["placeholder prompt"], seed=0)
        samples = paired_samples([SessionLog(session=session, runs=[with_run, wo_run])])
        keys = {(s.key) for s in samples}
        assert "c" in keys
        assert all(s.key in {"b", "c"} for s in samples)
        # the duplicated 'b' after the backspace was dropped
        assert sum(1 for s in samples if s.key == "b") == 1


class TestEstimator:
    def test_flat_load_recovers_alpha_zero(self):
        rows = []
        for slen in (1, 3, 5):
            rows += synthetic_logs(load_with=30.0, slen=slen)
        samples = [s for log in rows for s in paired_samples([log])]
        est = estimate_load(samples)
        assert est.alpha_hat == pytest.approx(0.0, abs=0.005)
        assert est.beta_hat_correct == pytest.approx(30 / 521, rel=0.05)
        assert est.n_samples == len(samples)

    def test_correctness_split_recovered(self):
        rows = []
        for slen in (2, 4):
            rows += synthetic_logs(load_with=10.0, slen=slen, correct=True)
            rows += synthetic_logs(load_with=50.0, slen=slen, correct=False)
        samples = [s for log in rows for s in paired_samples([log])]
        est = estimate_load(samples)
        assert est.beta_hat_correct == pytest.approx(10 / 521, rel=0.05)
        assert est.beta_hat_incorrect == pytest.approx(50 / 521, rel=0.05)
        assert est.n_correct and est.n_incorrect

    def test_requires_two_lengths(self):
        logs = synthetic_logs(load_with=20.0, slen=4)
        with pytest.raises(EstimationError):
            estimate_load(paired_samples(logs))

    def test_mean_load_by_length(self):
        logs = synthetic_logs(load_with=20.0, slen=2) + synthetic_logs(
            load_with=40.0, slen=6
        )
        samples = [s for log in logs for s in paired_samples([log])]
        by_len = mean_load_by_length(samples)
        assert by_len[2] == pytest.approx(20.0)
        assert by_len[6] == pytest.approx(40.0)


def exposure_logs(accept_pattern):
    """One with-run whose suggestion exposures follow accept_pattern."""
    run = PromptRun(condition="with", prompt_index=0, prompt="p")
    ts = 0.0
    for i, accepted in enumerate(accept_pattern):
        ts += 100.0
        sugg = SuggestionView(insertion="ab", words=("w",), raw_prob=0.5, correct=accepted)
        run.events.append(
            make_event(i, ts, "tab" if accepted else "k", "", sugg, accepted)
        )
    session = create_session("synthetic", ["placeholder prompt"], seed=0)
    return [SessionLog(session=session, runs=[run])]


class TestFatigue:
    def test_constant_rate_is_flat(self):
        pattern = [i % 2 == 0 for i in range(400)]
        curves = fatigue_curve(exposure_logs(pattern), bin_width=50)
        for bucket in curves["all"]:
            assert abs(bucket.rate - 0.5) <= bucket.ci95 + 0.05

    def test_no_suggestions_empty_curve(self):
        session = create_session("synthetic", ["placeholder prompt"], seed=0)
        logs = [SessionLog(session=session, runs=[
            PromptRun(condition="with", prompt_index=0, prompt="p")
        ])]
        curves = fatigue_curve(logs)
        assert curves["all"] == [] and curves["incorrect"] == []

    def test_declining_rate_monotone_buckets(self):
        pattern = [i < 100 for i in range(200)]  # accepts stop after 100
        curves = fatigue_curve(exposure_logs(pattern), bin_width=50)
        rates = [b.rate for b in curves["all"]]
        assert rates == sorted(rates, reverse=True)
        assert rates[0] == pytest.approx(1.0)
        assert rates[-1] == pytest.approx(0.0)

    def test_bad_bin_width(self):
        with pytest.raises(ConfigError):
            fatigue_curve([], bin_width=0)


def test_analysis_document_structure(desk_model):
    srv = StudyServer(desk_model, LmConfig(), default_prompts=PROMPTS)
    sid = simulate_session(srv, "doc", PlantedLoad(), TypistConfig(), seed=3)
    doc = analysis_document([srv.session_log(sid)])
    assert doc["n_sessions"] == 1
    assert 0.0 <= doc["acceptance_rate"] <= 1.0
    assert doc["suggestions_shown"] > 0
    assert "all" in doc["fatigue"] and "incorrect" in doc["fatigue"]
    if doc["load"] is not None:
        assert doc["load"]["n_samples"] == doc["n_pairs"]
