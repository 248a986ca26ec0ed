"""Live typing-study backend: session management, suggestion serving,
keystroke logging, paired cognitive-load estimation, and fatigue analysis.

Client (monotonic) timestamps are authoritative for inter-key intervals;
serving timestamps are audit-only. Load is measured by pairing events where
the same key was entered at the same context with and without a suggestion
on screen, averaging within condition before differencing.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import build_policy, parse_policy_spec
from .corpus import FilterConfig, SentenceRecord, filter_corpus
from .errors import ConfigError, EstimationError, OrderingError, SessionError
from .lm import LanguageModel, LmConfig
from .mdp import TimingConstants, make_state, user_react

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz'")
ACCEPT_KEY = "tab"
BACKSPACE_KEY = "backspace"
DISMISS_KEY = "escape"


@dataclass(frozen=True)
class SuggestionView:
    insertion: str
    words: tuple[str, ...]
    raw_prob: float
    correct: bool

    def to_json(self) -> dict:
        return {
            "insertion": self.insertion,
            "words": list(self.words),
            "raw_prob": self.raw_prob,
            "correct": self.correct,
        }

    @classmethod
    def from_json(cls, doc: Optional[dict]) -> Optional["SuggestionView"]:
        if doc is None:
            return None
        return cls(
            insertion=doc["insertion"],
            words=tuple(doc["words"]),
            raw_prob=float(doc["raw_prob"]),
            correct=bool(doc["correct"]),
        )


@dataclass(frozen=True)
class KeyEvent:
    seq: int
    timestamp_ms: float
    key: str  # a single character, "tab", "backspace", or "escape"
    context: str  # typed text at the moment the key was pressed
    suggestion: Optional[SuggestionView]
    accepted: bool

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp_ms": self.timestamp_ms,
            "key": self.key,
            "context": self.context,
            "suggestion": self.suggestion.to_json() if self.suggestion else None,
            "accepted": self.accepted,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "KeyEvent":
        return cls(
            seq=int(doc["seq"]),
            timestamp_ms=float(doc["timestamp_ms"]),
            key=doc["key"],
            context=doc["context"],
            suggestion=SuggestionView.from_json(doc.get("suggestion")),
            accepted=bool(doc["accepted"]),
        )


@dataclass(frozen=True)
class Block:
    condition: str  # "with" | "without"
    prompt_indices: tuple[int, ...]


@dataclass
class Session:
    id: str
    participant: str
    prompts: tuple[str, ...]
    blocks: tuple[Block, ...]
    policy: str
    seed: int
    status: str = "active"
    block_idx: int = 0
    prompt_pos: int = 0

    @property
    def done(self) -> bool:
        return self.block_idx >= len(self.blocks)

    def current(self) -> tuple[str, int, str]:
        """(condition, prompt index, prompt text) for the active slot."""
        if self.done:
            raise SessionError(f"session {self.id} is complete")
        block = self.blocks[self.block_idx]
        pi = block.prompt_indices[self.prompt_pos]
        return block.condition, pi, self.prompts[pi]

    def to_json(self) -> dict:
        total = sum(len(b.prompt_indices) for b in self.blocks)
        completed = sum(
            len(b.prompt_indices) for b in self.blocks[: self.block_idx]
        ) + self.prompt_pos
        return {
            "id": self.id,
            "participant": self.participant,
            "prompts": list(self.prompts),
            "blocks": [
                {"condition": b.condition, "prompt_indices": list(b.prompt_indices)}
                for b in self.blocks
            ],
            "policy": self.policy,
            "seed": self.seed,
            "status": self.status,
            "block_idx": self.block_idx,
            "prompt_pos": self.prompt_pos,
            "progress": {"completed": completed, "total": total},
        }


def create_session(
    participant: str,
    prompts: Sequence[str],
    policy: str = "threshold:0",
    seed: int = 0,
) -> Session:
    """Counterbalanced session: every prompt appears once per condition;
    block order and per-block prompt order are seeded."""
    records = filter_corpus(prompts, FilterConfig())
    if len(records) != len(prompts) or not records:
        raise ConfigError("prompts must be nonempty and pass the corpus filters")
    parse_policy_spec(policy)  # validate early
    rng = random.Random(seed)
    conditions = ["with", "without"]
    if rng.random() < 0.5:
        conditions.reverse()
    blocks = []
    for cond in conditions:
        order = list(range(len(records)))
        rng.shuffle(order)
        blocks.append(Block(condition=cond, prompt_indices=tuple(order)))
    return Session(
        id=uuid.uuid4().hex[:12],
        participant=participant,
        prompts=tuple(r.text for r in records),
        blocks=tuple(blocks),
        policy=policy,
        seed=seed,
    )


def replay_events(events: Sequence[KeyEvent]) -> str:
    """Reconstruct typed text from one prompt's event stream."""
    typed = ""
    for ev in events:
        if ev.key == BACKSPACE_KEY:
            typed = typed[:-1]
        elif ev.key == ACCEPT_KEY:
            if ev.accepted and ev.suggestion is not None:
                typed += ev.suggestion.insertion
        elif ev.key == DISMISS_KEY:
            pass
        else:
            typed += ev.key
    return typed


@dataclass
class PromptRun:
    condition: str
    prompt_index: int
    prompt: str
    events: list[KeyEvent] = field(default_factory=list)


@dataclass
class SessionLog:
    session: Session
    runs: list[PromptRun] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Stateful server (shared by the HTTP service, the CLI, and simulations)


class StudyServer:
    def __init__(
        self,
        model: LanguageModel,
        lm_config: LmConfig = LmConfig(),
        default_policy: str = "threshold:0",
        default_prompts: Optional[Sequence[str]] = None,
        log_dir: Optional[str] = None,
    ):
        self.model = model
        self.lm_config = lm_config
        self.default_policy = default_policy
        self.default_prompts = list(default_prompts or [])
        self.log_dir = log_dir
        self._lock = threading.Lock()
        self._runtime: dict[str, dict] = {}
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    # -- session lifecycle -------------------------------------------------

    def create_session(
        self,
        participant: str,
        prompts: Optional[Sequence[str]] = None,
        policy: Optional[str] = None,
        seed: int = 0,
    ) -> Session:
        prompts = list(prompts) if prompts else self.default_prompts
        session = create_session(
            participant, prompts, policy or self.default_policy, seed
        )
        cond, pi, text = session.current()
        with self._lock:
            self._runtime[session.id] = {
                "session": session,
                "log": SessionLog(
                    session=session,
                    runs=[PromptRun(condition=cond, prompt_index=pi, prompt=text)],
                ),
                "last_seq": -1,
                "last_ts": -math.inf,
                "typed": "",
                "policy": build_policy(parse_policy_spec(session.policy)),
                "target": SentenceRecord.from_text(text),
            }
        self._persist(session.id, {"type": "session", "session": session.to_json()})
        return session

    def _rt(self, session_id: str) -> dict:
        rt = self._runtime.get(session_id)
        if rt is None:
            raise SessionError(f"unknown session {session_id!r}")
        return rt

    def get_session(self, session_id: str) -> Session:
        return self._rt(session_id)["session"]

    def current_prompt(self, session_id: str) -> dict:
        rt = self._rt(session_id)
        session: Session = rt["session"]
        if session.done:
            return {"done": True}
        cond, pi, text = session.current()
        return {
            "done": False,
            "block_index": session.block_idx,
            "condition": cond,
            "prompt_index": pi,
            "prompt": text,
            "typed": rt["typed"],  # lets a reconnecting client resume mid-prompt
        }

    def session_view(self, session_id: str) -> dict:
        rt = self._rt(session_id)
        doc = rt["session"].to_json()
        doc["last_seq"] = rt["last_seq"]
        return doc

    # -- live suggestion serving -------------------------------------------

    def suggest(self, session_id: str, context: str) -> Optional[SuggestionView]:
        rt = self._rt(session_id)
        session: Session = rt["session"]
        if session.done:
            raise SessionError(f"session {session_id} is complete")
        cond, _, text = session.current()
        if cond != "with":
            return None
        target: SentenceRecord = rt["target"]
        if not text.startswith(context) or context == text:
            return None
        state = make_state(context, target, self.model, self.lm_config)
        action = rt["policy"].act(state)
        if action.is_wait:
            return None
        cand = state.candidates[action.suggest_index]
        correct, _ = user_react(target, context, cand)
        view = SuggestionView(
            insertion=cand.completion,
            words=cand.full_words,
            raw_prob=cand.raw_prob,
            correct=correct,
        )
        self._persist(
            session_id,
            {
                "type": "served",
                "served_at_ms": time.time() * 1000.0,
                "context": context,
                "suggestion": view.to_json(),
            },
        )
        return view

    # -- event ingestion ----------------------------------------------------

    def record_events(self, session_id: str, events: Sequence[KeyEvent]) -> dict:
        """Append a batch; idempotent on client sequence numbers."""
        with self._lock:
            rt = self._rt(session_id)
            session: Session = rt["session"]
            if session.done:
                raise SessionError(f"session {session_id} is complete")
            applied = 0
            for ev in sorted(events, key=lambda e: e.seq):
                if ev.seq <= rt["last_seq"]:
                    continue  # duplicate from a retry
                if ev.seq != rt["last_seq"] + 1:
                    raise OrderingError(
                        f"sequence gap: expected {rt['last_seq'] + 1}, got {ev.seq}"
                    )
                if ev.timestamp_ms < rt["last_ts"]:
                    raise OrderingError(
                        f"timestamp went backwards at seq {ev.seq}"
                    )
                if ev.accepted and ev.suggestion is None:
                    raise ValueError("accepted event without a suggestion shown")
                if ev.key == ACCEPT_KEY and ev.accepted is False and ev.suggestion is None:
                    raise ValueError("accept key with no suggestion shown")
                if ev.context != rt["typed"]:
                    raise OrderingError(
                        f"context mismatch at seq {ev.seq}: "
                        f"client {ev.context!r} vs server {rt['typed']!r}"
                    )
                rt["typed"] = _apply_key(rt["typed"], ev)
                rt["last_seq"] = ev.seq
                rt["last_ts"] = ev.timestamp_ms
                rt["log"].runs[-1].events.append(ev)
                applied += 1
                self._persist(session_id, {"type": "event", "event": ev.to_json()})
            return {"applied": applied, "last_seq": rt["last_seq"]}

    def advance(self, session_id: str, typed: str) -> dict:
        """Finish the current prompt: verify the replayed text matches both
        the client's buffer and the prompt, then move the cursor."""
        with self._lock:
            rt = self._rt(session_id)
            session: Session = rt["session"]
            if session.done:
                raise SessionError(f"session {session_id} is complete")
            _, _, text = session.current()
            reconstructed = replay_events(rt["log"].runs[-1].events)
            ok = reconstructed == typed == text
            result = {
                "ok": ok,
                "reconstructed": reconstructed,
                "expected": text,
            }
            if not ok:
                return result
            self._persist(
                session_id,
                {
                    "type": "advance",
                    "block_idx": session.block_idx,
                    "prompt_pos": session.prompt_pos,
                    "prompt": text,
                },
            )
            session.prompt_pos += 1
            block = session.blocks[session.block_idx]
            if session.prompt_pos >= len(block.prompt_indices):
                session.block_idx += 1
                session.prompt_pos = 0
            if session.done:
                session.status = "complete"
                result["done"] = True
            else:
                cond, pi, text = session.current()
                rt["log"].runs.append(
                    PromptRun(condition=cond, prompt_index=pi, prompt=text)
                )
                rt["target"] = SentenceRecord.from_text(text)
                rt["typed"] = ""
                result["done"] = False
                result["next"] = self.current_prompt(session_id)
            return result

    def session_log(self, session_id: str) -> SessionLog:
        return self._rt(session_id)["log"]

    def all_logs(self) -> list[SessionLog]:
        return [rt["log"] for rt in self._runtime.values()]

    # -- persistence ---------------------------------------------------------

    def _persist(self, session_id: str, doc: dict) -> None:
        if not self.log_dir:
            return
        path = os.path.join(self.log_dir, f"{session_id}.jsonl")
        with open(path, "a", encoding="utf-8") as f:
            f.write(json.dumps(doc) + "\n")


def _apply_key(typed: str, ev: KeyEvent) -> str:
    if ev.key == BACKSPACE_KEY:
        return typed[:-1]
    if ev.key == ACCEPT_KEY:
        return typed + (ev.suggestion.insertion if ev.accepted and ev.suggestion else "")
    if ev.key == DISMISS_KEY:
        return typed
    return typed + ev.key


def load_session_logs(log_dir: str) -> list[SessionLog]:
    """Rebuild SessionLogs from the append-only JSONL files."""
    logs = []
    for name in sorted(os.listdir(log_dir)):
        if not name.endswith(".jsonl"):
            continue
        session = None
        runs: list[PromptRun] = []
        with open(os.path.join(log_dir, name), encoding="utf-8") as f:
            for line in f:
                doc = json.loads(line)
                if doc["type"] == "session":
                    s = doc["session"]
                    session = Session(
                        id=s["id"],
                        participant=s["participant"],
                        prompts=tuple(s["prompts"]),
                        blocks=tuple(
                            Block(b["condition"], tuple(b["prompt_indices"]))
                            for b in s["blocks"]
                        ),
                        policy=s["policy"],
                        seed=s["seed"],
                        status=s["status"],
                    )
                    cond, pi, text = session.current()
                    runs = [PromptRun(condition=cond, prompt_index=pi, prompt=text)]
                elif doc["type"] == "event":
                    runs[-1].events.append(KeyEvent.from_json(doc["event"]))
                elif doc["type"] == "advance":
                    session.prompt_pos += 1
                    block = session.blocks[session.block_idx]
                    if session.prompt_pos >= len(block.prompt_indices):
                        session.block_idx += 1
                        session.prompt_pos = 0
                    if not session.done:
                        cond, pi, text = session.current()
                        runs.append(
                            PromptRun(condition=cond, prompt_index=pi, prompt=text)
                        )
        if session is not None:
            logs.append(SessionLog(session=session, runs=runs))
    return logs


# ---------------------------------------------------------------------------
# Paired-sample extraction and load estimation


@dataclass(frozen=True)
class PairedSample:
    context_hash: str
    key: str
    dt_with_ms: float
    dt_without_ms: float
    suggestion_len: int
    suggestion_correct: bool

    @property
    def load_ms(self) -> float:
        return self.dt_with_ms - self.dt_without_ms


def _context_hash(context: str) -> str:
    return hashlib.sha1(context.encode()).hexdigest()[:12]


def _interval_stream(run: PromptRun):
    """(event, dt) pairs with backspace-tainted stretches marked.

    Events after a backspace are excluded until the word ends (a separator
    character is typed); the separator itself is still excluded.
    """
    prev_ts = None
    tainted = False
    for ev in run.events:
        dt = None if prev_ts is None else ev.timestamp_ms - prev_ts
        prev_ts = ev.timestamp_ms
        if ev.key == BACKSPACE_KEY:
            tainted = True
            continue
        is_char = len(ev.key) == 1
        ends_word = is_char and ev.key not in _WORD_CHARS
        if tainted:
            if ends_word:
                tainted = False
            continue
        if dt is not None and dt > 0:
            yield ev, dt


def paired_samples(logs: Sequence[SessionLog]) -> list[PairedSample]:
    """Match (context, key) across conditions within each session; average
    repeats within a condition before differencing."""
    samples: list[PairedSample] = []
    for slog in logs:
        with_map: dict[tuple, list[float]] = {}
        wo_map: dict[tuple, list[float]] = {}
        for run in slog.runs:
            for ev, dt in _interval_stream(run):
                if len(ev.key) != 1:
                    continue  # accept/dismiss keys are not pairable
                if run.condition == "with":
                    if ev.suggestion is not None:
                        key = (
                            ev.context,
                            ev.key,
                            len(ev.suggestion.insertion),
                            ev.suggestion.correct,
                        )
                        with_map.setdefault(key, []).append(dt)
                else:
                    wo_map.setdefault((ev.context, ev.key), []).append(dt)
        for (ctx, key, slen, correct), dts in sorted(with_map.items()):
            wo = wo_map.get((ctx, key))
            if not wo:
                continue
            samples.append(
                PairedSample(
                    context_hash=_context_hash(ctx),
                    key=key,
                    dt_with_ms=float(np.mean(dts)),
                    dt_without_ms=float(np.mean(wo)),
                    suggestion_len=slen,
                    suggestion_correct=correct,
                )
            )
    return samples


@dataclass(frozen=True)
class LoadEstimate:
    alpha_hat: float
    alpha_ci95: float
    beta_hat_correct: Optional[float]
    beta_correct_ci95: Optional[float]
    beta_hat_incorrect: Optional[float]
    beta_incorrect_ci95: Optional[float]
    slope_ms_per_char: float
    intercept_correct_ms: Optional[float]
    intercept_incorrect_ms: Optional[float]
    mean_load_ms: float
    mean_load_ci95: float
    mean_load_correct_ms: Optional[float]
    mean_load_incorrect_ms: Optional[float]
    n_samples: int
    n_correct: int
    n_incorrect: int
    char_write_ms: float

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def estimate_load(
    samples: Sequence[PairedSample],
    timing: TimingConstants = TimingConstants(),
) -> LoadEstimate:
    """Common-slope least squares of load on suggestion length with separate
    intercepts per correctness class; parameters are reported divided by the
    per-character writing time so they land on the reward-function scale.
    """
    n = len(samples)
    lengths = np.array([s.suggestion_len for s in samples], dtype=float)
    if n < 3 or len(set(lengths.tolist())) < 2:
        raise EstimationError(
            "need >= 3 samples over >= 2 distinct suggestion lengths",
            n_samples=n,
            n_lengths=len(set(lengths.tolist())),
        )
    loads = np.array([s.load_ms for s in samples], dtype=float)
    correct = np.array([s.suggestion_correct for s in samples], dtype=bool)
    cols = [lengths]
    names = ["slope"]
    if correct.any():
        cols.append(correct.astype(float))
        names.append("b_correct")
    if (~correct).any():
        cols.append((~correct).astype(float))
        names.append("b_incorrect")
    X = np.column_stack(cols)
    coef, _, _, _ = np.linalg.lstsq(X, loads, rcond=None)
    resid = loads - X @ coef
    dof = max(1, n - X.shape[1])
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.diag(cov))
    by_name = {nm: (float(c), float(s)) for nm, c, s in zip(names, coef, se)}
    w = timing.char_write_ms
    slope, slope_se = by_name["slope"]
    bc = by_name.get("b_correct")
    bw = by_name.get("b_incorrect")
    mean_load = float(loads.mean())
    mean_se = float(loads.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return LoadEstimate(
        alpha_hat=slope / w,
        alpha_ci95=1.96 * slope_se / w,
        beta_hat_correct=bc[0] / w if bc else None,
        beta_correct_ci95=1.96 * bc[1] / w if bc else None,
        beta_hat_incorrect=bw[0] / w if bw else None,
        beta_incorrect_ci95=1.96 * bw[1] / w if bw else None,
        slope_ms_per_char=slope,
        intercept_correct_ms=bc[0] if bc else None,
        intercept_incorrect_ms=bw[0] if bw else None,
        mean_load_ms=mean_load,
        mean_load_ci95=1.96 * mean_se,
        mean_load_correct_ms=float(loads[correct].mean()) if correct.any() else None,
        mean_load_incorrect_ms=float(loads[~correct].mean()) if (~correct).any() else None,
        n_samples=n,
        n_correct=int(correct.sum()),
        n_incorrect=int((~correct).sum()),
        char_write_ms=w,
    )


def mean_load_by_length(samples: Sequence[PairedSample]) -> dict[int, float]:
    acc: dict[int, list[float]] = {}
    for s in samples:
        acc.setdefault(s.suggestion_len, []).append(s.load_ms)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


# ---------------------------------------------------------------------------
# Fatigue analysis


@dataclass(frozen=True)
class FatigueBucket:
    bin_start: int
    rate: float
    ci95: float
    n: int


def _exposures(logs: Sequence[SessionLog]) -> list[list[tuple[bool, bool]]]:
    """Per session: chronological (accepted, correct) per shown suggestion."""
    out = []
    for slog in logs:
        row = []
        for run in slog.runs:
            if run.condition != "with":
                continue
            for ev in run.events:
                if ev.suggestion is not None:
                    row.append((ev.accepted, ev.suggestion.correct))
        out.append(row)
    return out


def fatigue_curve(
    logs: Sequence[SessionLog], bin_width: int = 25
) -> dict[str, list[FatigueBucket]]:
    """Acceptance rate vs cumulative exposure count: one curve over all past
    suggestions, one over past incorrect suggestions."""
    if bin_width < 1:
        raise ConfigError("bin_width must be >= 1")
    curves = {}
    for label in ("all", "incorrect"):
        buckets: dict[int, list[bool]] = {}
        for row in _exposures(logs):
            cum = 0
            for accepted, correct in row:
                b = (cum // bin_width) * bin_width
                buckets.setdefault(b, []).append(accepted)
                if label == "all":
                    cum += 1
                elif not correct:
                    cum += 1
        out = []
        for b in sorted(buckets):
            flags = buckets[b]
            p = sum(flags) / len(flags)
            se = math.sqrt(p * (1 - p) / len(flags))
            out.append(FatigueBucket(bin_start=b, rate=p, ci95=1.96 * se, n=len(flags)))
        curves[label] = out
    return curves


def acceptance_rate(logs: Sequence[SessionLog]) -> tuple[float, int]:
    shown = 0
    accepted = 0
    for row in _exposures(logs):
        for a, _ in row:
            shown += 1
            accepted += a
    return (accepted / shown if shown else 0.0), shown


def analysis_document(logs: Sequence[SessionLog]) -> dict:
    """The analysis payload served over HTTP and written by the CLI."""
    samples = paired_samples(logs)
    rate, shown = acceptance_rate(logs)
    doc = {
        "n_sessions": len(logs),
        "n_pairs": len(samples),
        "suggestions_shown": shown,
        "acceptance_rate": rate,
        "mean_load_by_length": {
            str(k): v for k, v in mean_load_by_length(samples).items()
        },
        "mean_load_by_correctness": {},
        "load": None,
        "fatigue": {
            label: [
                {"bin_start": b.bin_start, "rate": b.rate, "ci95": b.ci95, "n": b.n}
                for b in curve
            ]
            for label, curve in fatigue_curve(logs).items()
        },
    }
    if samples:
        loads_c = [s.load_ms for s in samples if s.suggestion_correct]
        loads_w = [s.load_ms for s in samples if not s.suggestion_correct]
        if loads_c:
            doc["mean_load_by_correctness"]["correct"] = float(np.mean(loads_c))
        if loads_w:
            doc["mean_load_by_correctness"]["incorrect"] = float(np.mean(loads_w))
    try:
        doc["load"] = estimate_load(samples).to_json()
    except EstimationError:
        pass
    return doc


# ---------------------------------------------------------------------------
# Planted-load simulation (drives the server through its public surface)


@dataclass(frozen=True)
class PlantedLoad:
    """Ground-truth cognitive load injected into simulated keystroke times."""

    alpha: float = 0.0
    beta_correct: float = 30.0 / 521.0
    beta_incorrect: float = 30.0 / 521.0
    char_write_ms: float = 521.0

    def load_ms(self, suggestion_len: int, correct: bool) -> float:
        beta = self.beta_correct if correct else self.beta_incorrect
        return (self.alpha * suggestion_len + beta) * self.char_write_ms


@dataclass(frozen=True)
class TypistConfig:
    base_ms: float = 180.0
    key_spread_ms: float = 60.0  # deterministic per-key offset magnitude
    noise_ms: float = 12.0
    accept_prob: float = 0.25
    typo_rate: float = 0.0


def _base_dt(key: str, cfg: TypistConfig) -> float:
    return cfg.base_ms + cfg.key_spread_ms * ((ord(key[0]) * 37) % 23) / 23.0


def simulate_session(
    server: StudyServer,
    participant: str,
    planted: PlantedLoad,
    typist: TypistConfig = TypistConfig(),
    prompts: Optional[Sequence[str]] = None,
    seed: int = 0,
    batch_size: int = 16,
) -> str:
    """Type every prompt in both conditions with synthetic timing; returns
    the session id. Suggestion-shown keystrokes carry the planted load."""
    rng = random.Random(seed)
    session = server.create_session(participant, prompts=prompts, seed=seed)
    sid = session.id
    seq = 0
    now = 10_000.0
    batch: list[KeyEvent] = []

    def flush():
        nonlocal batch
        if batch:
            server.record_events(sid, batch)
            batch = []

    while True:
        info = server.current_prompt(sid)
        if info["done"]:
            break
        cond = info["condition"]
        prompt = info["prompt"]
        typed = ""
        while typed != prompt:
            view = server.suggest(sid, typed) if cond == "with" else None
            dt_load = planted.load_ms(len(view.insertion), view.correct) if view else 0.0
            accept = (
                view is not None
                and view.correct
                and rng.random() < typist.accept_prob
            )
            if accept:
                key = ACCEPT_KEY
            else:
                key = prompt[len(typed)]
            noise = rng.gauss(0.0, typist.noise_ms)
            now += _base_dt(key if key != ACCEPT_KEY else " ", typist) + dt_load + noise
            if (
                not accept
                and typist.typo_rate > 0
                and key in _WORD_CHARS
                and rng.random() < typist.typo_rate
            ):
                wrong = "z" if key != "z" else "q"
                for k in (wrong, BACKSPACE_KEY):
                    batch.append(
                        KeyEvent(
                            seq=seq,
                            timestamp_ms=now,
                            key=k,
                            context=typed if k == wrong else typed + wrong,
                            suggestion=view,
                            accepted=False,
                        )
                    )
                    seq += 1
                    now += _base_dt("z", typist) + rng.gauss(0.0, typist.noise_ms)
                view = server.suggest(sid, typed) if cond == "with" else None
            batch.append(
                KeyEvent(
                    seq=seq,
                    timestamp_ms=now,
                    key=key,
                    context=typed,
                    suggestion=view,
                    accepted=accept,
                )
            )
            seq += 1
            typed = typed + view.insertion if accept else typed + key
            if len(batch) >= batch_size:
                flush()
        flush()
        result = server.advance(sid, typed)
        if not result["ok"]:
            raise RuntimeError(f"simulated prompt failed to verify: {result}")
    return sid
