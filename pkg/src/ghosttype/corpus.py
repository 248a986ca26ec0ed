"""Corpus ingestion and admissibility filtering.

Raw sentence corpora (one sentence per line) are lowercased, screened
against a restricted character set and a word-count cap, and turned into
SentenceRecords that the language model and the typing simulator consume.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

from .errors import ConfigError

DEFAULT_ALLOWED_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz,.'?! ")

# Word tokens are maximal runs of letters and apostrophes; everything else
# (spaces, punctuation) separates tokens and stays only in the raw text.
WORD_RE = re.compile(r"[a-z']+")

_RIGHT_SINGLE_QUOTE = "’"


@dataclass(frozen=True)
class SentenceRecord:
    """A filtered sentence: normalized text plus its word segmentation."""

    text: str
    words: tuple[str, ...]
    char_count: int

    @classmethod
    def from_text(cls, text: str) -> "SentenceRecord":
        return cls(text=text, words=tuple(tokenize(text)), char_count=len(text))


@dataclass(frozen=True)
class FilterConfig:
    max_words: int = 10
    allowed_chars: frozenset[str] = DEFAULT_ALLOWED_CHARS
    max_oov_rate: float = 1.0  # 1.0 disables the out-of-vocabulary screen

    def validate(self) -> None:
        if self.max_words < 1:
            raise ConfigError(f"max_words must be >= 1, got {self.max_words}")
        if not self.allowed_chars:
            raise ConfigError("allowed_chars must not be empty")
        if " " not in self.allowed_chars:
            raise ConfigError("allowed_chars must include space")
        if not 0.0 <= self.max_oov_rate <= 1.0:
            raise ConfigError(f"max_oov_rate must be in [0,1], got {self.max_oov_rate}")


@dataclass
class FilterSummary:
    input_count: int = 0
    kept_count: int = 0
    drop_reasons: dict = field(
        default_factory=lambda: {"too_long": 0, "bad_char": 0, "oov": 0, "empty": 0}
    )

    def to_json(self) -> str:
        return json.dumps(
            {
                "input_count": self.input_count,
                "kept_count": self.kept_count,
                "drop_reasons": dict(self.drop_reasons),
            }
        )


def tokenize(text: str) -> list[str]:
    """Split normalized text into word tokens (letters + apostrophes)."""
    return WORD_RE.findall(text)


def normalize_line(line: str) -> str:
    """Lowercase and map the typographic right quote to an ASCII apostrophe."""
    return line.strip("\n").lower().replace(_RIGHT_SINGLE_QUOTE, "'")


def filter_corpus_report(
    lines: Iterable[str],
    config: FilterConfig = FilterConfig(),
    vocab: Optional[set[str]] = None,
) -> tuple[list[SentenceRecord], FilterSummary]:
    """Filter raw lines, returning kept records and a drop-reason summary.

    A line is kept iff, after lowercasing, (a) it contains only allowed
    characters, (b) it has between 1 and max_words word tokens, and (c) its
    out-of-vocabulary token rate is <= max_oov_rate when a vocabulary is
    supplied. Order and duplicates are preserved.
    """
    config.validate()
    summary = FilterSummary()
    kept: list[SentenceRecord] = []
    for line in lines:
        summary.input_count += 1
        text = normalize_line(line)
        if not set(text) <= config.allowed_chars:
            summary.drop_reasons["bad_char"] += 1
            continue
        words = tokenize(text)
        if not words:
            summary.drop_reasons["empty"] += 1
            continue
        if len(words) > config.max_words:
            summary.drop_reasons["too_long"] += 1
            continue
        if vocab is not None and config.max_oov_rate < 1.0:
            oov = sum(1 for w in words if w not in vocab)
            if oov / len(words) > config.max_oov_rate:
                summary.drop_reasons["oov"] += 1
                continue
        kept.append(SentenceRecord(text=text, words=tuple(words), char_count=len(text)))
        summary.kept_count += 1
    return kept, summary


def filter_corpus(
    lines: Iterable[str],
    config: FilterConfig = FilterConfig(),
    vocab: Optional[set[str]] = None,
) -> list[SentenceRecord]:
    records, _ = filter_corpus_report(lines, config, vocab)
    return records


def load_corpus_file(path: str, config: FilterConfig = FilterConfig()) -> list[SentenceRecord]:
    with open(path, encoding="utf-8") as f:
        return filter_corpus(f, config)


def load_desk_corpus() -> list[SentenceRecord]:
    """The bundled desk-scale sentence corpus (~660 short messages)."""
    text = resources.files("ghosttype.data").joinpath("desk_corpus.txt").read_text("utf-8")
    records = filter_corpus(text.splitlines())
    if not records:
        raise ConfigError("bundled desk corpus is empty")
    return records


def train_eval_split(
    records: Sequence[SentenceRecord], eval_size: int, seed: int = 0
) -> tuple[list[SentenceRecord], list[SentenceRecord]]:
    """Deterministic shuffle-split into (train, eval) with eval_size sentences."""
    if not 0 < eval_size < len(records):
        raise ConfigError(f"eval_size must be in (0, {len(records)}), got {eval_size}")
    order = list(records)
    random.Random(seed).shuffle(order)
    return order[eval_size:], order[:eval_size]
