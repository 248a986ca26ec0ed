"""Frequency word model over a prefix trie.

Produces the candidate completions (with probabilities) that define the
environment state: interpolated bigram/unigram scores over the vocabulary
words consistent with the current word prefix, optionally extended to
two-word candidates ranked by length-normalized probability.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .corpus import SentenceRecord, WORD_RE
from .errors import ConfigError

MODEL_MAGIC = "ghosttype-lm"
MODEL_VERSION = 1


@dataclass
class Vocabulary:
    counts: dict[str, int]
    total_count: int = 0

    def __post_init__(self):
        if self.total_count == 0:
            self.total_count = sum(self.counts.values())

    def p_unigram(self, word: str) -> float:
        return self.counts.get(word, 0) / self.total_count

    def most_common(self, n: int) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


@dataclass
class BigramTable:
    counts: dict[tuple[str, str], int]
    prev_totals: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.prev_totals:
            for (prev, _), c in self.counts.items():
                self.prev_totals[prev] = self.prev_totals.get(prev, 0) + c

    def p_bigram(self, word: str, prev: str) -> float:
        total = self.prev_totals.get(prev, 0)
        if total == 0:
            return 0.0
        return self.counts.get((prev, word), 0) / total

    def has_context(self, prev: str) -> bool:
        return self.prev_totals.get(prev, 0) > 0


class TrieNode:
    __slots__ = ("children", "mass", "terminal_mass")

    def __init__(self):
        self.children: dict[str, TrieNode] = {}
        self.mass = 0.0
        self.terminal_mass = 0.0


class PrefixTrie:
    """Character trie over vocabulary words carrying unigram probability mass."""

    def __init__(self, word_probs: dict[str, float]):
        self.root = TrieNode()
        for word, p in word_probs.items():
            node = self.root
            node.mass += p
            for ch in word:
                node = node.children.setdefault(ch, TrieNode())
                node.mass += p
            node.terminal_mass += p

    def node_at(self, prefix: str) -> Optional[TrieNode]:
        node = self.root
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def words_with_prefix(self, prefix: str) -> list[str]:
        """Vocabulary words that strictly extend the prefix, lexicographic."""
        start = self.node_at(prefix)
        if start is None:
            return []
        out: list[str] = []

        def walk(node: TrieNode, acc: list[str]):
            if node.terminal_mass > 0 and acc:
                out.append(prefix + "".join(acc))
            for ch in sorted(node.children):
                acc.append(ch)
                walk(node.children[ch], acc)
                acc.pop()

        walk(start, [])
        return out

    def validate(self, tol: float = 1e-12) -> None:
        def check(node: TrieNode):
            child_sum = node.terminal_mass + sum(c.mass for c in node.children.values())
            if abs(node.mass - child_sum) > tol * max(1.0, node.mass):
                raise AssertionError(
                    f"trie mass mismatch: node {node.mass} vs children {child_sum}"
                )
            for c in node.children.values():
                check(c)

        check(self.root)
        if abs(self.root.mass - 1.0) > 1e-12:
            raise AssertionError(f"root mass {self.root.mass} != 1")


@dataclass(frozen=True)
class Candidate:
    """A proposed completion of the word(s) being typed.

    completion: the characters acceptance would insert (never empty).
    full_words: the one or two whole vocabulary words it spells out.
    raw_prob:   length-normalized model probability (plain renormalized LM
                probability for 1-word candidates; geometric mean of the
                chain for 2-word candidates).
    norm_prob:  probability after top-k renormalization of the slate.
    """

    completion: str
    full_words: tuple[str, ...]
    raw_prob: float
    norm_prob: float

    @property
    def word(self) -> str:
        return self.full_words[0]

    def display(self) -> str:
        return " ".join(self.full_words)


@dataclass(frozen=True)
class LmConfig:
    k: int = 1
    lam: float = 0.7  # weight on the bigram term vs unigram
    multiword: bool = False
    beam_width: int = 16

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must be in [0,1], got {self.lam}")
        if self.beam_width < self.k:
            raise ConfigError(f"beam_width ({self.beam_width}) must be >= k ({self.k})")


def renormalize_topk(candidates: Sequence[Candidate]) -> list[Candidate]:
    """Rescale norm_prob so the slate sums to 1; order and raw_prob untouched."""
    if not candidates:
        return []
    total = math.fsum(c.raw_prob for c in candidates)
    return [replace(c, norm_prob=c.raw_prob / total) for c in candidates]


def normalize_length(word_probs: Sequence[float]) -> float:
    """Geometric mean of an m-word suggestion's chain probabilities."""
    if not word_probs:
        raise ConfigError("normalize_length needs at least one probability")
    for p in word_probs:
        if not 0.0 < p <= 1.0:
            raise ConfigError(f"chain probabilities must be in (0,1], got {p}")
    return math.exp(math.fsum(math.log(p) for p in word_probs) / len(word_probs))


class LanguageModel:
    """Immutable after build; all queries are read-only and cached."""

    def __init__(self, vocab: Vocabulary, bigrams: BigramTable):
        self.vocab = vocab
        self.bigrams = bigrams
        probs = {w: c / vocab.total_count for w, c in vocab.counts.items()}
        self.trie = PrefixTrie(probs)
        self._cache: dict[tuple, tuple[Candidate, ...]] = {}

    # -- scoring ---------------------------------------------------------

    def _score(self, word: str, prev: Optional[str], lam: float) -> float:
        pu = self.vocab.p_unigram(word)
        if prev is None or not self.bigrams.has_context(prev):
            return pu
        return lam * self.bigrams.p_bigram(word, prev) + (1.0 - lam) * pu

    def consistent_words(self, prefix: str) -> list[str]:
        return self.trie.words_with_prefix(prefix)

    def word_probs(self, prev_word: Optional[str], prefix: str, lam: float) -> list[tuple[str, float]]:
        """(word, prob) over words strictly extending prefix; probs sum to 1."""
        words = self.consistent_words(prefix)
        if not words:
            return []
        scored = [(w, self._score(w, prev_word, lam)) for w in words]
        scored = [(w, s) for w, s in scored if s > 0.0]
        denom = math.fsum(s for _, s in scored)
        if denom <= 0.0:
            return []
        return [(w, s / denom) for w, s in scored]

    # -- candidate generation ---------------------------------------------

    def raw_candidates(
        self, prev_word: Optional[str], prefix: str, config: LmConfig
    ) -> list[Candidate]:
        """Top-k one-word completions by interpolated probability."""
        config.validate()
        if prefix and not WORD_RE.fullmatch(prefix):
            raise ConfigError(f"prefix must be letters/apostrophes, got {prefix!r}")
        key = ("1w", prev_word, prefix, config.k, config.lam)
        cached = self._cache.get(key)
        if cached is None:
            pairs = self.word_probs(prev_word, prefix, config.lam)
            top = heapq.nsmallest(config.k, pairs, key=lambda wp: (-wp[1], wp[0]))
            cached = tuple(
                Candidate(
                    completion=w[len(prefix):],
                    full_words=(w,),
                    raw_prob=p,
                    norm_prob=p,
                )
                for w, p in top
            )
            self._cache[key] = cached
        return list(cached)

    def beam_multiword(
        self, prev_word: Optional[str], prefix: str, config: LmConfig
    ) -> list[Candidate]:
        """Mixed 1- and 2-word slate ranked by length-normalized probability."""
        config.validate()
        key = ("2w", prev_word, prefix, config.k, config.lam, config.beam_width)
        cached = self._cache.get(key)
        if cached is None:
            pairs = self.word_probs(prev_word, prefix, config.lam)
            pool: list[Candidate] = [
                Candidate(w[len(prefix):], (w,), p, p) for w, p in pairs
            ]
            beam = heapq.nsmallest(config.beam_width, pairs, key=lambda wp: (-wp[1], wp[0]))
            for w1, p1 in beam:
                nexts = self.word_probs(w1, "", config.lam)
                for w2, p2 in heapq.nsmallest(
                    config.k, nexts, key=lambda wp: (-wp[1], wp[0])
                ):
                    value = normalize_length([p1, p2])
                    pool.append(
                        Candidate(
                            completion=w1[len(prefix):] + " " + w2,
                            full_words=(w1, w2),
                            raw_prob=value,
                            norm_prob=value,
                        )
                    )
            top = heapq.nsmallest(
                config.k,
                pool,
                key=lambda c: (-c.raw_prob, len(c.full_words), c.display()),
            )
            cached = tuple(renormalize_topk(top))
            self._cache[key] = cached
        return list(cached)

    def candidates(
        self, prev_word: Optional[str], prefix: str, config: LmConfig
    ) -> list[Candidate]:
        """The k-candidate slate for a state, renormalized to sum to 1."""
        if config.multiword:
            return self.beam_multiword(prev_word, prefix, config)
        return renormalize_topk(self.raw_candidates(prev_word, prefix, config))

    # -- persistence ------------------------------------------------------
    # Layout (JSON, versioned): header fields `magic` and `version`, then a
    # vocabulary block {word: count} and a bigram block {prev: {word: count}}.
    # The trie is not stored; it is rebuilt on load.

    def save(self, path: str) -> None:
        bigrams: dict[str, dict[str, int]] = {}
        for (prev, w), c in sorted(self.bigrams.counts.items()):
            bigrams.setdefault(prev, {})[w] = c
        doc = {
            "magic": MODEL_MAGIC,
            "version": MODEL_VERSION,
            "vocabulary": dict(sorted(self.vocab.counts.items())),
            "bigrams": bigrams,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path: str) -> "LanguageModel":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        if doc.get("magic") != MODEL_MAGIC:
            raise ConfigError(f"not a language model file: {path}")
        if doc.get("version") != MODEL_VERSION:
            raise ConfigError(f"unsupported model version {doc.get('version')}")
        vocab = Vocabulary(counts={w: int(c) for w, c in doc["vocabulary"].items()})
        counts = {
            (prev, w): int(c)
            for prev, row in doc["bigrams"].items()
            for w, c in row.items()
        }
        return cls(vocab, BigramTable(counts))

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for w, c in sorted(self.vocab.counts.items()):
            h.update(f"{w}:{c};".encode())
        for (p, w), c in sorted(self.bigrams.counts.items()):
            h.update(f"{p},{w}:{c};".encode())
        return h.hexdigest()[:16]


def build_lm(sentences: Iterable[SentenceRecord]) -> LanguageModel:
    """Count unigrams and within-sentence adjacent bigrams; build the trie."""
    uni: dict[str, int] = {}
    bi: dict[tuple[str, str], int] = {}
    n = 0
    for rec in sentences:
        n += 1
        for w in rec.words:
            uni[w] = uni.get(w, 0) + 1
        for a, b in zip(rec.words, rec.words[1:]):
            bi[(a, b)] = bi.get((a, b), 0) + 1
    if n == 0 or not uni:
        raise ConfigError("cannot build a language model from an empty corpus")
    model = LanguageModel(Vocabulary(uni), BigramTable(bi))
    model.trie.validate()
    return model
