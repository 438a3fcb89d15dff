"""Corpora, tokenization, document frequencies, and trigger selection.

Word frequency throughout this module is DOCUMENT frequency: the
fraction of corpus texts whose token set contains the word. That is the
quantity the watermark condition acts on (per-text containment).
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    EmptyCorpusError,
    InsufficientVocabularyError,
    VocabTooSmallError,
)
from .validation import check_interval, check_positive_int, check_texts

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

TokenSet = tuple[str, ...]


def split_words(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics, keeping duplicates."""
    return _WORD_RE.findall(text.lower())


def tokenize(text: str) -> TokenSet:
    """Unique lowercase words of a text, first-occurrence order preserved."""
    return tuple(dict.fromkeys(split_words(text)))


@dataclass(frozen=True)
class FrequencyTable:
    """Document frequency of every word seen in a corpus."""

    frequencies: dict[str, float]
    corpus_size: int

    def words_in_band(self, lo: float, hi: float) -> list[str]:
        """All words with lo <= frequency <= hi, sorted lexicographically."""
        return sorted(w for w, f in self.frequencies.items() if lo <= f <= hi)


def build_frequency_table(corpus) -> FrequencyTable:
    """Count, for each word, the fraction of texts containing it.

    Parameters
    ----------
    corpus : iterable of str
        Documents, one string each.

    Returns
    -------
    FrequencyTable

    Raises
    ------
    EmptyCorpusError
        If the corpus contains no texts.
    """
    texts = check_texts(corpus, "corpus")
    if not texts:
        raise EmptyCorpusError("cannot build a frequency table from zero texts")
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(tokenize(text))
    size = len(texts)
    return FrequencyTable(
        frequencies={w: c / size for w, c in counts.items()},
        corpus_size=size,
    )


@dataclass(frozen=True)
class TriggerSet:
    """Words selected from a moderate-frequency band to act as triggers."""

    triggers: tuple[str, ...]
    interval: tuple[float, float]
    seed: int
    # document frequency of each trigger at selection time; not persisted
    frequencies: dict[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(set(self.triggers)) != len(self.triggers):
            raise ValueError("trigger words must be distinct")

    def __contains__(self, word: str) -> bool:
        return word in self.triggers

    def __len__(self) -> int:
        return len(self.triggers)

    def to_json(self) -> str:
        return json.dumps(
            {
                "triggers": list(self.triggers),
                "interval": list(self.interval),
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "TriggerSet":
        obj = json.loads(payload)
        lo, hi = check_interval(obj["interval"])
        return cls(
            triggers=tuple(obj["triggers"]),
            interval=(lo, hi),
            seed=int(obj["seed"]),
        )


def select_triggers(table: FrequencyTable, interval, n: int, seed: int) -> TriggerSet:
    """Sample n distinct trigger words from a frequency band.

    Eligible words (lo <= f <= hi) are sorted lexicographically before a
    seeded uniform draw without replacement, so the result does not
    depend on the table's storage order.

    Raises
    ------
    InsufficientVocabularyError
        If fewer than n words fall inside the band.
    """
    lo, hi = check_interval(interval)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    eligible = table.words_in_band(lo, hi)
    if len(eligible) < n:
        raise InsufficientVocabularyError(
            f"need {n} words with document frequency in [{lo}, {hi}], "
            f"corpus has {len(eligible)} eligible"
        )
    rng = np.random.default_rng(seed)
    picked = [eligible[i] for i in rng.choice(len(eligible), size=n, replace=False)]
    return TriggerSet(
        triggers=tuple(picked),
        interval=(lo, hi),
        seed=seed,
        frequencies={w: table.frequencies[w] for w in picked},
    )


@dataclass(frozen=True)
class LabeledCorpus:
    """Texts with class labels, as produced by the synthetic generator."""

    texts: tuple[tuple[str, int], ...]
    num_classes: int
    vocab_size: int
    seed: int

    def __post_init__(self):
        for text, label in self.texts:
            if not text:
                raise ValueError("labeled corpus texts must be nonempty")
            if not 0 <= label < self.num_classes:
                raise ValueError(f"label {label} outside [0, {self.num_classes})")

    @property
    def documents(self) -> list[str]:
        return [t for t, _ in self.texts]

    @property
    def labels(self) -> np.ndarray:
        return np.array([l for _, l in self.texts], dtype=np.int64)


def _doc_freq_to_token_prob(doc_freq: float, text_len: int) -> float:
    # P(word in text of L iid tokens) = 1-(1-p)^L, inverted for p
    return 1.0 - (1.0 - doc_freq) ** (1.0 / text_len)


def _geometric_band(count: int, f_hi: float, f_lo: float, text_len: int) -> np.ndarray:
    """Per-token probabilities whose expected document frequencies run
    geometrically from f_hi down to f_lo."""
    p_hi = _doc_freq_to_token_prob(f_hi, text_len)
    p_lo = _doc_freq_to_token_prob(f_lo, text_len)
    if count == 1:
        return np.array([p_hi])
    ratio = (p_lo / p_hi) ** (1.0 / (count - 1))
    return p_hi * ratio ** np.arange(count)


# Shared-vocabulary tier layout. Fractions are of the non-class vocabulary;
# document-frequency endpoints assume the band definitions below, rescaled
# as one block to hit the total background mass.
_CLASS_MASS = 0.24
_TIERS = (
    # (fraction of shared vocab, min count, doc-freq hi, doc-freq lo)
    (0.013, 3, 0.30, 0.20),    # stopword-like
    (0.023, 3, 0.19, 0.105),   # high band, keeps [10%,20%] populated
    (0.164, 8, 0.0098, 0.0052),  # moderate band, trigger candidates
    (None, 0, 0.0042, 0.0010),   # tail, down to ~0.1%
)


def _class_token_distributions(
    num_classes: int, vocab_size: int, text_len: int
) -> tuple[np.ndarray, int]:
    """Token distributions per class: (num_classes, vocab_size) rows.

    Returns the rows and the per-class block size. Words [c*block,
    (c+1)*block) belong exclusively to class c; the rest is a shared
    background whose tiers span document frequencies ~0.1% to ~30%.
    """
    if vocab_size < num_classes:
        raise VocabTooSmallError(
            f"vocab_size {vocab_size} < num_classes {num_classes}"
        )
    block = min(12, max(1, vocab_size // (num_classes * 10)))
    n_class = num_classes * block
    shared_n = vocab_size - n_class

    parts = []
    remaining = shared_n
    for frac, min_n, f_hi, f_lo in _TIERS:
        if remaining <= 0:
            break
        count = remaining if frac is None else min(remaining, max(min_n, round(shared_n * frac)))
        parts.append(_geometric_band(count, f_hi, f_lo, text_len))
        remaining -= count
    shared = np.concatenate(parts) if parts else np.zeros(0)

    class_mass = _CLASS_MASS if shared_n else 1.0
    if shared_n:
        shared *= (1.0 - class_mass) / shared.sum()

    rows = np.zeros((num_classes, vocab_size))
    for c in range(num_classes):
        rows[c, c * block : (c + 1) * block] = class_mass / block
        rows[c, n_class:] = shared
    return rows, block


def generate_synthetic_corpus(
    num_texts: int, num_classes: int, vocab_size: int, text_len: int, seed: int
) -> LabeledCorpus:
    """Generate a labeled corpus of iid-token texts.

    Each class draws tokens from its own multinomial: a class-specific
    high-probability block plus shared background tiers, so bag-of-words
    embeddings are class-separable and the moderate-frequency band holds
    plenty of trigger candidates.

    Deterministic given the argument tuple.
    """
    check_positive_int(num_texts, "num_texts")
    check_positive_int(num_classes, "num_classes")
    check_positive_int(vocab_size, "vocab_size")
    check_positive_int(text_len, "text_len")

    rows, _ = _class_token_distributions(num_classes, vocab_size, text_len)
    cdfs = np.cumsum(rows, axis=1)
    cdfs[:, -1] = 1.0

    width = max(4, len(str(vocab_size - 1)))
    words = [f"w{i:0{width}d}" for i in range(vocab_size)]

    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(num_texts) % num_classes)
    texts = []
    for label in labels:
        ids = np.searchsorted(cdfs[label], rng.random(text_len), side="right")
        ids = np.minimum(ids, vocab_size - 1)
        texts.append((" ".join(words[i] for i in ids), int(label)))
    return LabeledCorpus(
        texts=tuple(texts),
        num_classes=num_classes,
        vocab_size=vocab_size,
        seed=seed,
    )


# ---- file formats ----

def save_texts(path, texts) -> None:
    """One document per line, UTF-8."""
    lines = check_texts(texts)
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_texts(path) -> list[str]:
    raw = Path(path).read_text(encoding="utf-8")
    return [line for line in raw.splitlines() if line.strip()]


def save_labeled_corpus(path, corpus: LabeledCorpus) -> None:
    """TSV rows of label<TAB>text."""
    with open(path, "w", encoding="utf-8") as fh:
        for text, label in corpus.texts:
            fh.write(f"{label}\t{text}\n")


def load_labeled_corpus(path, num_classes: int | None = None, seed: int = 0) -> LabeledCorpus:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        label, _, text = line.partition("\t")
        pairs.append((text, int(label)))
    if not pairs:
        raise EmptyCorpusError(f"no rows in {path}")
    n_cls = num_classes if num_classes is not None else max(l for _, l in pairs) + 1
    vocab = {w for t, _ in pairs for w in tokenize(t)}
    return LabeledCorpus(
        texts=tuple(pairs), num_classes=n_cls, vocab_size=len(vocab), seed=seed
    )
