"""Explicit readability features: classic indices plus cohesion/diversity.

Two feature vectors are produced: a 6-dimensional sentence-level vector and a
22-dimensional document-level vector.  Every formula is implemented exactly as
published, which means two deliberate oddities are kept:

* Coleman-Liau uses the per-100-words reading of both fractions with plus
  signs and no constant term (``0.0588 * letters-per-100-words +
  0.296 * sentences-per-100-words``), which differs from the historical
  index (that one subtracts and has a -15.8 constant).
* LIX omits the conventional x100 on the long-word ratio:
  ``long_words/words + words/sentences``.

"Characters" and "letters" both mean alphanumeric characters as counted by
the tokenizer.  Complex words and polysyllables are words with >= 3 syllables.
Incidences (connectives, logic operators, POS categories) are per 1000 words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .textproc import CONNECTIVE_CATEGORIES, LexiconSet, Token, TokenizedDocument

__all__ = [
    "SENTENCE_FEATURE_NAMES",
    "DOCUMENT_FEATURE_NAMES",
    "DocumentCounts",
    "FeatureStats",
    "sentence_features",
    "document_counts",
    "readability_indices",
    "cohesion_and_diversity",
    "document_features",
    "fit_feature_stats",
    "normalize_features",
    "write_document_csv",
    "write_sentence_csv",
]

SENTENCE_FEATURE_NAMES = (
    "chars_per_word",
    "syllables_per_word",
    "n_words",
    "n_long_words",
    "n_difficult_words",
    "n_pronouns",
)

DOCUMENT_FEATURE_NAMES = (
    "flesch_reading_ease",
    "flesch_kincaid_grade",
    "automated_readability_index",
    "coleman_liau",
    "gunning_fog",
    "lix",
    "rix",
    "smog",
    "dale_chall",
    "conn_additive",
    "conn_logic",
    "conn_temporal",
    "conn_causal",
    "conn_negative",
    "logic_operator_connectivity",
    "lexical_diversity",
    "content_diversity",
    "inc_adjective",
    "inc_noun",
    "inc_verb",
    "inc_adverb",
    "inc_pronoun",
)

_CONTENT_TAGS = ("adjective", "noun", "verb", "adverb")
_POS_INCIDENCE_TAGS = ("adjective", "noun", "verb", "adverb", "pronoun")


@dataclass(frozen=True)
class DocumentCounts:
    """Raw tallies over a tokenized document, inputs to every formula."""

    n_sentences: int
    n_words: int
    n_letters: int
    n_syllables: int
    n_long_words: int
    n_difficult_words: int
    n_complex_words: int
    n_polysyllables: int
    n_unique_words: int
    n_content_words: int
    connective_counts: dict[str, int]
    logic_operator_count: int
    pos_counts: dict[str, int]


def sentence_features(sentence: tuple[Token, ...]) -> np.ndarray:
    """6 ordered values: [chars/word, syllables/word, words, long, difficult, pronouns]."""
    if not sentence:
        raise ValueError("empty sentence")
    n = len(sentence)
    return np.array(
        [
            sum(t.char_count for t in sentence) / n,
            sum(t.syllable_count for t in sentence) / n,
            float(n),
            float(sum(t.is_long for t in sentence)),
            float(sum(t.is_difficult for t in sentence)),
            float(sum(t.pos == "pronoun" for t in sentence)),
        ]
    )


def document_counts(doc: TokenizedDocument, lexicons: LexiconSet) -> DocumentCounts:
    """Aggregate token tallies over the whole document."""
    if not doc.sentences:
        raise ValueError(f"document {doc.id!r} has no sentences")
    tokens = list(doc.all_tokens())
    connective_counts = {cat: 0 for cat in CONNECTIVE_CATEGORIES}
    pos_counts = {tag: 0 for tag in _POS_INCIDENCE_TAGS}
    logic_ops = 0
    for t in tokens:
        for cat in CONNECTIVE_CATEGORIES:
            if t.normalized in lexicons.connectives[cat]:
                connective_counts[cat] += 1
        if t.normalized in lexicons.logic_operators:
            logic_ops += 1
        if t.pos in pos_counts:
            pos_counts[t.pos] += 1
    return DocumentCounts(
        n_sentences=len(doc.sentences),
        n_words=len(tokens),
        n_letters=sum(t.char_count for t in tokens),
        n_syllables=sum(t.syllable_count for t in tokens),
        n_long_words=sum(t.is_long for t in tokens),
        n_difficult_words=sum(t.is_difficult for t in tokens),
        n_complex_words=sum(t.syllable_count >= 3 for t in tokens),
        n_polysyllables=sum(t.syllable_count >= 3 for t in tokens),
        n_unique_words=len({t.normalized for t in tokens}),
        n_content_words=sum(t.pos in _CONTENT_TAGS for t in tokens),
        connective_counts=connective_counts,
        logic_operator_count=logic_ops,
        pos_counts=pos_counts,
    )


def readability_indices(c: DocumentCounts) -> np.ndarray:
    """The 9 classic indices, in DOCUMENT_FEATURE_NAMES order."""
    if c.n_words < 1 or c.n_sentences < 1:
        raise ValueError("readability indices need at least one word and sentence")
    words = float(c.n_words)
    sentences = float(c.n_sentences)
    wps = words / sentences
    spw = c.n_syllables / words
    cpw = c.n_letters / words
    flesch = 206.835 - 1.015 * wps - 84.6 * spw
    fkgl = 0.39 * wps + 11.8 * spw - 15.59
    ari = 4.71 * cpw + 0.5 * wps - 21.43
    coleman = 0.0588 * (c.n_letters / words * 100.0) + 0.296 * (sentences / words * 100.0)
    fog = 0.4 * (wps + 100.0 * c.n_complex_words / words)
    lix = c.n_long_words / words + wps
    rix = c.n_long_words / sentences
    smog = 1.0430 * math.sqrt(c.n_polysyllables * 30.0 / sentences) + 3.1291
    dale_chall = 0.1579 * (c.n_difficult_words / words * 100.0) + 0.0496 * wps
    return np.array([flesch, fkgl, ari, coleman, fog, lix, rix, smog, dale_chall])


def cohesion_and_diversity(c: DocumentCounts) -> np.ndarray:
    """The 13 cohesion/diversity values, in DOCUMENT_FEATURE_NAMES order."""
    if c.n_words < 1:
        raise ValueError("cohesion features need at least one word")
    per_1000 = 1000.0 / c.n_words
    connectives = [c.connective_counts[cat] * per_1000 for cat in CONNECTIVE_CATEGORIES]
    incidences = [c.pos_counts[tag] * per_1000 for tag in _POS_INCIDENCE_TAGS]
    return np.array(
        connectives
        + [
            c.logic_operator_count * per_1000,
            c.n_unique_words / c.n_words,
            c.n_content_words / c.n_words,
        ]
        + incidences
    )


def document_features(doc: TokenizedDocument, lexicons: LexiconSet) -> np.ndarray:
    """The full 22-dimensional document feature vector."""
    c = document_counts(doc, lexicons)
    return np.concatenate([readability_indices(c), cohesion_and_diversity(c)])


@dataclass(frozen=True)
class FeatureStats:
    """Per-dimension z-score statistics, fitted on the training split only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValueError("mean/std shape mismatch")


def fit_feature_stats(vectors: np.ndarray) -> FeatureStats:
    """Fit per-column mean and population standard deviation."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise ValueError("need a (rows, dims) matrix with at least one row")
    return FeatureStats(mean=vectors.mean(axis=0), std=vectors.std(axis=0))


def normalize_features(vectors: np.ndarray, stats: FeatureStats | None) -> np.ndarray:
    """Z-score each column; zero-variance columns pass through unchanged."""
    if stats is None:
        raise ValueError("feature stats not fitted")
    vectors = np.asarray(vectors, dtype=np.float64)
    mean = stats.mean
    std = stats.std
    safe = np.where(std > 0.0, std, 1.0)
    shifted = np.where(std > 0.0, vectors - mean, vectors)
    return shifted / safe


def _format_row(values) -> str:
    return ",".join(f"{v:.6f}" for v in values)


def write_document_csv(path, docs, lexicons: LexiconSet) -> None:
    """One row of the 22 document features per document, 6 decimal places."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id," + ",".join(DOCUMENT_FEATURE_NAMES) + "\n")
        for doc in docs:
            fh.write(f"{doc.id}," + _format_row(document_features(doc, lexicons)) + "\n")


def write_sentence_csv(path, docs, lexicons: LexiconSet) -> None:
    """Per-sentence feature rows keyed by document id and sentence index."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,sentence_index," + ",".join(SENTENCE_FEATURE_NAMES) + "\n")
        for doc in docs:
            for idx, sentence in enumerate(doc.sentences):
                fh.write(f"{doc.id},{idx}," + _format_row(sentence_features(sentence)) + "\n")
