"""Deterministic text segmentation, tokenization, and word classification.

Everything downstream (explicit features, the neural pipeline) consumes the
output of this module, so the rules here are fixed conventions rather than
best-effort NLP: sentence breaks happen at ``. ! ?`` followed by whitespace
or end of text (with abbreviation and initial guards), tokens are maximal
runs of letters/digits/apostrophes, and syllables come from a vowel-group
heuristic.  Identical input bytes always produce identical output.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

__all__ = [
    "RawDocument",
    "Token",
    "TokenizedDocument",
    "LexiconSet",
    "split_sentences",
    "tokenize",
    "count_syllables",
    "classify_token",
    "load_lexicons",
    "tokenize_document",
]

POS_TAGS = ("adjective", "noun", "verb", "adverb", "pronoun", "other")

LEXICON_ENV_VAR = "READLEVEL_LEXICONS"

_BUNDLED_LEXICON_DIR = Path(__file__).parent / "lexicons"

# Abbreviations whose trailing period does not end a sentence.
_ABBREVIATIONS = frozenset(
    "mr mrs ms dr prof st jr sr vs etc eg ie cf al inc ltd co corp no fig figs "
    "approx dept est min max mt rev gen sgt capt lt col".split()
)

_WORD_RE = re.compile(r"[A-Za-z0-9']+")
_LETTER_RE = re.compile(r"[A-Za-z]")
_ALNUM_RE = re.compile(r"[A-Za-z0-9]")
_VOWELS = frozenset("aeiouy")


@dataclass(frozen=True)
class RawDocument:
    """An input article: raw text plus an optional ordinal class label."""

    id: str
    text: str
    label: int | None = None


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    char_count: int
    syllable_count: int
    is_long: bool
    is_difficult: bool = False
    pos: str = "other"


@dataclass(frozen=True)
class TokenizedDocument:
    """Sentences of tokens, order preserved from the source text."""

    id: str
    sentences: tuple[tuple[Token, ...], ...]
    label: int | None = None

    def all_tokens(self):
        for sentence in self.sentences:
            yield from sentence


@dataclass(frozen=True)
class LexiconSet:
    """Word lists driving difficulty, connective, and POS classification.

    All entries are lowercase.  ``connectives`` maps the five category names
    (additive, logic, temporal, causal, negative) to word sets.
    """

    easy_words: frozenset[str]
    pronouns: frozenset[str]
    connectives: dict[str, frozenset[str]]
    logic_operators: frozenset[str]
    pos_lexicon: dict[str, str] = field(default_factory=dict)


CONNECTIVE_CATEGORIES = ("additive", "logic", "temporal", "causal", "negative")


def _read_word_list(path: Path) -> frozenset[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            entry = line.rstrip()
            if not entry or entry.startswith("#"):
                continue
            words.add(entry.lower())
    return frozenset(words)


def _read_pos_lexicon(path: Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.rstrip()
            if not entry or entry.startswith("#"):
                continue
            parts = entry.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'word tag', got {entry!r}")
            word, tag = parts
            if tag not in POS_TAGS:
                raise ValueError(f"{path}:{lineno}: unknown tag {tag!r}")
            mapping[word.lower()] = tag
    return mapping


def load_lexicons(directory: str | os.PathLike | None = None) -> LexiconSet:
    """Load the lexicon set from ``directory``.

    Falls back to the ``READLEVEL_LEXICONS`` environment variable and then to
    the bundled data files.  Each file is UTF-8, one entry per line, ``#``
    lines ignored, trailing whitespace trimmed.
    """
    if directory is None:
        directory = os.environ.get(LEXICON_ENV_VAR) or _BUNDLED_LEXICON_DIR
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"lexicon directory not found: {directory}")
    connectives = {
        category: _read_word_list(directory / f"connectives_{category}.txt")
        for category in CONNECTIVE_CATEGORIES
    }
    return LexiconSet(
        easy_words=_read_word_list(directory / "easy_words.txt"),
        pronouns=_read_word_list(directory / "pronouns.txt"),
        connectives=connectives,
        logic_operators=_read_word_list(directory / "logic_operators.txt"),
        pos_lexicon=_read_pos_lexicon(directory / "pos_lexicon.txt"),
    )


def split_sentences(text: str) -> list[str]:
    """Split ``text`` into sentences at ``. ! ?`` followed by whitespace or end.

    Guards: a period after a known abbreviation or a single-letter initial
    does not break; ``3.14`` never breaks because the period is not followed
    by whitespace.  Trailing text without terminal punctuation forms a final
    sentence, so all non-whitespace input is covered.
    """
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            # Consume runs like "?!" or "..." as one terminator.
            end = i + 1
            while end < n and text[end] in ".!?":
                end += 1
            if end >= n or text[end].isspace():
                if ch == "." and end == i + 1 and _is_guarded_period(text, i, start):
                    i += 1
                    continue
                sentence = text[start:end].strip()
                if sentence:
                    sentences.append(sentence)
                start = end
                i = end
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _is_guarded_period(text: str, pos: int, start: int) -> bool:
    # Word immediately preceding the period, apostrophes/letters only.
    j = pos
    while j > start and (text[j - 1].isalpha() or text[j - 1] == "'"):
        j -= 1
    word = text[j:pos].lower()
    if not word:
        return False
    if word in _ABBREVIATIONS:
        return True
    # Single-letter initials: "J. Smith".
    return len(word) == 1 and word.isalpha()


def tokenize(sentence: str) -> list[Token]:
    """Tokenize one sentence into maximal runs of letters/digits/apostrophes.

    Punctuation is dropped. Raises ``ValueError`` for input without any word
    characters.
    """
    tokens: list[Token] = []
    for match in _WORD_RE.finditer(sentence):
        surface = match.group()
        if not _ALNUM_RE.search(surface):
            continue  # bare apostrophe runs are punctuation
        normalized = surface.lower()
        char_count = sum(1 for c in surface if c.isalnum())
        if _LETTER_RE.search(surface):
            syllables = count_syllables(surface)
        else:
            syllables = 1  # digit-only tokens: one spoken unit by convention
        tokens.append(
            Token(
                surface=surface,
                normalized=normalized,
                char_count=char_count,
                syllable_count=syllables,
                is_long=char_count > 6,
            )
        )
    if not tokens:
        raise ValueError("empty sentence")
    return tokens


def count_syllables(word: str) -> int:
    """Count syllables as vowel groups (a, e, i, o, u, y) with a silent-e rule.

    A trailing 'e' is suppressed unless that would leave zero syllables; the
    result is always at least 1.  Raises ``ValueError`` if ``word`` contains
    no letter.
    """
    letters = [c for c in word.lower() if c.isalpha()]
    if not letters:
        raise ValueError(f"no letters in {word!r}")
    groups = 0
    prev_vowel = False
    for c in letters:
        vowel = c in _VOWELS
        if vowel and not prev_vowel:
            groups += 1
        prev_vowel = vowel
    if letters[-1] == "e" and groups > 1:
        groups -= 1
    return max(groups, 1)


def classify_token(token: Token, lexicons: LexiconSet) -> Token:
    """Fill ``is_difficult`` and ``pos`` from the lexicon set.

    A word is difficult iff its normalized form is absent from the easy-word
    list.  POS comes from the lookup lexicon with fallback "other"; the
    pronoun tag wins whenever the word is in the pronoun list.
    """
    word = token.normalized
    if word in lexicons.pronouns:
        pos = "pronoun"
    else:
        pos = lexicons.pos_lexicon.get(word, "other")
    return replace(token, is_difficult=word not in lexicons.easy_words, pos=pos)


def tokenize_document(doc: RawDocument, lexicons: LexiconSet) -> TokenizedDocument:
    """Run the full pipeline: sentences -> tokens -> classified tokens."""
    sentences = []
    for sentence in split_sentences(doc.text):
        try:
            tokens = tokenize(sentence)
        except ValueError:
            continue  # sentence of pure punctuation contributes nothing
        sentences.append(tuple(classify_token(t, lexicons) for t in tokens))
    return TokenizedDocument(id=doc.id, sentences=tuple(sentences), label=doc.label)
