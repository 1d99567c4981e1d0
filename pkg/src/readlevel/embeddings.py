"""Frequency-rank word difficulty and difficulty-weighted skip-gram training.

A word's difficulty is ``log(rank) / log(N)`` with rank 1 for the most
frequent word, so scores run from 0.0 (easiest) to 1.0 (rarest).  Skip-gram
with negative sampling is trained either in standard form or in the
readability-aware form, where each log-sigmoid term is weighted by
``D(a, b) = |d(a) - d(b)| + 1``: word pairs far apart in difficulty get
up-weighted contrast, pairs at equal difficulty reduce to the standard
objective (all weights 1).

The paper-style exponent softmax ``exp((v' . v) ** D)`` is ill-defined for
negative inner products; only the weighted NCE expansion is implemented.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .numcore import Tensor
from .textproc import TokenizedDocument

__all__ = [
    "PAD_WORD",
    "UNK_WORD",
    "Vocabulary",
    "EmbeddingTable",
    "EmbedConfig",
    "build_vocab",
    "difficulty_weight",
    "nce_loss",
    "train_embeddings",
    "nearest_neighbors",
    "iter_training_pairs",
    "save_embeddings",
    "load_embeddings",
]

PAD_WORD = "<pad>"
UNK_WORD = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1


@dataclass(frozen=True)
class VocabEntry:
    index: int
    frequency: int
    rank: int
    difficulty: float


class Vocabulary:
    """Corpus words ranked by descending frequency with difficulty scores.

    Index 0 and 1 are reserved for PAD and UNK; real words occupy indices
    2..N+1 in rank order.  PAD has difficulty 0.0 and UNK 1.0 (an unseen word
    is treated as maximally difficult).  Ties in frequency break
    lexicographically so ranks are deterministic.
    """

    def __init__(self, counts: dict[str, int]):
        if not counts:
            raise ValueError("empty corpus: no words to rank")
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        n = len(ranked)
        log_n = math.log(n) if n > 1 else 1.0
        self.n_words = n
        self._entries: dict[str, VocabEntry] = {}
        self._words: list[str] = [PAD_WORD, UNK_WORD]
        self._frequencies = np.zeros(n + 2, dtype=np.float64)
        self._difficulties = np.zeros(n + 2, dtype=np.float64)
        self._difficulties[UNK_INDEX] = 1.0
        for rank, (word, freq) in enumerate(ranked, start=1):
            difficulty = math.log(rank) / log_n if n > 1 else 0.0
            index = rank + 1
            self._entries[word] = VocabEntry(index, freq, rank, difficulty)
            self._words.append(word)
            self._frequencies[index] = freq
            self._difficulties[index] = difficulty

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def entry(self, word: str) -> VocabEntry:
        return self._entries[word]

    def index(self, word: str) -> int:
        e = self._entries.get(word)
        return e.index if e is not None else UNK_INDEX

    def word(self, index: int) -> str:
        return self._words[index]

    def difficulty(self, word: str) -> float:
        e = self._entries.get(word)
        return e.difficulty if e is not None else 1.0

    def difficulty_by_index(self, index: int) -> float:
        return float(self._difficulties[index])

    def items(self):
        """(word, entry) pairs in rank order."""
        return ((self._words[i], self._entries[self._words[i]]) for i in range(2, len(self._words)))

    def noise_cumulative(self, exponent: float = 0.75) -> np.ndarray:
        """Cumulative noise distribution over word indices (PAD/UNK excluded)."""
        weights = self._frequencies**exponent
        weights[PAD_INDEX] = 0.0
        weights[UNK_INDEX] = 0.0
        total = weights.sum()
        if total <= 0.0:
            raise ValueError("noise distribution has no mass")
        return np.cumsum(weights / total)


def build_vocab(docs) -> Vocabulary:
    """Count normalized tokens over ``docs`` and rank by descending frequency."""
    counts: Counter[str] = Counter()
    for doc in docs:
        for token in doc.all_tokens():
            counts[token.normalized] += 1
    return Vocabulary(dict(counts))


def difficulty_weight(word_a: str, word_b: str, vocab: Vocabulary) -> float:
    """``|d(a) - d(b)| + 1``; symmetric, in [1, 2]."""
    return abs(vocab.difficulty(word_a) - vocab.difficulty(word_b)) + 1.0


@dataclass
class EmbeddingTable:
    """Input and output vector tables plus the sampling configuration."""

    input_vectors: Tensor
    output_vectors: Tensor
    window: int
    negatives: int
    noise_exponent: float = 0.75

    @property
    def dim(self) -> int:
        return self.input_vectors.data.shape[1]


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 32
    window: int = 2
    negatives: int = 5
    epochs: int = 1
    lr: float = 0.025
    readability_aware: bool = False
    seed: int = 0
    noise_exponent: float = 0.75
    dtype: str = "float32"

    def validate(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.negatives < 0:
            raise ValueError(f"negative count must be >= 0, got {self.negatives}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


def _weights_for(center_idx, context_idx, negative_idxs, vocab, readability_aware):
    if not readability_aware:
        return 1.0, np.ones(len(negative_idxs))
    d_center = vocab.difficulty_by_index(center_idx)
    pos = abs(vocab.difficulty_by_index(context_idx) - d_center) + 1.0
    negs = np.array(
        [abs(vocab.difficulty_by_index(i) - d_center) + 1.0 for i in negative_idxs]
    )
    return pos, negs


def nce_loss(
    center,
    context,
    negatives,
    vocab: Vocabulary,
    table: EmbeddingTable,
    readability_aware: bool = True,
) -> Tensor:
    """Weighted negative-sampling loss for one (center, context) pair.

    ``loss = -(D(ctx, cen) * logsig(v'_ctx . v_cen)
               + sum_i D(neg_i, cen) * logsig(-v'_neg_i . v_cen))``

    ``center``/``context``/``negatives`` may be words or vocabulary indices.
    With ``readability_aware=False`` every weight is 1, which is the standard
    skip-gram objective under negative sampling.
    """
    center_idx = vocab.index(center) if isinstance(center, str) else int(center)
    context_idx = vocab.index(context) if isinstance(context, str) else int(context)
    negative_idxs = [vocab.index(w) if isinstance(w, str) else int(w) for w in negatives]
    pos_w, neg_w = _weights_for(center_idx, context_idx, negative_idxs, vocab, readability_aware)

    v_center = nc.row_select(table.input_vectors, [center_idx])  # 1 x d
    v_context = nc.row_select(table.output_vectors, [context_idx])  # 1 x d
    pos_dot = nc.matmul(v_context, nc.transpose(v_center))  # 1 x 1
    total = nc.scale(nc.log_sigmoid(pos_dot), pos_w)
    if negative_idxs:
        v_negs = nc.row_select(table.output_vectors, negative_idxs)  # k x d
        neg_dots = nc.matmul(v_negs, nc.transpose(v_center))  # k x 1
        weighted = nc.mul(
            nc.log_sigmoid(nc.neg(neg_dots)),
            np.asarray(neg_w, dtype=neg_dots.dtype).reshape(-1, 1),
        )
        total = nc.add(nc.tensor_sum(total), nc.tensor_sum(weighted))
    return nc.neg(nc.tensor_sum(total))


def iter_training_pairs(docs, vocab: Vocabulary, window: int):
    """Yield (center_index, context_index) pairs, sentence by sentence.

    The window spans ``window`` positions on each side of the center word and
    never crosses sentence boundaries.  Order is deterministic: documents,
    then sentences, then center position, then context position.
    """
    for doc in docs:
        for sentence in doc.sentences:
            indices = [vocab.index(t.normalized) for t in sentence]
            for t, center_idx in enumerate(indices):
                lo = max(0, t - window)
                hi = min(len(indices), t + window + 1)
                for j in range(lo, hi):
                    if j != t:
                        yield center_idx, indices[j]


def sample_negatives(cumulative: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    """Draw ``k`` indices from the cumulative noise distribution."""
    if k == 0:
        return []
    draws = rng.random(k)
    return [int(np.searchsorted(cumulative, u, side="right")) for u in draws]


def init_tables(vocab: Vocabulary, config: EmbedConfig) -> EmbeddingTable:
    """word2vec-style init: small uniform input vectors, zero output vectors."""
    rng = nc.seeded_rng(config.seed)
    dtype = np.dtype(config.dtype)
    rows = len(vocab)
    bound = 0.5 / config.dim
    input_vectors = nc.init_uniform((rows, config.dim), bound, rng, dtype=dtype)
    output_vectors = Tensor(np.zeros((rows, config.dim), dtype=dtype), requires_grad=True)
    return EmbeddingTable(
        input_vectors=input_vectors,
        output_vectors=output_vectors,
        window=config.window,
        negatives=config.negatives,
        noise_exponent=config.noise_exponent,
    )


def train_embeddings(docs, config: EmbedConfig, vocab: Vocabulary | None = None) -> EmbeddingTable:
    """Train skip-gram embeddings over tokenized documents.

    One SGD step per (center, context) pair, negatives drawn from the
    frequency^exponent noise distribution.  The run is fully deterministic
    given ``config.seed``: initialization and the negative-sampling stream
    both derive from it.
    """
    config.validate()
    docs = list(docs)
    if vocab is None:
        vocab = build_vocab(docs)
    table = init_tables(vocab, config)
    store = nc.ParameterStore()
    store.add("input_vectors", table.input_vectors)
    store.add("output_vectors", table.output_vectors)
    cumulative = vocab.noise_cumulative(config.noise_exponent)
    sample_rng = nc.seeded_rng(config.seed + 1)
    for _ in range(config.epochs):
        for center_idx, context_idx in iter_training_pairs(docs, vocab, config.window):
            negative_idxs = sample_negatives(cumulative, config.negatives, sample_rng)
            loss = nce_loss(
                center_idx,
                context_idx,
                negative_idxs,
                vocab,
                table,
                readability_aware=config.readability_aware,
            )
            nc.backward(loss)
            nc.sgd_step(store, config.lr)
    return table


def nearest_neighbors(word: str, table: EmbeddingTable, vocab: Vocabulary, top_n: int) -> list[tuple[str, float]]:
    """Words ranked by descending cosine similarity to ``word`` (self excluded)."""
    if word not in vocab:
        raise KeyError(f"word not in vocabulary: {word!r}")
    if top_n <= 0:
        return []
    vectors = table.input_vectors.data
    target = vectors[vocab.index(word)]
    norms = np.linalg.norm(vectors, axis=1)
    target_norm = np.linalg.norm(target)
    denom = norms * (target_norm if target_norm > 0 else 1.0)
    denom = np.where(denom == 0.0, 1.0, denom)
    cosines = vectors @ target / denom
    order = np.argsort(-cosines, kind="stable")
    results = []
    skip = {PAD_INDEX, UNK_INDEX, vocab.index(word)}
    for idx in order:
        if idx in skip:
            continue
        results.append((vocab.word(int(idx)), float(cosines[idx])))
        if len(results) == top_n:
            break
    return results


def save_embeddings(path, table: EmbeddingTable, vocab: Vocabulary) -> None:
    """Text format: header ``dim count``, then ``word v1 v2 ...`` per row."""
    vectors = table.input_vectors.data
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{vectors.shape[1]} {vectors.shape[0]}\n")
        for idx in range(vectors.shape[0]):
            values = " ".join(f"{v:.8e}" for v in vectors[idx])
            fh.write(f"{vocab.word(idx)} {values}\n")


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Load the text format back as (words, matrix)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"bad embedding header in {path}")
        dim, count = int(header[0]), int(header[1])
        words = []
        matrix = np.zeros((count, dim), dtype=np.float32)
        for row, line in enumerate(fh):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row {row} has {len(parts) - 1} values, expected {dim}")
            words.append(parts[0])
            matrix[row] = [float(x) for x in parts[1:]]
    if len(words) != count:
        raise ValueError(f"{path}: header claims {count} rows, found {len(words)}")
    return words, matrix
