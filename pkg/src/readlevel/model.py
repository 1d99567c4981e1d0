"""Hierarchical self-attention readability classifier.

Two stacked encoders: the first turns each sentence's word embeddings (plus
sinusoidal position encodings) into a sentence vector via multi-head
self-attention and attention aggregation, then concatenates the 6 explicit
sentence features; the second applies the same machinery to the sequence of
sentence vectors and emits an article embedding ``y``.  A single transfer
layer maps ``y`` concatenated with the 22 document features to an
``(m-1)``-dimensional output ``r`` scored against learned ordinal thresholds.

Architecture notes (fixed conventions where the construction leaves room):

* The position-wise feed-forward block is two affine maps with a ReLU
  between them (a kernel-size-1 convolution pair); inner width equals the
  model width.
* Layer normalization is applied after each sublayer; residual connections
  are off by default and available behind ``residual=True``.
* ``r`` is the pre-activation output of the transfer layer by default.  A
  softmax variant (``softmax_transfer=True``) is kept for fidelity but is
  degenerate for binary models (a singleton softmax is constantly 1).
* Class decoding: ``label = 1 + #{k : r_k > theta_k}``, clipped to [1, m].
* Pad tokens and pad sentences are excluded from attention and aggregation
  by masks, so appending padding does not change the article embedding.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import numcore as nc
from .checkpoint import CheckpointError, ModelCheckpoint, load_checkpoint, save_checkpoint
from .embeddings import PAD_INDEX, Vocabulary, load_embeddings
from .features import (
    FeatureStats,
    document_features,
    fit_feature_stats,
    normalize_features,
    sentence_features,
)
from .numcore import ParameterStore, Tensor
from .textproc import LexiconSet, RawDocument, tokenize_document

__all__ = [
    "ModelConfig",
    "EncodedDocument",
    "ForwardTrace",
    "Model",
    "Prediction",
    "positional_encoding",
    "multi_head_attention",
    "encoder_layer",
    "attention_aggregate",
    "ordinal_loss",
    "decode_class",
    "train",
    "transfer_train",
]

SENTENCE_FEATURE_DIM = 6
DOCUMENT_FEATURE_DIM = 22


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters; defaults follow the published configuration.

    The published embedding width 100 with 3 heads does not divide evenly,
    so the default is 96 (head width 32).  Both ``dim`` and ``dim + 6`` (the
    document-level width after feature concatenation) must be divisible by
    ``heads``.
    """

    num_classes: int = 2
    dim: int = 96
    heads: int = 3
    sentence_layers: int = 6
    document_layers: int = 6
    max_words: int = 50
    max_sentences: int = 50
    batch_size: int = 32
    lr: float = 0.001
    max_epochs: int = 300
    seed: int = 0
    dtype: str = "float32"
    residual: bool = False
    softmax_transfer: bool = False

    @property
    def doc_dim(self) -> int:
        return self.dim + SENTENCE_FEATURE_DIM

    def validate(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        for name in ("dim", "heads", "sentence_layers", "document_layers",
                     "max_words", "max_sentences", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.dim % self.heads != 0:
            raise ValueError(f"dim {self.dim} not divisible by heads {self.heads}")
        if self.doc_dim % self.heads != 0:
            raise ValueError(
                f"document width {self.doc_dim} (dim + {SENTENCE_FEATURE_DIM}) "
                f"not divisible by heads {self.heads}"
            )
        if np.dtype(self.dtype) not in (np.dtype("float32"), np.dtype("float64")):
            raise ValueError(f"unsupported dtype {self.dtype}")

    @classmethod
    def tiny(cls, num_classes: int = 2, seed: int = 0, **overrides) -> "ModelConfig":
        """A desk-scale configuration for experiments and tests."""
        base = dict(
            num_classes=num_classes,
            dim=10,
            heads=2,
            sentence_layers=1,
            document_layers=1,
            max_words=12,
            max_sentences=6,
            batch_size=32,
            lr=0.01,
            max_epochs=300,
            seed=seed,
        )
        base.update(overrides)
        return cls(**base)

    def encoder_signature(self) -> tuple:
        """Everything that must match for transfer-layer reuse."""
        return (
            self.dim,
            self.heads,
            self.sentence_layers,
            self.document_layers,
            self.max_words,
            self.max_sentences,
            self.dtype,
            self.residual,
            self.softmax_transfer,
        )


_TRANSFER_PARAMS = ("transfer.w", "transfer.theta")


def positional_encoding(m: int, d: int) -> np.ndarray:
    """Sinusoidal position matrix: sin(i / 10^(4j/d)) on even columns,
    cos(i / 10^(4(j-1)/d)) on odd columns."""
    if m < 1 or d < 1:
        raise ValueError("positional encoding needs m, d >= 1")
    i = np.arange(m, dtype=np.float64)[:, None]
    j = np.arange(d, dtype=np.float64)[None, :]
    even_phase = i / np.power(10.0, 4.0 * j / d)
    odd_phase = i / np.power(10.0, 4.0 * (j - 1.0) / d)
    return np.where(j % 2 == 0, np.sin(even_phase), np.cos(odd_phase))


@dataclass
class ForwardTrace:
    """Diagnostics collected during a forward pass."""

    attention_shapes: list = field(default_factory=list)
    softmax_records: list = field(default_factory=list)  # (probs, valid_mask, axis)

    def record_softmax(self, probs: np.ndarray, mask: np.ndarray, axis: int) -> None:
        self.softmax_records.append((probs.copy(), np.asarray(mask, bool).copy(), axis))


def _init_matrix(store, rng, name, shape, dtype):
    bound = 1.0 / math.sqrt(shape[0])
    store.add(name, nc.init_uniform(shape, bound, rng, dtype=dtype))


def _init_layer(store, rng, prefix, width, heads, dtype):
    head_dim = width // heads
    for i in range(heads):
        _init_matrix(store, rng, f"{prefix}.h{i}.wq", (width, head_dim), dtype)
        _init_matrix(store, rng, f"{prefix}.h{i}.wk", (width, head_dim), dtype)
        _init_matrix(store, rng, f"{prefix}.h{i}.wv", (width, head_dim), dtype)
    _init_matrix(store, rng, f"{prefix}.wo", (width, width), dtype)
    _init_matrix(store, rng, f"{prefix}.ffn.w1", (width, width), dtype)
    store.add(f"{prefix}.ffn.b1", Tensor(np.zeros(width, dtype=dtype)))
    _init_matrix(store, rng, f"{prefix}.ffn.w2", (width, width), dtype)
    store.add(f"{prefix}.ffn.b2", Tensor(np.zeros(width, dtype=dtype)))
    for ln in ("ln1", "ln2"):
        store.add(f"{prefix}.{ln}.gamma", Tensor(np.ones(width, dtype=dtype)))
        store.add(f"{prefix}.{ln}.beta", Tensor(np.zeros(width, dtype=dtype)))


def _init_aggregation(store, rng, prefix, width, dtype):
    _init_matrix(store, rng, f"{prefix}.w1", (width, width), dtype)
    store.add(f"{prefix}.b1", Tensor(np.zeros(width, dtype=dtype)))
    _init_matrix(store, rng, f"{prefix}.c", (width, 1), dtype)


def init_parameters(
    config: ModelConfig,
    vocab_size: int,
    embedding: np.ndarray | None = None,
) -> ParameterStore:
    """Create every trainable tensor in a deterministic order."""
    config.validate()
    dtype = np.dtype(config.dtype)
    rng = nc.seeded_rng(config.seed)
    store = ParameterStore()
    if embedding is not None:
        if embedding.shape != (vocab_size, config.dim):
            raise ValueError(
                f"embedding shape {embedding.shape} != ({vocab_size}, {config.dim})"
            )
        store.add("embedding", Tensor(embedding.astype(dtype)))
        rng.uniform(-1, 1, size=(vocab_size, config.dim))  # keep stream position fixed
    else:
        _init_matrix(store, rng, "embedding", (vocab_size, config.dim), dtype)
    for l in range(config.sentence_layers):
        _init_layer(store, rng, f"sent.l{l}", config.dim, config.heads, dtype)
    _init_aggregation(store, rng, "sent.agg", config.dim, dtype)
    for l in range(config.document_layers):
        _init_layer(store, rng, f"doc.l{l}", config.doc_dim, config.heads, dtype)
    _init_aggregation(store, rng, "doc.agg", config.doc_dim, dtype)
    _init_transfer(store, rng, config, dtype)
    return store


def _init_transfer(store, rng, config, dtype):
    _init_matrix(
        store, rng, "transfer.w",
        (config.doc_dim + DOCUMENT_FEATURE_DIM, config.num_classes - 1), dtype,
    )
    store.add("transfer.theta", Tensor(np.zeros(config.num_classes - 1, dtype=dtype)))


def multi_head_attention(params, prefix, query, key, value, key_mask, heads, trace=None):
    """Masked multi-head attention: per-head scaled dot-product, heads
    concatenated, then projected.  ``key_mask`` marks valid key rows."""
    width = query.shape[1]
    if width % heads != 0:
        raise ValueError(f"width {width} not divisible by heads {heads}")
    head_dim = width // heads
    inv_sqrt = 1.0 / math.sqrt(head_dim)
    score_mask = np.broadcast_to(np.asarray(key_mask, bool)[None, :],
                                 (query.shape[0], key.shape[0]))
    outputs = []
    for i in range(heads):
        qi = nc.matmul(query, params[f"{prefix}.h{i}.wq"])
        ki = nc.matmul(key, params[f"{prefix}.h{i}.wk"])
        vi = nc.matmul(value, params[f"{prefix}.h{i}.wv"])
        scores = nc.scale(nc.matmul(qi, nc.transpose(ki)), inv_sqrt)
        if trace is not None:
            trace.attention_shapes.append(scores.shape)
        attn = nc.softmax(scores, axis=-1, mask=score_mask)
        if trace is not None:
            trace.record_softmax(attn.data, score_mask, -1)
        outputs.append(nc.matmul(attn, vi))
    return nc.matmul(nc.concat(outputs, axis=1), params[f"{prefix}.wo"])


def encoder_layer(params, prefix, hidden, mask, heads, residual=False, trace=None):
    """One encoder block: self-attention then position-wise feed-forward,
    each followed by layer normalization."""
    att = multi_head_attention(params, prefix, hidden, hidden, hidden, mask, heads, trace)
    if residual:
        att = nc.add(att, hidden)
    h1 = nc.layer_norm(att, params[f"{prefix}.ln1.gamma"], params[f"{prefix}.ln1.beta"])
    inner = nc.relu(nc.add(nc.matmul(h1, params[f"{prefix}.ffn.w1"]), params[f"{prefix}.ffn.b1"]))
    ff = nc.add(nc.matmul(inner, params[f"{prefix}.ffn.w2"]), params[f"{prefix}.ffn.b2"])
    if residual:
        ff = nc.add(ff, h1)
    return nc.layer_norm(ff, params[f"{prefix}.ln2.gamma"], params[f"{prefix}.ln2.beta"])


def attention_aggregate(params, prefix, hidden, mask, trace=None):
    """Convex combination of unmasked rows, weighted by softmax similarity
    to the trainable context vector.  Returns a 1 x width row."""
    mask = np.asarray(mask, bool)
    if not mask.any():
        raise ValueError("empty sequence: nothing to aggregate")
    u = nc.tanh(nc.add(nc.matmul(hidden, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    logits = nc.matmul(u, params[f"{prefix}.c"])  # rows x 1
    weights = nc.softmax(logits, axis=0, mask=mask[:, None])
    if trace is not None:
        trace.record_softmax(weights.data, mask[:, None], 0)
    return nc.matmul(nc.transpose(weights), hidden)


@dataclass
class EncodedDocument:
    """Index/mask/feature arrays for one document, ready for the encoders."""

    id: str
    token_indices: np.ndarray  # (n, m) int64, PAD_INDEX at pad slots
    token_mask: np.ndarray  # (n, m) bool
    sentence_mask: np.ndarray  # (n,) bool
    sentence_feats: np.ndarray  # (n, 6) normalized
    doc_feats: np.ndarray  # (22,) normalized
    label: int | None = None


class TextEncoder:
    """Turns raw documents into EncodedDocuments using a fixed vocabulary and
    normalization statistics (both fitted on the training split)."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        lexicons: LexiconSet,
        u_stats: FeatureStats,
        v_stats: FeatureStats,
    ):
        self.config = config
        self.vocab = vocab
        self.lexicons = lexicons
        self.u_stats = u_stats
        self.v_stats = v_stats

    def encode(self, doc: RawDocument) -> EncodedDocument:
        tokenized = tokenize_document(doc, self.lexicons)
        if not tokenized.sentences:
            raise ValueError(f"document {doc.id!r} has no sentences")
        config = self.config
        sentences = tokenized.sentences[: config.max_sentences]
        n = len(sentences)
        m = min(config.max_words, max(len(s) for s in sentences))
        token_indices = np.full((n, m), PAD_INDEX, dtype=np.int64)
        token_mask = np.zeros((n, m), dtype=bool)
        u = np.zeros((n, SENTENCE_FEATURE_DIM), dtype=np.float64)
        for i, sentence in enumerate(sentences):
            kept = sentence[: config.max_words]
            for j, token in enumerate(kept):
                token_indices[i, j] = self.vocab.index(token.normalized)
                token_mask[i, j] = True
            u[i] = sentence_features(sentence)
        u = normalize_features(u, self.u_stats)
        v = normalize_features(
            document_features(tokenized, self.lexicons)[None, :], self.v_stats
        )[0]
        dtype = np.dtype(config.dtype)
        return EncodedDocument(
            id=doc.id,
            token_indices=token_indices,
            token_mask=token_mask,
            sentence_mask=np.ones(n, dtype=bool),
            sentence_feats=u.astype(dtype),
            doc_feats=v.astype(dtype),
            label=tokenized.label,
        )


_PE_CACHE: dict[tuple[int, int, str], np.ndarray] = {}


def _pos_encoding(m: int, d: int, dtype) -> np.ndarray:
    key = (m, d, np.dtype(dtype).str)
    if key not in _PE_CACHE:
        _PE_CACHE[key] = positional_encoding(m, d).astype(dtype)
    return _PE_CACHE[key]


def document_embedding(params, config: ModelConfig, enc: EncodedDocument, trace=None):
    """Run both encoder levels and return the article embedding (1 x doc_dim)."""
    dtype = np.dtype(config.dtype)
    n, m = enc.token_indices.shape
    if not enc.sentence_mask.any():
        raise ValueError(f"document {enc.id!r} has zero unmasked sentences")
    pe_sent = _pos_encoding(m, config.dim, dtype)
    rows = []
    for i in range(n):
        if not enc.sentence_mask[i]:
            rows.append(Tensor(np.zeros((1, config.doc_dim), dtype=dtype)))
            continue
        emb = nc.row_select(params["embedding"], enc.token_indices[i])
        hidden = nc.add(emb, Tensor(pe_sent))
        for l in range(config.sentence_layers):
            hidden = encoder_layer(
                params, f"sent.l{l}", hidden, enc.token_mask[i],
                config.heads, config.residual, trace,
            )
        pooled = attention_aggregate(params, "sent.agg", hidden, enc.token_mask[i], trace)
        rows.append(nc.concat([pooled, Tensor(enc.sentence_feats[i][None, :])], axis=1))
    hidden = nc.add(nc.concat(rows, axis=0), Tensor(_pos_encoding(n, config.doc_dim, dtype)))
    for l in range(config.document_layers):
        hidden = encoder_layer(
            params, f"doc.l{l}", hidden, enc.sentence_mask,
            config.heads, config.residual, trace,
        )
    return attention_aggregate(params, "doc.agg", hidden, enc.sentence_mask, trace)


def transfer_output(params, config: ModelConfig, article_embedding, doc_feats, trace=None):
    """Transfer layer: r = (y ++ v) W_t, optionally softmax-activated."""
    combined = nc.concat([article_embedding, Tensor(doc_feats[None, :])], axis=1)
    r = nc.matmul(combined, params["transfer.w"])
    if config.softmax_transfer:
        r = nc.softmax(r, axis=-1)
        if trace is not None:
            trace.record_softmax(r.data, np.ones(r.shape, bool), -1)
    return r


def forward_document(params, config: ModelConfig, enc: EncodedDocument, trace=None):
    y = document_embedding(params, config, enc, trace)
    return transfer_output(params, config, y, enc.doc_feats, trace)


def ordinal_loss(r, label: int, theta, num_classes: int):
    """Immediate-threshold ordinal loss with f = log-sigmoid.

    ``loss = -sum_k logsig(s(k; label) * (theta_k - r_k))`` where s = -1 for
    k < label and +1 otherwise.  Nonnegative, differentiable in r and theta.
    """
    if not 1 <= label <= num_classes:
        raise ValueError(f"label {label} outside [1, {num_classes}]")
    k = np.arange(1, num_classes)
    signs = np.where(k < label, -1.0, 1.0).astype(r.dtype if isinstance(r, Tensor) else np.float64)
    margin = nc.mul(nc.sub(theta, r), signs.reshape(1, -1))
    return nc.neg(nc.tensor_sum(nc.log_sigmoid(margin)))


def decode_class(r_values: np.ndarray, theta_values: np.ndarray, num_classes: int) -> int:
    """label = 1 + #{k : r_k > theta_k}, clipped to [1, num_classes]."""
    count = int(np.sum(np.asarray(r_values).reshape(-1) > np.asarray(theta_values).reshape(-1)))
    return int(np.clip(1 + count, 1, num_classes))


def binary_score(r_values: np.ndarray, theta_values: np.ndarray) -> float:
    """Sigmoid-calibrated confidence of the harder class for binary models."""
    r1 = float(np.asarray(r_values).reshape(-1)[0])
    t1 = float(np.asarray(theta_values).reshape(-1)[0])
    return float(1.0 / (1.0 + math.exp(-(r1 - t1))))


@dataclass
class Prediction:
    r: np.ndarray
    class_label: int
    score: float | None


class Model:
    """A trained classifier: parameters plus the frozen text pipeline."""

    def __init__(self, config, params, vocab, lexicons, u_stats, v_stats):
        self.config = config
        self.params = params
        self.vocab = vocab
        self.lexicons = lexicons
        self.u_stats = u_stats
        self.v_stats = v_stats
        self.encoder = TextEncoder(config, vocab, lexicons, u_stats, v_stats)

    # -- inference ---------------------------------------------------------
    def predict_encoded(self, enc: EncodedDocument, trace=None) -> Prediction:
        r = forward_document(self.params, self.config, enc, trace)
        theta = self.params["transfer.theta"].data
        label = decode_class(r.data, theta, self.config.num_classes)
        score = binary_score(r.data, theta) if self.config.num_classes == 2 else None
        return Prediction(r=r.data.reshape(-1).copy(), class_label=label, score=score)

    def predict(self, doc: RawDocument, trace=None) -> Prediction:
        return self.predict_encoded(self.encoder.encode(doc), trace)

    # -- persistence -------------------------------------------------------
    def to_checkpoint(self) -> ModelCheckpoint:
        stats = {
            "u_mean": self.u_stats.mean,
            "u_std": self.u_stats.std,
            "v_mean": self.v_stats.mean,
            "v_std": self.v_stats.std,
        }
        tensors = {name: p.data for name, p in self.params.items()}
        return ModelCheckpoint(
            config=asdict(self.config),
            vocab_items=[[word, entry.frequency] for word, entry in self.vocab.items()],
            stats=stats,
            tensors=tensors,
        )

    def save(self, path) -> None:
        save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def from_checkpoint(cls, ckpt: ModelCheckpoint, lexicons: LexiconSet) -> "Model":
        config = ModelConfig(**ckpt.config)
        vocab = Vocabulary({word: freq for word, freq in ckpt.vocab_items})
        params = ParameterStore()
        for name, values in ckpt.tensors.items():
            params.add(name, Tensor(values))
        u_stats = FeatureStats(mean=ckpt.stats["u_mean"], std=ckpt.stats["u_std"])
        v_stats = FeatureStats(mean=ckpt.stats["v_mean"], std=ckpt.stats["v_std"])
        return cls(config, params, vocab, lexicons, u_stats, v_stats)

    @classmethod
    def load(cls, path, lexicons: LexiconSet) -> "Model":
        return cls.from_checkpoint(load_checkpoint(path), lexicons)


def _fit_pipeline(raw_docs, config, lexicons):
    """Tokenize the training docs, build the vocabulary, and fit feature stats."""
    tokenized = [tokenize_document(d, lexicons) for d in raw_docs]
    tokenized = [t for t in tokenized if t.sentences]
    if not tokenized:
        raise ValueError("no usable documents in corpus")
    vocab = Vocabulary(
        {w: f for w, f in _count_tokens(tokenized).items()}
    )
    u_rows = [sentence_features(s) for t in tokenized for s in t.sentences]
    v_rows = [document_features(t, lexicons) for t in tokenized]
    u_stats = fit_feature_stats(np.asarray(u_rows))
    v_stats = fit_feature_stats(np.asarray(v_rows))
    return vocab, u_stats, v_stats


def _count_tokens(tokenized_docs):
    counts: dict[str, int] = {}
    for t in tokenized_docs:
        for token in t.all_tokens():
            counts[token.normalized] = counts.get(token.normalized, 0) + 1
    return counts


def _epoch_batches(count: int, batch_size: int, rng) -> list[np.ndarray]:
    order = rng.permutation(count)
    return [order[i : i + batch_size] for i in range(0, count, batch_size)]


def train(
    raw_docs,
    config: ModelConfig,
    lexicons: LexiconSet,
    embeddings_path=None,
    stop_at_accuracy: float | None = None,
    log_fn=None,
) -> tuple[Model, list[dict]]:
    """Train from scratch on labeled documents.

    Mini-batch Adam over every parameter (thresholds included).  Deterministic
    under ``config.seed``: initialization, batch shuffling, and all arithmetic
    derive from it.  Returns the model and one log record per epoch
    ``{"epoch", "loss", "train_acc"}``.  ``stop_at_accuracy`` ends training
    early once the within-epoch accuracy reaches the given level.
    """
    config.validate()
    raw_docs = list(raw_docs)
    for doc in raw_docs:
        if doc.label is None:
            raise ValueError(f"document {doc.id!r} is unlabeled")
        if not 1 <= doc.label <= config.num_classes:
            raise ValueError(
                f"document {doc.id!r} label {doc.label} outside [1, {config.num_classes}]"
            )
    vocab, u_stats, v_stats = _fit_pipeline(raw_docs, config, lexicons)
    embedding = None
    if embeddings_path is not None:
        embedding = _embedding_from_file(embeddings_path, vocab, config)
    params = init_parameters(config, len(vocab), embedding=embedding)
    model = Model(config, params, vocab, lexicons, u_stats, v_stats)
    encoded = [model.encoder.encode(d) for d in raw_docs]
    history = _fit(params, config, encoded, stop_at_accuracy, log_fn)
    return model, history


def _fit(params, config, encoded, stop_at_accuracy=None, log_fn=None) -> list[dict]:
    batch_rng = nc.seeded_rng(config.seed + 1)
    history = []
    for epoch in range(1, config.max_epochs + 1):
        total_loss = 0.0
        correct = 0
        for batch in _epoch_batches(len(encoded), config.batch_size, batch_rng):
            losses = []
            for idx in batch:
                enc = encoded[idx]
                r = forward_document(params, config, enc)
                losses.append(ordinal_loss(r, enc.label, params["transfer.theta"], config.num_classes))
                label = decode_class(r.data, params["transfer.theta"].data, config.num_classes)
                correct += label == enc.label
            batch_loss = nc.scale(_sum_tensors(losses), 1.0 / len(losses))
            nc.backward(batch_loss)
            nc.adam_step(params, lr=config.lr)
            total_loss += batch_loss.item() * len(losses)
        record = {
            "epoch": epoch,
            "loss": total_loss / len(encoded),
            "train_acc": correct / len(encoded),
        }
        history.append(record)
        if log_fn is not None:
            log_fn(record)
        if stop_at_accuracy is not None and record["train_acc"] >= stop_at_accuracy:
            break
    return history


def _sum_tensors(tensors):
    total = tensors[0]
    for t in tensors[1:]:
        total = nc.add(total, t)
    return total


def _embedding_from_file(path, vocab: Vocabulary, config: ModelConfig) -> np.ndarray:
    """Initialize the embedding table from an embedding text file.

    Rows for words missing from the file stay at the random init derived from
    the seed, so runs remain deterministic either way.
    """
    words, matrix = load_embeddings(path)
    if matrix.shape[1] != config.dim:
        raise ValueError(
            f"embedding file dim {matrix.shape[1]} != model dim {config.dim}"
        )
    rng = nc.seeded_rng(config.seed)
    bound = 1.0 / math.sqrt(len(vocab))
    table = rng.uniform(-bound, bound, size=(len(vocab), config.dim))
    for row, word in enumerate(words):
        if word in vocab or row < 2:  # reserved rows map by position
            index = vocab.index(word) if word in vocab else row
            table[index] = matrix[row]
    return table.astype(config.dtype)


def transfer_train(
    pretrained: Model,
    raw_docs,
    num_classes: int,
    epochs: int,
    seed: int = 0,
    lr: float | None = None,
    batch_size: int | None = None,
    log_fn=None,
) -> tuple[Model, list[dict]]:
    """Retrain only the transfer layer on a target corpus.

    Every encoder parameter, the vocabulary, and the normalization statistics
    are reused frozen from ``pretrained``; the transfer layer is re-shaped for
    ``num_classes`` and re-initialized from ``seed``.  Because nothing
    upstream changes, the frozen article embeddings are computed once and the
    transfer layer is trained on the cached vectors.
    """
    base_config = pretrained.config
    config = replace(base_config, num_classes=num_classes, seed=seed)
    config.validate()
    raw_docs = list(raw_docs)
    for doc in raw_docs:
        if doc.label is None or not 1 <= doc.label <= num_classes:
            raise ValueError(f"document {doc.id!r} has no valid label in [1, {num_classes}]")

    frozen = ParameterStore()
    for name, p in pretrained.params.items():
        if name not in _TRANSFER_PARAMS:
            t = Tensor(p.data)  # same array, no copy: stays byte-identical
            t.requires_grad = False
            frozen._params[name] = t
    dtype = np.dtype(config.dtype)
    rng = nc.seeded_rng(seed)
    trainable = ParameterStore()
    _init_transfer(trainable, rng, config, dtype)

    model = Model(config, _merge_stores(frozen, trainable), pretrained.vocab,
                  pretrained.lexicons, pretrained.u_stats, pretrained.v_stats)
    encoded = [model.encoder.encode(d) for d in raw_docs]
    cached = []
    for enc in encoded:
        y = document_embedding(frozen, config, enc)
        combined = np.concatenate([y.data.reshape(-1), enc.doc_feats]).astype(dtype)
        cached.append((combined, enc.label))

    batch_rng = nc.seeded_rng(seed + 1)
    effective_lr = config.lr if lr is None else lr
    effective_batch = config.batch_size if batch_size is None else batch_size
    history = []
    for epoch in range(1, epochs + 1):
        total_loss = 0.0
        correct = 0
        for batch in _epoch_batches(len(cached), effective_batch, batch_rng):
            losses = []
            for idx in batch:
                combined, label = cached[idx]
                r = nc.matmul(Tensor(combined[None, :]), trainable["transfer.w"])
                if config.softmax_transfer:
                    r = nc.softmax(r, axis=-1)
                losses.append(ordinal_loss(r, label, trainable["transfer.theta"], num_classes))
                correct += decode_class(r.data, trainable["transfer.theta"].data, num_classes) == label
            batch_loss = nc.scale(_sum_tensors(losses), 1.0 / len(losses))
            nc.backward(batch_loss)
            nc.adam_step(trainable, lr=effective_lr)
            total_loss += batch_loss.item() * len(losses)
        record = {"epoch": epoch, "loss": total_loss / len(cached), "train_acc": correct / len(cached)}
        history.append(record)
        if log_fn is not None:
            log_fn(record)
    return model, history


def _merge_stores(frozen: ParameterStore, trainable: ParameterStore) -> ParameterStore:
    merged = ParameterStore()
    for name, p in frozen.items():
        merged._params[name] = p
    for name, p in trainable.items():
        merged._params[name] = p
    return merged
