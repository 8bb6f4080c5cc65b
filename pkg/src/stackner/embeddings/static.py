"""Token-level embedding trainers.

Three variants share one negative-sampling SGD kernel:

* plain skip-gram — one shared output matrix;
* structured skip-gram — one output matrix per signed relative context
  position, so word order is captured;
* subword skip-gram — the input vector of a word is the sum of its
  character n-gram vectors (n = 3..6, boundary-wrapped) plus its
  whole-word vector, which also composes vectors for unseen words.

Training is single-threaded and deterministic per seed: every random
draw (subsampling, window shrinking, noise words) comes from one
generator in this module, never from the kernel backend.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .. import _kernels as K
from ..container import expect_kind, load_container, save_container
from ..errors import EmptyVocab, MalformedEmbeddingFile, OovAllUnknownWarning

NGRAM_MIN = 3
NGRAM_MAX = 6
BOUNDARY_LEFT = "<"
BOUNDARY_RIGHT = ">"

# conventions inherited from the original tools, recorded in metadata
ADOPTED_DEFAULTS = {
    "noise_power": 0.75,
    "dynamic_window": True,
    "init": "uniform(-0.5, 0.5)/dim inputs, zero outputs",
    "lr_decay": "linear over retained tokens to 1e-4 * lr",
}


@dataclass
class Vocab:
    words: list[str]
    index: dict[str, int]
    counts: np.ndarray
    total_tokens: int

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


def build_vocab(tokens: Iterable[str], min_count: int = 1) -> Vocab:
    """Count tokens and retain those with frequency >= min_count.

    Ids are assigned by descending count, ties broken lexicographically,
    so the assignment is deterministic.
    """
    counts: dict[str, int] = {}
    total = 0
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
        total += 1
    kept = sorted((w for w, c in counts.items() if c >= min_count),
                  key=lambda w: (-counts[w], w))
    return Vocab(
        words=kept,
        index={w: i for i, w in enumerate(kept)},
        counts=np.array([counts[w] for w in kept], dtype=float),
        total_tokens=total,
    )


@dataclass
class SkipGramConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_count: int = 1
    subsample_t: float = 1e-3
    seed: int = 1

    def __post_init__(self):
        if self.dim <= 0 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("dim > 0, window >= 1, negatives >= 1, epochs >= 1 required")


@dataclass
class SubwordIndex:
    ngrams: list[str]
    index: dict[str, int]
    vectors: np.ndarray
    n_min: int = NGRAM_MIN
    n_max: int = NGRAM_MAX


@dataclass
class EmbeddingTable:
    vocab: Vocab
    dim: int
    vectors: np.ndarray
    variant: str  # plain | structured | subword
    metadata: dict = field(default_factory=dict)
    subwords: SubwordIndex | None = None
    context_matrices: np.ndarray | None = None  # (P, V, dim) output matrices


def extract_ngrams(word: str, n_min: int = NGRAM_MIN, n_max: int = NGRAM_MAX) -> list[str]:
    """All character n-grams of the boundary-wrapped word, n in [n_min, n_max].

    Positions are enumerated, so repeated n-grams appear with their
    multiplicity; the whole wrapped word is included whenever its length
    fits the range. The whole-word unit itself is indexed separately by
    the subword trainer, not returned here.
    """
    wrapped = BOUNDARY_LEFT + word + BOUNDARY_RIGHT
    out = []
    for n in range(n_min, n_max + 1):
        for i in range(len(wrapped) - n + 1):
            out.append(wrapped[i:i + n])
    return out


def _noise_cumulative(vocab: Vocab, power: float = 0.75) -> np.ndarray:
    weights = vocab.counts ** power
    return np.cumsum(weights / weights.sum())


def _keep_probs(vocab: Vocab, t: float) -> np.ndarray:
    """word2vec-style subsampling keep probability, clamped to 1."""
    if t <= 0:
        return np.ones(len(vocab))
    freq = vocab.counts / vocab.counts.sum()
    return np.minimum(1.0, np.sqrt(t / freq) + t / freq)


def _sentence_ids(corpus: list[list[str]], vocab: Vocab) -> list[np.ndarray]:
    out = []
    for sent in corpus:
        ids = [vocab.index[w] for w in sent if w in vocab.index]
        out.append(np.asarray(ids, dtype=np.int64))
    return out


def _position_matrix(offset: int, window: int) -> int:
    """Index of the output matrix for a signed relative offset."""
    return offset + window if offset < 0 else offset + window - 1


def _train(corpus: list[list[str]], config: SkipGramConfig, variant: str,
           vocab: Vocab | None = None):
    if vocab is None:
        vocab = build_vocab(itertools.chain.from_iterable(corpus), config.min_count)
    V = len(vocab)
    if V == 0:
        raise EmptyVocab("no word meets the frequency threshold")
    rng = np.random.default_rng(config.seed)
    dim, window, k_neg = config.dim, config.window, config.negatives

    subword = None
    comp_rows: list[np.ndarray] = []
    if variant == "subword":
        grams = sorted({g for w in vocab.words for g in extract_ngrams(w)})
        gram_index = {g: i for i, g in enumerate(grams)}
        n_in = V + len(grams)
        for wid, w in enumerate(vocab.words):
            rows = [wid] + [V + gram_index[g] for g in extract_ngrams(w)]
            comp_rows.append(np.asarray(rows, dtype=np.int64))
    else:
        n_in = V
        comp_rows = [np.asarray([wid], dtype=np.int64) for wid in range(V)]

    n_matrices = 2 * window if variant == "structured" else 1
    syn0 = (rng.random((n_in, dim)) - 0.5) / dim
    syn1 = np.zeros((n_matrices * V, dim))

    noise_cum = _noise_cumulative(vocab)
    keep = _keep_probs(vocab, config.subsample_t)
    sentences = _sentence_ids(corpus, vocab)
    span = config.epochs * max(1, sum(len(s) for s in sentences))

    processed = 0
    epoch_losses = []
    for _ in range(config.epochs):
        loss_sum = 0.0
        pair_count = 0
        for ids in sentences:
            if len(ids) == 0:
                continue
            kept = ids[rng.random(len(ids)) < keep[ids]]
            n = len(kept)
            processed += len(ids)
            if n < 2:
                continue
            shrink = rng.integers(1, window + 1, size=n)
            centers, contexts, offsets = [], [], []
            for c in range(n):
                b = shrink[c]
                for off in range(-b, b + 1):
                    j = c + off
                    if off == 0 or j < 0 or j >= n:
                        continue
                    centers.append(kept[c])
                    contexts.append(kept[j])
                    offsets.append(off)
            if not centers:
                continue
            n_pairs = len(centers)
            centers = np.asarray(centers, dtype=np.int64)
            contexts = np.asarray(contexts, dtype=np.int64)
            negs = np.searchsorted(noise_cum, rng.random((n_pairs, k_neg))).astype(np.int64)
            negs[negs == contexts[:, None]] = -1  # skip accidental positives

            if variant == "structured":
                bases = np.asarray(
                    [_position_matrix(o, window) * V for o in offsets], dtype=np.int64)
            else:
                bases = np.zeros(n_pairs, dtype=np.int64)
            tgt_rows = np.concatenate(
                [(bases + contexts)[:, None],
                 np.where(negs >= 0, bases[:, None] + negs, -1)], axis=1)
            tgt_labels = np.zeros((n_pairs, 1 + k_neg))
            tgt_labels[:, 0] = 1.0
            tgt_off = np.arange(0, (n_pairs + 1) * (1 + k_neg), 1 + k_neg, dtype=np.int64)

            comp = [comp_rows[w] for w in centers]
            comp_ids = np.concatenate(comp)
            comp_off = np.zeros(n_pairs + 1, dtype=np.int64)
            np.cumsum([len(c) for c in comp], out=comp_off[1:])

            frac = 1.0 - (processed - len(ids)) / span
            lr_now = config.lr * max(1e-4, frac)
            loss_sum += K.sgns_step(
                syn0, syn1,
                np.ascontiguousarray(comp_ids), comp_off,
                np.ascontiguousarray(tgt_rows.reshape(-1)),
                np.ascontiguousarray(tgt_labels.reshape(-1)),
                tgt_off, lr_now)
            pair_count += n_pairs * (1 + k_neg)
        epoch_losses.append(loss_sum / max(1, pair_count))

    metadata = {
        "config": {f: getattr(config, f) for f in (
            "dim", "window", "negatives", "epochs", "lr", "min_count",
            "subsample_t", "seed")},
        "adopted_defaults": dict(ADOPTED_DEFAULTS),
        "epoch_losses": epoch_losses,
    }
    if variant == "subword":
        vectors = np.empty((V, dim))
        for wid in range(V):
            vectors[wid] = syn0[comp_rows[wid]].sum(axis=0)
        subword = SubwordIndex(grams, gram_index, syn0[V:].copy())
        table = EmbeddingTable(vocab, dim, vectors, variant, metadata, subwords=subword)
        return table, subword
    table = EmbeddingTable(vocab, dim, syn0.copy(), variant, metadata,
                           context_matrices=syn1.reshape(n_matrices, V, dim))
    return table


def train_skipgram(corpus: list[list[str]], config: SkipGramConfig,
                   vocab: Vocab | None = None) -> EmbeddingTable:
    """Skip-gram with negative sampling; one shared output matrix."""
    return _train(corpus, config, "plain", vocab)


def train_structured_skipgram(corpus: list[list[str]], config: SkipGramConfig,
                              vocab: Vocab | None = None) -> EmbeddingTable:
    """Skip-gram with one output matrix per signed relative position.

    Positive and negative updates for a context at offset d use output
    matrix d (of 2*window), so left and right neighbourhoods train
    separate predictors; the input matrix is the exported embedding.
    """
    return _train(corpus, config, "structured", vocab)


def train_subword_skipgram(corpus: list[list[str]], config: SkipGramConfig,
                           vocab: Vocab | None = None):
    """Subword n-gram skip-gram; returns (table, subword index)."""
    return _train(corpus, config, "subword", vocab)


def sgns_loss_and_grads(syn0: np.ndarray, syn1: np.ndarray, samples):
    """Batch loss and analytic gradients of the negative-sampling loss.

    ``samples`` is a list of (comp_rows, [(target_row, label), ...]).
    Pure function (no update, no logit clipping); the SGD kernel applies
    the same per-pair formulas sequentially.
    """
    loss = 0.0
    d0 = np.zeros_like(syn0)
    d1 = np.zeros_like(syn1)
    for comp_rows, targets in samples:
        v = syn0[comp_rows].sum(axis=0)
        dv = np.zeros_like(v)
        for row, label in targets:
            u = syn1[row]
            f = 1.0 / (1.0 + np.exp(-(v @ u)))
            loss -= np.log(f) if label == 1 else np.log(1.0 - f)
            dv += (f - label) * u
            d1[row] += (f - label) * v
        for r in comp_rows:
            d0[r] += dv
    return loss, d0, d1


def structured_logit(table: EmbeddingTable, center: str, context: str, offset: int) -> float:
    """Position-specific score of (context | center) on a trained table."""
    if table.context_matrices is None:
        raise ValueError("table has no retained output matrices")
    window = table.metadata["config"]["window"]
    m = table.context_matrices[_position_matrix(offset, window)]
    v = table.vectors[table.vocab.index[center]]
    return float(v @ m[table.vocab.index[context]])


def lookup(table: EmbeddingTable, word: str) -> np.ndarray:
    """Vector for a word; OOV falls back per variant.

    Subword tables compose out-of-vocabulary vectors from known n-grams
    (warning + zero vector when none is known); plain and structured
    tables return a zero vector.
    """
    wid = table.vocab.index.get(word)
    if wid is not None:
        return table.vectors[wid].copy()
    if table.subwords is not None:
        sw = table.subwords
        rows = [sw.index[g] for g in extract_ngrams(word, sw.n_min, sw.n_max)
                if g in sw.index]
        if not rows:
            warnings.warn(f"no known n-gram in {word!r}; returning a zero vector",
                          OovAllUnknownWarning)
            return np.zeros(table.dim)
        return table.subwords.vectors[rows].sum(axis=0)
    return np.zeros(table.dim)


# word2vec text format

def format_word2vec(table: EmbeddingTable) -> str:
    lines = [f"{len(table.vocab)} {table.dim}"]
    for wid, word in enumerate(table.vocab.words):
        vec = " ".join(f"{v:.6f}" for v in table.vectors[wid])
        lines.append(f"{word} {vec}")
    return "\n".join(lines) + "\n"


def save_word2vec_text(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_word2vec(table))


def parse_word2vec(content: str, variant: str = "plain") -> EmbeddingTable:
    lines = content.splitlines()
    if not lines:
        raise MalformedEmbeddingFile("empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise MalformedEmbeddingFile(f"bad header: {lines[0]!r}")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError as exc:
        raise MalformedEmbeddingFile(f"bad header: {lines[0]!r}") from exc
    words, rows = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        cols = line.rstrip().split(" ")
        if len(cols) != dim + 1:
            raise MalformedEmbeddingFile(
                f"row for {cols[0]!r} has {len(cols) - 1} components, header says {dim}")
        words.append(cols[0])
        try:
            rows.append([float(x) for x in cols[1:]])
        except ValueError as exc:
            raise MalformedEmbeddingFile(f"non-numeric component for {cols[0]!r}") from exc
    if len(words) != count:
        raise MalformedEmbeddingFile(f"header promises {count} rows, found {len(words)}")
    vocab = Vocab(words, {w: i for i, w in enumerate(words)},
                  np.ones(len(words)), len(words))
    return EmbeddingTable(vocab, dim, np.asarray(rows, dtype=float), variant)


def load_word2vec_text(path, variant: str = "plain") -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        return parse_word2vec(fh.read(), variant)


def save_ngram_index(index: SubwordIndex, path) -> None:
    """Sidecar "ngram<TAB>id" index file."""
    with open(path, "w", encoding="utf-8") as fh:
        for gram, i in sorted(index.index.items(), key=lambda kv: kv[1]):
            fh.write(f"{gram}\t{i}\n")


# container serialization (full state, including subword matrices)

def table_state(table: EmbeddingTable) -> tuple[dict, dict[str, np.ndarray]]:
    manifest = {
        "kind": "static-embeddings",
        "variant": table.variant,
        "dim": table.dim,
        "words": table.vocab.words,
        "counts": [float(c) for c in table.vocab.counts],
        "total_tokens": table.vocab.total_tokens,
        "metadata": table.metadata,
    }
    tensors = {"vectors": table.vectors}
    if table.subwords is not None:
        manifest["ngrams"] = table.subwords.ngrams
        tensors["ngram_vectors"] = table.subwords.vectors
    return manifest, tensors


def table_from_state(manifest: dict, tensors: dict[str, np.ndarray]) -> EmbeddingTable:
    words = manifest["words"]
    vocab = Vocab(words, {w: i for i, w in enumerate(words)},
                  np.asarray(manifest["counts"], dtype=float),
                  manifest["total_tokens"])
    subwords = None
    if "ngrams" in manifest:
        grams = manifest["ngrams"]
        subwords = SubwordIndex(grams, {g: i for i, g in enumerate(grams)},
                                tensors["ngram_vectors"])
    return EmbeddingTable(vocab, manifest["dim"], tensors["vectors"],
                          manifest["variant"], manifest["metadata"], subwords=subwords)


def save_table(table: EmbeddingTable, path) -> None:
    manifest, tensors = table_state(table)
    save_container(path, manifest, tensors)


def load_table(path) -> EmbeddingTable:
    manifest, tensors = load_container(path)
    expect_kind(manifest, "static-embeddings", path)
    return table_from_state(manifest, tensors)
