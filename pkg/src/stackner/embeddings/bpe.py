"""Byte-pair-encoding subword pieces.

Merge operations are learned greedily from a word frequency map and
applied in learned order at segmentation time. Words are lowercased and
prefixed with a word-initial marker ("_", on the first piece only)
before being split into characters, so concatenating the pieces and
stripping the marker always reproduces the lowercased word.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..container import expect_kind, load_container, save_container
from ..errors import EmptyCorpus

MARKER = "_"


@dataclass
class MergeTable:
    merges: list[tuple[str, str]]
    target_vocab_size: int


@dataclass
class PieceEmbeddingTable:
    pieces: list[str]
    index: dict[str, int]
    vectors: np.ndarray
    unk_vector: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.unk_vector is None:
            self.unk_vector = np.zeros(self.vectors.shape[1])

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple(MARKER + word.lower())


def _apply_merge(seq: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    a, b = pair
    out = []
    i = 0
    while i < len(seq):
        if i + 1 < len(seq) and seq[i] == a and seq[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return tuple(out)


def learn_bpe(word_freqs: dict[str, int], target_vocab_size: int) -> MergeTable:
    """Learn merges until the symbol inventory reaches the target size.

    Each round merges the most frequent adjacent symbol pair, ties going
    to the lexicographically smallest pair; learning stops early when no
    pair occurs at least twice.
    """
    if not word_freqs:
        raise EmptyCorpus("empty word frequency map")
    seqs: dict[tuple[str, ...], int] = {}
    for word, freq in word_freqs.items():
        sym = _word_symbols(word)
        if sym:
            seqs[sym] = seqs.get(sym, 0) + freq
    inventory = {s for seq in seqs for s in seq}
    merges: list[tuple[str, str]] = []
    while len(inventory) < target_vocab_size:
        counts: dict[tuple[str, str], int] = {}
        for seq, freq in seqs.items():
            for i in range(len(seq) - 1):
                pair = (seq[i], seq[i + 1])
                counts[pair] = counts.get(pair, 0) + freq
        if not counts:
            break
        best = min(counts, key=lambda p: (-counts[p], p))
        if counts[best] < 2:
            break
        merges.append(best)
        inventory.add(best[0] + best[1])
        seqs = {_apply_merge(seq, best): freq for seq, freq in seqs.items()}
    return MergeTable(merges, target_vocab_size)


def segment(word: str, table: MergeTable) -> list[str]:
    """Split a word into pieces by replaying the merges in learned order."""
    if not word:
        return []
    seq = _word_symbols(word)
    symbols = set(seq)
    for a, b in table.merges:
        if a not in symbols or b not in symbols:
            continue
        merged = _apply_merge(seq, (a, b))
        if len(merged) != len(seq):
            seq = merged
            symbols = set(seq)
    return list(seq)


def token_vector(word: str, table: MergeTable, pieces: PieceEmbeddingTable,
                 pooling: str = "mean") -> np.ndarray:
    """Pool piece vectors into one fixed-size token vector.

    "mean" averages the piece vectors; "first_last" concatenates the
    first and last piece vectors (doubling the output size). Unknown
    pieces use the table's unknown vector.
    """
    segs = segment(word, table)
    vecs = [pieces.vectors[pieces.index[p]] if p in pieces.index else pieces.unk_vector
            for p in segs]
    if pooling == "mean":
        if not vecs:
            return np.zeros(pieces.dim)
        return np.mean(vecs, axis=0)
    if pooling == "first_last":
        if not vecs:
            return np.zeros(2 * pieces.dim)
        return np.concatenate([vecs[0], vecs[-1]])
    raise ValueError(f"unknown pooling {pooling!r}")


def format_merges(table: MergeTable) -> str:
    return "".join(f"{a} {b}\n" for a, b in table.merges)


def save_merges(table: MergeTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_merges(table))


def parse_merges(content: str, target_vocab_size: int = 0) -> MergeTable:
    merges = []
    for line in content.splitlines():
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise ValueError(f"bad merges line: {line!r}")
        merges.append((parts[0], parts[1]))
    return MergeTable(merges, target_vocab_size)


def load_merges(path) -> MergeTable:
    with open(path, encoding="utf-8") as fh:
        return parse_merges(fh.read())


def bpe_state(table: MergeTable, pieces: PieceEmbeddingTable):
    manifest = {
        "kind": "bpe",
        "merges": [list(m) for m in table.merges],
        "target_vocab_size": table.target_vocab_size,
        "pieces": pieces.pieces,
    }
    return manifest, {"vectors": pieces.vectors, "unk_vector": pieces.unk_vector}


def bpe_from_state(manifest: dict, tensors) -> tuple[MergeTable, PieceEmbeddingTable]:
    table = MergeTable([tuple(m) for m in manifest["merges"]],
                       manifest["target_vocab_size"])
    plist = manifest["pieces"]
    pieces = PieceEmbeddingTable(plist, {p: i for i, p in enumerate(plist)},
                                 tensors["vectors"], tensors["unk_vector"])
    return table, pieces


def save_bpe_model(table: MergeTable, pieces: PieceEmbeddingTable, path) -> None:
    manifest, tensors = bpe_state(table, pieces)
    save_container(path, manifest, tensors)


def load_bpe_model(path) -> tuple[MergeTable, PieceEmbeddingTable]:
    manifest, tensors = load_container(path)
    expect_kind(manifest, "bpe", path)
    return bpe_from_state(manifest, tensors)
