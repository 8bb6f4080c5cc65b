"""Per-token embedders and the concatenating stack feeding the tagger.

Every embedder maps a list of token surfaces to a (T, dim) matrix. The
stack concatenates component outputs in declared order; the component
order and dims are recorded when a model bundle is serialized.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch
from . import bpe as bpe_mod
from . import charlm as lm_mod
from . import static as static_mod


def _surfaces(tokens) -> list[str]:
    return [t if isinstance(t, str) else t.surface for t in tokens]


class StaticEmbedder:
    """Token lookup into a trained (plain/structured/subword) table."""

    kind = "static"

    def __init__(self, table: static_mod.EmbeddingTable, lowercase: bool = False):
        self.table = table
        self.lowercase = lowercase

    @property
    def dim(self) -> int:
        return self.table.dim

    def embed(self, tokens) -> np.ndarray:
        out = np.empty((len(tokens), self.dim))
        for i, w in enumerate(_surfaces(tokens)):
            out[i] = static_mod.lookup(self.table, w.lower() if self.lowercase else w)
        return out

    def state(self):
        manifest, tensors = static_mod.table_state(self.table)
        return {"kind": self.kind, "dim": self.dim, "lowercase": self.lowercase,
                "table": manifest}, tensors

    @classmethod
    def from_state(cls, manifest, tensors):
        return cls(static_mod.table_from_state(manifest["table"], tensors),
                   manifest["lowercase"])


class BpeEmbedder:
    """Byte-pair piece segmentation pooled into one token vector."""

    kind = "bpe"

    def __init__(self, merges: bpe_mod.MergeTable, pieces: bpe_mod.PieceEmbeddingTable,
                 pooling: str = "mean"):
        self.merges = merges
        self.pieces = pieces
        self.pooling = pooling

    @property
    def dim(self) -> int:
        return self.pieces.dim * (2 if self.pooling == "first_last" else 1)

    def embed(self, tokens) -> np.ndarray:
        out = np.empty((len(tokens), self.dim))
        for i, w in enumerate(_surfaces(tokens)):
            out[i] = bpe_mod.token_vector(w, self.merges, self.pieces, self.pooling)
        return out

    def state(self):
        manifest, tensors = bpe_mod.bpe_state(self.merges, self.pieces)
        return {"kind": self.kind, "dim": self.dim, "pooling": self.pooling,
                "bpe": manifest}, tensors

    @classmethod
    def from_state(cls, manifest, tensors):
        merges, pieces = bpe_mod.bpe_from_state(manifest["bpe"], tensors)
        return cls(merges, pieces, manifest["pooling"])


class CseEmbedder:
    """Contextual string embeddings from a forward/backward char-LM pair.

    LM hidden states are cached per distinct sentence rendering, so
    repeated embedding of the same sentence (every training epoch) costs
    one LM run total.
    """

    kind = "cse"

    def __init__(self, fwd: lm_mod.CharLM, bwd: lm_mod.CharLM):
        self.fwd = fwd
        self.bwd = bwd
        self._cache: dict[tuple[str, ...], np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.fwd.hidden + self.bwd.hidden

    def _base(self, tokens) -> np.ndarray:
        key = tuple(_surfaces(tokens))
        vecs = self._cache.get(key)
        if vecs is None:
            vecs = lm_mod.extract_cse(list(key), self.fwd, self.bwd)
            self._cache[key] = vecs
        return vecs

    def embed(self, tokens) -> np.ndarray:
        return self._base(tokens).copy()

    def state(self):
        fwd_manifest, fwd_tensors = self.fwd.state()
        bwd_manifest, bwd_tensors = self.bwd.state()
        manifest = {"kind": self.kind, "dim": self.dim,
                    "fwd": fwd_manifest, "bwd": bwd_manifest}
        tensors = {f"fwd/{k}": v for k, v in fwd_tensors.items()}
        tensors.update({f"bwd/{k}": v for k, v in bwd_tensors.items()})
        return manifest, tensors

    @classmethod
    def _load_pair(cls, manifest, tensors):
        fwd = lm_mod.CharLM.from_state(
            manifest["fwd"],
            {k[len("fwd/"):]: v for k, v in tensors.items() if k.startswith("fwd/")})
        bwd = lm_mod.CharLM.from_state(
            manifest["bwd"],
            {k[len("bwd/"):]: v for k, v in tensors.items() if k.startswith("bwd/")})
        return fwd, bwd

    @classmethod
    def from_state(cls, manifest, tensors):
        return cls(*cls._load_pair(manifest, tensors))


class PceEmbedder(CseEmbedder):
    """Pooled contextual embeddings: concat(current, pooled history).

    The memory is stateful (reset at the start of every training epoch
    by the trainer, accumulated during evaluation and tagging) and must
    be confined to one worker.
    """

    kind = "pce"

    def __init__(self, fwd: lm_mod.CharLM, bwd: lm_mod.CharLM, pool: str = "mean"):
        super().__init__(fwd, bwd)
        if pool not in lm_mod.POOL_OPS:
            raise ValueError(f"pool must be one of {lm_mod.POOL_OPS}")
        self.pool = pool
        self.memory = lm_mod.PceMemory()

    @property
    def dim(self) -> int:
        return 2 * (self.fwd.hidden + self.bwd.hidden)

    def reset(self) -> None:
        self.memory.reset()

    def embed(self, tokens) -> np.ndarray:
        surfaces = _surfaces(tokens)
        return lm_mod.pce_embed(surfaces, self._base(tokens), self.memory, self.pool)

    def state(self):
        manifest, tensors = super().state()
        manifest["kind"] = self.kind
        manifest["dim"] = self.dim
        manifest["pool"] = self.pool
        return manifest, tensors

    @classmethod
    def from_state(cls, manifest, tensors):
        fwd, bwd = cls._load_pair(manifest, tensors)
        return cls(fwd, bwd, manifest["pool"])


EMBEDDER_KINDS = {
    "static": StaticEmbedder,
    "bpe": BpeEmbedder,
    "cse": CseEmbedder,
    "pce": PceEmbedder,
}


class EmbeddingStack:
    """Ordered embedders whose per-token vectors are concatenated."""

    def __init__(self, components: list):
        self.components = list(components)

    @property
    def total_dim(self) -> int:
        return sum(c.dim for c in self.components)

    def embed(self, tokens) -> np.ndarray:
        """(T, total_dim) matrix; row t concatenates the component
        vectors for token t in declared order."""
        parts = []
        for comp in self.components:
            mat = comp.embed(tokens)
            if mat.shape != (len(tokens), comp.dim):
                raise DimensionMismatch(
                    f"{comp.kind} embedder returned {mat.shape}, "
                    f"expected {(len(tokens), comp.dim)}")
            parts.append(mat)
        if not parts:
            return np.zeros((len(tokens), 0))
        return np.concatenate(parts, axis=1)

    def reset_memories(self) -> None:
        for comp in self.components:
            if hasattr(comp, "reset"):
                comp.reset()

    def state(self):
        manifests = []
        tensors: dict[str, np.ndarray] = {}
        for i, comp in enumerate(self.components):
            m, t = comp.state()
            manifests.append(m)
            tensors.update({f"c{i}/{k}": v for k, v in t.items()})
        return manifests, tensors

    @classmethod
    def from_state(cls, manifests, tensors):
        comps = []
        for i, m in enumerate(manifests):
            prefix = f"c{i}/"
            sub = {k[len(prefix):]: v for k, v in tensors.items() if k.startswith(prefix)}
            comps.append(EMBEDDER_KINDS[m["kind"]].from_state(m, sub))
        return cls(comps)


def stack_embed(tokens, stack: EmbeddingStack) -> np.ndarray:
    return stack.embed(tokens)
