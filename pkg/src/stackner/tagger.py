"""Stacked-embedding BiLSTM-CRF sequence tagger.

Architecture: stacked per-token embeddings -> optional reprojection
(same size, flag-controlled) -> optional dropout -> one or more BiLSTM
layers -> affine emission map -> linear-chain CRF. Training is plain
SGD over shuffled mini-batches with gradient clipping and a
plateau-annealing learning-rate schedule driven by entity-level dev F1.
Embedding components are frozen features; trainable parameters are the
projection, the LSTMs, the emission map and the transition matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import crf, nnet
from .container import expect_kind, load_container, save_container
from .corpus import TaggedSentence, decode_bio, tokenize_spans
from .embeddings.stack import EmbeddingStack
from .errors import DimensionMismatch, EmptyDataset, InvalidTagIndex, ModelMissingComponent
from .evaluation import evaluate
from .sentences import rule_split


def tag_inventory(sentences) -> list[str]:
    """Sorted BIO tag set observed in the data, always including "O"."""
    tags = {"O"}
    for sent in sentences:
        tags.update(sent.tags)
    return sorted(tags)


class TaggerParams:
    """All trainable tensors of the tagger."""

    def __init__(self, input_dim: int, tags: list[str], hidden: int = 256,
                 layers: int = 1, dropout: float = 0.0,
                 use_projection: bool = True, seed: int = 0):
        self.input_dim = input_dim
        self.tags = list(tags)
        self.tag_index = {t: i for i, t in enumerate(self.tags)}
        self.hidden = hidden
        self.n_layers = layers
        self.dropout = dropout
        self.use_projection = use_projection
        rng = np.random.default_rng(seed)
        self.proj = nnet.Linear(input_dim, input_dim, rng) if use_projection else None
        self.fwd: list[nnet.LSTMLayer] = []
        self.bwd: list[nnet.LSTMLayer] = []
        in_dim = input_dim
        for _ in range(layers):
            self.fwd.append(nnet.LSTMLayer(in_dim, hidden, rng))
            self.bwd.append(nnet.LSTMLayer(in_dim, hidden, rng))
            in_dim = 2 * hidden
        self.emit = nnet.Linear(2 * hidden, len(self.tags), rng)
        self.transitions = crf.make_transitions(len(self.tags))

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        if self.proj is not None:
            out["proj.w"] = self.proj.w
            out["proj.b"] = self.proj.b
        for i in range(self.n_layers):
            for name, arr in self.fwd[i].params().items():
                out[f"l{i}f.{name}"] = arr
            for name, arr in self.bwd[i].params().items():
                out[f"l{i}b.{name}"] = arr
        out["emit.w"] = self.emit.w
        out["emit.b"] = self.emit.b
        out["trans"] = self.transitions
        return out

    def state_copy(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.params()
        for k, v in state.items():
            params[k][...] = v


def encode(X: np.ndarray, params: TaggerParams, train: bool = False,
           rng: np.random.Generator | None = None):
    """Emission scores (T, L) for a stacked-embedding matrix X.

    Inference mode (train=False) is deterministic; dropout is applied
    only in training mode. Returns (emissions, cache).
    """
    cache: dict = {}
    Y = X
    if params.proj is not None:
        Y, cache["proj"] = params.proj.forward(Y)
    if train and params.dropout > 0.0:
        mask = nnet.dropout_mask(Y.shape, params.dropout, rng)
        Y = Y * mask
        cache["drop"] = mask
    layer_caches = []
    for i in range(params.n_layers):
        hf, cf = params.fwd[i].forward(Y)
        hb_rev, cb = params.bwd[i].forward(np.ascontiguousarray(Y[::-1]))
        layer_caches.append((cf, cb))
        Y = np.concatenate([hf, hb_rev[::-1]], axis=1)
    cache["layers"] = layer_caches
    emissions, cache["emit"] = params.emit.forward(Y)
    return emissions, cache


def _encode_backward(demissions: np.ndarray, params: TaggerParams, cache) -> dict:
    dY, emit_grads = params.emit.backward(demissions, cache["emit"])
    grads = {f"emit.{k}": v for k, v in emit_grads.items()}
    h = params.hidden
    for i in range(params.n_layers - 1, -1, -1):
        cf, cb = cache["layers"][i]
        dx_f, gf, _, _ = params.fwd[i].backward(np.ascontiguousarray(dY[:, :h]), cf)
        dx_b_rev, gb, _, _ = params.bwd[i].backward(
            np.ascontiguousarray(dY[:, h:][::-1]), cb)
        dY = dx_f + dx_b_rev[::-1]
        grads.update({f"l{i}f.{k}": v for k, v in gf.items()})
        grads.update({f"l{i}b.{k}": v for k, v in gb.items()})
    if "drop" in cache:
        dY = dY * cache["drop"]
    if params.proj is not None:
        _, proj_grads = params.proj.backward(dY, cache["proj"])
        grads.update({f"proj.{k}": v for k, v in proj_grads.items()})
    return grads


def loss_and_grads(X: np.ndarray, gold_ids, params: TaggerParams,
                   train: bool = False, rng: np.random.Generator | None = None):
    """CRF negative log likelihood and gradients for every parameter
    tensor (reverse-mode through emission map, BiLSTM, projection; the
    CRF part is marginals minus gold indicators)."""
    emissions, cache = encode(X, params, train=train, rng=rng)
    loss, dem, dtrans = crf.crf_nll_grad(emissions, params.transitions, gold_ids)
    grads = _encode_backward(dem, params, cache)
    grads["trans"] = dtrans
    return loss, grads


def predict_tags(X: np.ndarray, params: TaggerParams) -> list[str]:
    if len(X) == 0:
        return []
    emissions, _ = encode(X, params, train=False)
    path, _ = crf.viterbi(emissions, params.transitions)
    return [params.tags[i] for i in path]


@dataclass
class TrainConfig:
    lr: float = 0.1
    batch: int = 32
    anneal_factor: float = 0.5
    patience: int = 3
    max_epochs: int = 150
    min_lr: float = 1e-4
    seed: int = 0
    shuffle: bool = True
    clip_norm: float = 5.0

    def __post_init__(self):
        if not 0.0 < self.anneal_factor < 1.0:
            raise ValueError("anneal_factor must lie in (0, 1)")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


class AnnealOnPlateau:
    """Multiply lr by `factor` after more than `patience` consecutive
    epochs without strict improvement; counter resets on improvement and
    on annealing."""

    def __init__(self, lr: float, factor: float = 0.5, patience: int = 3):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.best = float("-inf")
        self.bad_epochs = 0

    def step(self, score: float) -> float:
        """Consume one epoch's dev score; returns the lr for the next epoch."""
        if score > self.best:
            self.best = score
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs > self.patience:
                self.lr *= self.factor
                self.bad_epochs = 0
        return self.lr


def anneal_schedule(scores, lr: float, factor: float, patience: int) -> list[float]:
    """Learning rate after each epoch's update, as a pure function of
    the dev-score sequence."""
    sched = AnnealOnPlateau(lr, factor, patience)
    return [sched.step(s) for s in scores]


@dataclass
class EpochRecord:
    epoch: int
    lr_used: float
    lr_after: float
    train_loss: float
    dev_f1: float
    improved: bool


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float = float("-inf")
    best_state: dict | None = None

    @property
    def lr_trace(self) -> list[float]:
        return [r.lr_after for r in self.records]


def _gold_ids(sent: TaggedSentence, params: TaggerParams) -> np.ndarray:
    try:
        return np.array([params.tag_index[t] for t in sent.tags], dtype=np.int64)
    except KeyError as exc:
        raise InvalidTagIndex(f"tag {exc.args[0]!r} not in the model inventory") from exc


def dev_f1(dev_sents: list[TaggedSentence], stack: EmbeddingStack,
           params: TaggerParams) -> float:
    """Entity-level micro F1 (percent) of the current model on a dev set."""
    gold, pred = [], []
    for i, sent in enumerate(dev_sents):
        doc_id = f"s{i}"
        gold.extend(decode_bio(sent, doc_id))
        tags = predict_tags(stack.embed(sent.tokens), params)
        pred.extend(decode_bio(TaggedSentence(sent.tokens, tags), doc_id))
    return evaluate(gold, pred).f1


def train_tagger(train_sents: list[TaggedSentence], dev_sents: list[TaggedSentence],
                 stack: EmbeddingStack, params: TaggerParams,
                 config: TrainConfig) -> TrainHistory:
    """SGD training with plateau annealing; keeps the best-dev checkpoint.

    Pooled-embedding memories reset at the start of every epoch and
    accumulate through that epoch's training and dev evaluation. After
    training the best checkpoint is loaded back into `params`.
    """
    if not train_sents:
        raise EmptyDataset("empty training split")
    if not dev_sents:
        raise EmptyDataset("empty dev split (needed for scheduling)")
    gold = [_gold_ids(s, params) for s in train_sents]
    rng = np.random.default_rng(config.seed)
    sched = AnnealOnPlateau(config.lr, config.anneal_factor, config.patience)
    history = TrainHistory()
    param_dict = params.params()
    for epoch in range(1, config.max_epochs + 1):
        stack.reset_memories()
        lr_used = sched.lr
        order = rng.permutation(len(train_sents)) if config.shuffle \
            else np.arange(len(train_sents))
        total_loss = 0.0
        for lo in range(0, len(order), config.batch):
            batch = order[lo:lo + config.batch]
            acc: dict[str, np.ndarray] = {}
            for idx in batch:
                X = stack.embed(train_sents[idx].tokens)
                loss, grads = loss_and_grads(X, gold[idx], params, train=True, rng=rng)
                total_loss += loss
                nnet.merge_grads(acc, grads)
            for g in acc.values():
                g /= len(batch)
            nnet.clip_gradients(acc, config.clip_norm)
            nnet.sgd_step(param_dict, acc, lr_used)
        score = dev_f1(dev_sents, stack, params)
        improved = score > sched.best
        lr_after = sched.step(score)
        if improved or history.best_state is None:
            history.best_epoch = epoch
            history.best_f1 = score
            history.best_state = params.state_copy()
        history.records.append(EpochRecord(
            epoch, lr_used, lr_after, total_loss / len(train_sents), score, improved))
        if lr_after < config.min_lr:
            break
    params.load_state(history.best_state)
    return history


class ModelBundle:
    """Embedding stack plus tagger parameters; the unit of inference."""

    def __init__(self, stack: EmbeddingStack, params: TaggerParams):
        if stack.total_dim != params.input_dim:
            raise DimensionMismatch(
                f"stack dim {stack.total_dim} != tagger input dim {params.input_dim}")
        self.stack = stack
        self.params = params

    def tag_tokens(self, tokens) -> TaggedSentence:
        tags = predict_tags(self.stack.embed(tokens), self.params) if tokens else []
        return TaggedSentence(list(tokens), tags)

    def tag_text(self, text: str, doc_id: str = "doc", splitter=None):
        """tokenize -> embed -> encode -> viterbi -> decode.

        Returns (sentences, mentions); mention offsets index `text`, so
        BIO repair happens inside decode and offset fidelity is free.
        """
        spans = (splitter or rule_split)(text)
        sentences = [self.tag_tokens(toks) for toks in tokenize_spans(text, spans)]
        mentions = []
        for sent in sentences:
            mentions.extend(decode_bio(sent, doc_id))
        return sentences, mentions

    def tag_sentences(self, sentences: list[TaggedSentence]) -> list[TaggedSentence]:
        return [self.tag_tokens(s.tokens) for s in sentences]

    def save(self, path) -> None:
        comp_manifests, tensors = self.stack.state()
        p = self.params
        manifest = {
            "kind": "tagger-bundle",
            "components": comp_manifests,
            "labels": p.tags,
            "hyper": {
                "input_dim": p.input_dim,
                "hidden": p.hidden,
                "layers": p.n_layers,
                "dropout": p.dropout,
                "use_projection": p.use_projection,
            },
        }
        tensors.update({f"tagger/{k}": v for k, v in p.params().items()})
        save_container(path, manifest, tensors)

    @classmethod
    def load(cls, path) -> "ModelBundle":
        manifest, tensors = load_container(path)
        expect_kind(manifest, "tagger-bundle", path)
        try:
            stack = EmbeddingStack.from_state(manifest["components"], tensors)
            hyper = manifest["hyper"]
            params = TaggerParams(
                hyper["input_dim"], manifest["labels"], hidden=hyper["hidden"],
                layers=hyper["layers"], dropout=hyper["dropout"],
                use_projection=hyper["use_projection"])
            pdict = params.params()
            for name in pdict:
                pdict[name][...] = tensors[f"tagger/{name}"]
        except KeyError as exc:
            raise ModelMissingComponent(f"{path}: missing {exc.args[0]!r}") from exc
        return cls(stack, params)
