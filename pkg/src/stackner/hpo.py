"""Grid and random hyperparameter search over the tagger's knobs.

Grid mode enumerates the cartesian product of the discrete choice sets
(a non-degenerate dropout interval contributes its two endpoints);
random mode samples choices uniformly and dropout uniformly from its
interval. Every trial trains with a reduced epoch budget and is scored
by entity-level dev F1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .corpus import TaggedSentence
from .embeddings.stack import EmbeddingStack
from .errors import EmptySpace
from .tagger import TaggerParams, TrainConfig, tag_inventory, train_tagger


@dataclass
class SearchSpace:
    lr_choices: tuple = (0.1,)
    batch_choices: tuple = (32,)
    hidden_choices: tuple = (256,)
    layer_choices: tuple = (1,)
    dropout_range: tuple = (0.0, 0.0)
    mode: str = "grid"
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("lr_choices", "batch_choices", "hidden_choices", "layer_choices"):
            if not tuple(getattr(self, name)):
                raise EmptySpace(f"{name} is empty")
        lo, hi = self.dropout_range
        if not 0.0 <= lo <= hi:
            raise EmptySpace(f"bad dropout range {self.dropout_range}")
        if self.mode not in ("grid", "random"):
            raise ValueError(f"mode must be grid or random, got {self.mode!r}")

    def grid_configs(self) -> list[dict]:
        lo, hi = self.dropout_range
        dropouts = (lo,) if lo == hi else (lo, hi)
        configs = [
            {"lr": lr, "batch": b, "hidden": h, "layers": l, "dropout": d}
            for lr, b, h, l, d in itertools.product(
                self.lr_choices, self.batch_choices, self.hidden_choices,
                self.layer_choices, dropouts)
        ]
        return configs[:self.budget] if self.budget is not None else configs

    def sample_configs(self, budget: int) -> list[dict]:
        rng = np.random.default_rng(self.seed)
        lo, hi = self.dropout_range
        out = []
        for _ in range(budget):
            out.append({
                "lr": float(rng.choice(self.lr_choices)),
                "batch": int(rng.choice(self.batch_choices)),
                "hidden": int(rng.choice(self.hidden_choices)),
                "layers": int(rng.choice(self.layer_choices)),
                "dropout": float(rng.uniform(lo, hi)) if hi > lo else lo,
            })
        return out

    def configs(self) -> list[dict]:
        if self.mode == "grid":
            return self.grid_configs()
        if self.budget is None or self.budget < 1:
            raise EmptySpace("random mode needs budget >= 1")
        return self.sample_configs(self.budget)


@dataclass
class Trial:
    config: dict
    dev_f1: float
    best_epoch: int


@dataclass
class HpoResult:
    best_config: dict
    best_f1: float
    trials: list[Trial] = field(default_factory=list)


def hpo(space: SearchSpace, train_sents: list[TaggedSentence],
        dev_sents: list[TaggedSentence], stack: EmbeddingStack,
        trial_epochs: int = 10, base: TrainConfig | None = None,
        use_projection: bool = True) -> HpoResult:
    """Run every candidate configuration and return the best by dev F1.

    Seeded and reproducible: trial i trains with seed space.seed + i.
    """
    base = base or TrainConfig()
    candidates = space.configs()
    if not candidates:
        raise EmptySpace("search space enumerates to zero candidates")
    tags = tag_inventory(train_sents)
    result = HpoResult(best_config={}, best_f1=float("-inf"))
    for i, cand in enumerate(candidates):
        params = TaggerParams(
            stack.total_dim, tags, hidden=cand["hidden"], layers=cand["layers"],
            dropout=cand["dropout"], use_projection=use_projection,
            seed=space.seed + i)
        config = TrainConfig(
            lr=cand["lr"], batch=cand["batch"], anneal_factor=base.anneal_factor,
            patience=base.patience, max_epochs=trial_epochs, min_lr=base.min_lr,
            seed=space.seed + i, shuffle=base.shuffle, clip_norm=base.clip_norm)
        history = train_tagger(train_sents, dev_sents, stack, params, config)
        result.trials.append(Trial(dict(cand), history.best_f1, history.best_epoch))
        if history.best_f1 > result.best_f1:
            result.best_f1 = history.best_f1
            result.best_config = dict(cand)
    return result
