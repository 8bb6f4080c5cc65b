"""Linear-chain CRF: exact NLL via the log-space forward algorithm,
gradients via forward-backward marginals, Viterbi decoding.

Conventions: for L labels the transition matrix has shape (L+2, L+2)
with START = L and STOP = L+1; transitions[i, j] scores moving from i
to j. Entries into START and out of STOP are pinned at NEG (a large
finite negative constant so log-space arithmetic stays well-behaved)
and their gradients are masked.
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import InvalidTagIndex

NEG = -1e4


def make_transitions(n_labels: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Fresh (L+2, L+2) transition matrix with boundary constraints set."""
    size = n_labels + 2
    trans = np.zeros((size, size)) if rng is None else rng.uniform(-0.1, 0.1, (size, size))
    apply_constraints(trans)
    return trans


def apply_constraints(transitions: np.ndarray) -> np.ndarray:
    L = transitions.shape[0] - 2
    transitions[:, L] = NEG      # nothing enters START
    transitions[L + 1, :] = NEG  # nothing leaves STOP
    return transitions


def _check(emissions: np.ndarray, transitions: np.ndarray, gold=None):
    T, L = emissions.shape
    if transitions.shape != (L + 2, L + 2):
        raise ValueError(
            f"transitions shape {transitions.shape} does not match {L} labels")
    if gold is not None:
        gold = np.asarray(gold, dtype=np.int64)
        if gold.shape != (T,):
            raise InvalidTagIndex(f"gold path length {gold.shape} != {T}")
        if len(gold) and (gold.min() < 0 or gold.max() >= L):
            raise InvalidTagIndex(f"gold tags outside [0, {L})")
    return T, L, gold


def path_score(emissions: np.ndarray, transitions: np.ndarray, path) -> float:
    """score(y) = trans(START, y1) + sum_t emit(t, yt) + sum_t trans(y_{t-1}, yt)
    + trans(yT, STOP)."""
    T, L, path = _check(emissions, transitions, path)
    start, stop = L, L + 1
    score = transitions[start, path[0]] + emissions[0, path[0]]
    for t in range(1, T):
        score += transitions[path[t - 1], path[t]] + emissions[t, path[t]]
    return float(score + transitions[path[T - 1], stop])


def log_partition(emissions: np.ndarray, transitions: np.ndarray) -> float:
    T, L, _ = _check(emissions, transitions)
    logz, _ = K.crf_forward(np.ascontiguousarray(emissions),
                            np.ascontiguousarray(transitions), L, L + 1)
    return logz


def crf_nll(emissions: np.ndarray, transitions: np.ndarray, gold) -> float:
    """Negative log likelihood logZ - score(gold); always >= 0."""
    return log_partition(emissions, transitions) - path_score(emissions, transitions, gold)


def crf_nll_grad(emissions: np.ndarray, transitions: np.ndarray, gold):
    """NLL plus its gradients: marginals minus gold indicators.

    Returns (loss, d_emissions, d_transitions); the d_transitions rows
    into START and out of STOP are structurally masked to zero.
    """
    T, L, gold = _check(emissions, transitions, gold)
    start, stop = L, L + 1
    em = np.ascontiguousarray(emissions)
    tr = np.ascontiguousarray(transitions)
    logz, alpha = K.crf_forward(em, tr, start, stop)
    dem, dtrans = K.crf_backward(em, tr, start, stop, alpha, logz)
    loss = logz - path_score(emissions, transitions, gold)
    rows = np.arange(T)
    dem[rows, gold] -= 1.0
    dtrans[start, gold[0]] -= 1.0
    dtrans[gold[T - 1], stop] -= 1.0
    for t in range(1, T):
        dtrans[gold[t - 1], gold[t]] -= 1.0
    dtrans[:, start] = 0.0
    dtrans[stop, :] = 0.0
    return loss, dem, dtrans


def viterbi(emissions: np.ndarray, transitions: np.ndarray):
    """Best path and its score; backpointer ties pick the lower index."""
    T, L, _ = _check(emissions, transitions)
    path, score = K.crf_viterbi(np.ascontiguousarray(emissions),
                                np.ascontiguousarray(transitions), L, L + 1)
    return path, score
