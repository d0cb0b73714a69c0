"""Token embeddings (skip-gram with negative sampling) and app fingerprints.

One embedding table is trained over all category token sequences of the
training corpus; an app's fingerprint concatenates six per-category blocks,
each the tf-idf-weighted mean of the embeddings of that category's selected
n-grams. Training is single-threaded and fully deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .stylometry import CATEGORIES, StyleProfile, transform_tfidf

MAX_FINGERPRINT_COLUMNS = 1000


class EmbeddingError(Exception):
    pass


class EmptyVocabulary(EmbeddingError):
    """No token reaches the minimum corpus frequency."""


class DimensionOverflow(EmbeddingError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    vocabulary: dict  # token -> row index
    vectors: np.ndarray  # (|V|, d) float64, input-side embeddings
    hyperparameters: dict
    epoch_losses: tuple[float, ...] = ()
    context_vectors: np.ndarray | None = None  # output side, for diagnostics

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, token: str):
        idx = self.vocabulary.get(token)
        return None if idx is None else self.vectors[idx]


@dataclass(frozen=True)
class FingerprintVector:
    values: np.ndarray  # concatenated category blocks, length <= 1000
    layout: tuple  # of (category, offset); every block spans table dim


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sgns_loss_and_grad(center: np.ndarray, context: np.ndarray, negatives: np.ndarray):
    """Loss and analytic gradients for one (center, context, negatives) triple.

    loss = -log sigmoid(c.o) - sum_k log sigmoid(-c.n_k). Returns
    (loss, grad_center, grad_context, grad_negatives).
    """
    s_pos = float(_sigmoid(np.array([center @ context]))[0])
    s_neg = _sigmoid(negatives @ center)
    loss = -np.log(s_pos) - float(np.sum(np.log1p(-s_neg)))
    grad_center = (s_pos - 1.0) * context + s_neg @ negatives
    grad_context = (s_pos - 1.0) * center
    grad_negatives = s_neg[:, None] * center[None, :]
    return loss, grad_center, grad_context, grad_negatives


@numba.njit(cache=True)
def _sgd_pass(w_in, w_out, centers, contexts, negatives, lr_start, lr_step):
    """One sequential SGD pass over (center, context, negatives) triples."""
    n_pairs = centers.shape[0]
    dim = w_in.shape[1]
    n_neg = negatives.shape[1]
    grad = np.empty(dim)
    total_loss = 0.0
    for i in range(n_pairs):
        lr = lr_start - lr_step * i
        if lr < lr_start * 1e-4:
            lr = lr_start * 1e-4
        c = centers[i]
        for j in range(dim):
            grad[j] = 0.0

        o = contexts[i]
        dot = 0.0
        for j in range(dim):
            dot += w_in[c, j] * w_out[o, j]
        s = 1.0 / (1.0 + math.exp(-dot))
        total_loss -= math.log(max(s, 1e-12))
        g = s - 1.0
        for j in range(dim):
            grad[j] += g * w_out[o, j]
            w_out[o, j] -= lr * g * w_in[c, j]

        for k in range(n_neg):
            t = negatives[i, k]
            dot = 0.0
            for j in range(dim):
                dot += w_in[c, j] * w_out[t, j]
            s = 1.0 / (1.0 + math.exp(-dot))
            total_loss -= math.log(max(1.0 - s, 1e-12))
            for j in range(dim):
                grad[j] += s * w_out[t, j]
                w_out[t, j] -= lr * s * w_in[c, j]

        for j in range(dim):
            w_in[c, j] -= lr * grad[j]
    return total_loss


def train_embedding(
    corpus,
    window: int = 3,
    min_count: int = 10,
    dim: int = 100,
    negatives: int = 5,
    epochs: int = 5,
    learning_rate: float = 0.025,
    seed: int = 0,
) -> EmbeddingTable:
    """Train skip-gram embeddings over token sequences.

    Tokens below ``min_count`` are dropped before windowing; the context
    window spans ``window`` tokens each side; negatives follow the
    unigram^0.75 noise distribution. Plain per-pair SGD with a linearly
    decaying learning rate, single-threaded and deterministic per seed.
    """
    counts: dict[str, int] = {}
    for sentence in corpus:
        for token in sentence:
            counts[token] = counts.get(token, 0) + 1
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    if not kept:
        raise EmptyVocabulary(f"no token occurs >= {min_count} times")
    vocabulary = {t: i for i, t in enumerate(kept)}

    noise = np.array([counts[t] for t in kept], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    centers: list[int] = []
    contexts: list[int] = []
    for sentence in corpus:
        ids = [vocabulary[t] for t in sentence if t in vocabulary]
        for i, c in enumerate(ids):
            lo = max(0, i - window)
            hi = min(len(ids), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(c)
                    contexts.append(ids[j])
    centers_arr = np.array(centers, dtype=np.int64)
    contexts_arr = np.array(contexts, dtype=np.int64)
    n_pairs = len(centers_arr)

    rng = np.random.default_rng(seed)
    n_vocab = len(kept)
    w_in = (rng.random((n_vocab, dim)) - 0.5) / dim
    w_out = np.zeros((n_vocab, dim))

    total_steps = max(1, epochs * n_pairs)
    lr_step = learning_rate / total_steps
    epoch_losses: list[float] = []
    for epoch in range(epochs):
        if n_pairs == 0:
            epoch_losses.append(0.0)
            continue
        order = rng.permutation(n_pairs)
        neg_draws = np.searchsorted(noise_cdf, rng.random((n_pairs, negatives))).astype(np.int64)
        lr_start = learning_rate * (1.0 - epoch * n_pairs / total_steps)
        loss = _sgd_pass(
            w_in,
            w_out,
            centers_arr[order],
            contexts_arr[order],
            neg_draws,
            lr_start,
            lr_step,
        )
        epoch_losses.append(loss / n_pairs)

    return EmbeddingTable(
        vocabulary=vocabulary,
        vectors=w_in,
        context_vectors=w_out,
        hyperparameters={
            "window": window,
            "min_count": min_count,
            "dim": dim,
            "negatives": negatives,
            "epochs": epochs,
            "learning_rate": learning_rate,
            "seed": seed,
        },
        epoch_losses=tuple(epoch_losses),
    )


def fingerprint(profile: StyleProfile, vocabs: dict, table: EmbeddingTable) -> FingerprintVector:
    """Dense app fingerprint: concatenated per-category weighted mean embeddings.

    Per category, each selected n-gram present in the profile contributes its
    mean token vector weighted by its tf-idf weight; out-of-vocabulary tokens
    are skipped and an n-gram with no in-vocabulary token contributes nothing.
    """
    dim = table.dim
    if dim * len(CATEGORIES) > MAX_FINGERPRINT_COLUMNS:
        raise DimensionOverflow(f"{len(CATEGORIES)} blocks of {dim} exceed {MAX_FINGERPRINT_COLUMNS}")

    blocks = []
    layout = []
    offset = 0
    for category in CATEGORIES:
        block = np.zeros(dim)
        vocab = vocabs.get(category)
        if vocab is not None:
            weights = transform_tfidf(vocab, profile)
            acc = np.zeros(dim)
            total = 0.0
            for gram, weight in weights.items():
                rows = [table.vocabulary[t] for t in gram.split() if t in table.vocabulary]
                if not rows:
                    continue
                acc += weight * table.vectors[rows].mean(axis=0)
                total += weight
            if total > 0:
                block = acc / total
        blocks.append(block)
        layout.append((category, offset))
        offset += dim
    return FingerprintVector(values=np.concatenate(blocks), layout=tuple(layout))
