"""Skip-gram with negative sampling for short token sequences (node walks).

The inner loop is plain per-pair SGD as in word2vec, compiled with numba.
Randomness comes from word2vec's 48-bit linear congruential generator, seeded
from the caller's seed, so training is bit-reproducible.
"""
from __future__ import annotations

from collections import Counter

import numba
import numpy as np

_TABLE_SIZE = 1_000_000
_MASK48 = (1 << 48) - 1


@numba.njit(cache=True)
def _sgns_epochs(corpus, offsets, w_in, w_out, table, window, negatives,
                 epochs, lr0, state):
    n_pairs_per_epoch = 0
    n_seq = offsets.shape[0] - 1
    for s in range(n_seq):
        length = offsets[s + 1] - offsets[s]
        for i in range(length):
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            n_pairs_per_epoch += hi - lo - 1
    total = max(1, n_pairs_per_epoch * epochs)
    lr_min = lr0 * 1e-4
    dim = w_in.shape[1]
    grad = np.zeros(dim)
    done = 0
    rnd = state
    for _ in range(epochs):
        for s in range(n_seq):
            start = offsets[s]
            length = offsets[s + 1] - start
            for i in range(length):
                center = corpus[start + i]
                lo = max(0, i - window)
                hi = min(length, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    context = corpus[start + j]
                    lr = lr0 * (1.0 - done / total)
                    if lr < lr_min:
                        lr = lr_min
                    done += 1
                    for k in range(dim):
                        grad[k] = 0.0
                    for d in range(negatives + 1):
                        if d == 0:
                            target = context
                            label = 1.0
                        else:
                            rnd = (rnd * 25214903917 + 11) & 0xFFFFFFFFFFFF
                            target = table[(rnd >> 16) % table.shape[0]]
                            if target == context:
                                continue
                            label = 0.0
                        f = 0.0
                        for k in range(dim):
                            f += w_in[center, k] * w_out[target, k]
                        if f > 30.0:
                            sig = 1.0
                        elif f < -30.0:
                            sig = 0.0
                        else:
                            sig = 1.0 / (1.0 + np.exp(-f))
                        g = (label - sig) * lr
                        for k in range(dim):
                            grad[k] += g * w_out[target, k]
                            w_out[target, k] += g * w_in[center, k]
                    for k in range(dim):
                        w_in[center, k] += grad[k]
    return rnd


def _unigram_table(counts: np.ndarray, power: float = 0.75) -> np.ndarray:
    p = counts.astype(np.float64) ** power
    p /= p.sum()
    bounds = np.round(np.cumsum(p) * _TABLE_SIZE).astype(np.int64)
    table = np.searchsorted(bounds, np.arange(_TABLE_SIZE), side="right")
    return np.minimum(table, len(counts) - 1).astype(np.int64)


def train_skipgram(sequences, dimension: int, window: int = 10, negatives: int = 5,
                   epochs: int = 5, learning_rate: float = 0.025, min_count: int = 1,
                   seed: int = 0) -> dict[str, np.ndarray]:
    """Return token -> input vector for every token seen at least ``min_count`` times."""
    counts = Counter(tok for seq in sequences for tok in seq)
    vocab = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    if not vocab:
        return {}
    index = {t: i for i, t in enumerate(vocab)}

    encoded = []
    offsets = [0]
    for seq in sequences:
        ids = [index[t] for t in seq if t in index]
        encoded.extend(ids)
        offsets.append(len(encoded))
    corpus = np.asarray(encoded, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(vocab), dimension)) - 0.5) / dimension
    w_out = np.zeros((len(vocab), dimension))
    table = _unigram_table(np.array([counts[t] for t in vocab]))
    state = int(rng.integers(1, 2**47)) & _MASK48

    _sgns_epochs(corpus, offsets, w_in, w_out, table, window, negatives, epochs,
                 float(learning_rate), state)
    return {t: w_in[i].copy() for t, i in index.items()}
