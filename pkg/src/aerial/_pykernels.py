"""Numpy implementations of the numeric kernels (fallback when the extension is absent)."""

import numpy as np


def block_softmax(logits, bounds):
    logits = np.asarray(logits, dtype=np.float64)
    starts = bounds[:-1]
    sizes = np.diff(bounds)
    mx = np.maximum.reduceat(logits, starts, axis=1)
    e = np.exp(logits - np.repeat(mx, sizes, axis=1))
    s = np.add.reduceat(e, starts, axis=1)
    return e / np.repeat(s, sizes, axis=1)


def block_bce(probs, target, bounds, eps):
    """Per-sample aggregated BCE and its gradient w.r.t. the softmax logits."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    starts = bounds[:-1]
    sizes = np.diff(bounds)
    inv_c = np.repeat(1.0 / sizes, sizes)
    q = np.clip(probs, eps, 1.0 - eps)
    terms = -(target * np.log(q) + (1.0 - target) * np.log1p(-q))
    loss = (terms * inv_c).sum(axis=1)
    inside = (probs >= eps) & (probs <= 1.0 - eps)
    g = np.where(inside, inv_c * (-target / q + (1.0 - target) / (1.0 - q)), 0.0)
    pg = np.add.reduceat(probs * g, starts, axis=1)
    grad = probs * (g - np.repeat(pg, sizes, axis=1))
    return loss, grad


def itemset_counts(bits, itemsets):
    """Transactions containing each itemset.

    ``itemsets`` rows are padded with -1 and must hold at least one item.
    """
    bits = np.asarray(bits, dtype=np.uint64)
    itemsets = np.asarray(itemsets, dtype=np.int64)
    n_sets, width = itemsets.shape
    acc = np.full((n_sets, bits.shape[1]), np.iinfo(np.uint64).max, dtype=np.uint64)
    for j in range(width):
        col = itemsets[:, j]
        used = col >= 0
        acc[used] &= bits[col[used]]
    return np.bitwise_count(acc).sum(axis=1, dtype=np.int64)
