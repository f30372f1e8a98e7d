"""Rule quality: support, confidence, coverage and summary tables."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .data import Dataset
from .extract import Item, Itemset, Rule, with_stats


class ItemIndex:
    """Per-item transaction bitsets for fast itemset counting."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        schema = dataset.schema
        n = dataset.n
        member = np.zeros((schema.total_dim, n), dtype=bool)
        flat = dataset.rows + np.asarray(schema.offsets)
        for f in range(schema.n_features):
            member[flat[:, f], np.arange(n)] = True
        words = -(-n // 64) if n else 1
        padded = np.zeros((schema.total_dim, words * 64), dtype=bool)
        padded[:, :n] = member
        self.bits = np.packbits(padded, axis=1, bitorder="little").view(np.uint64)
        self.bits = np.ascontiguousarray(self.bits)

    def counts(self, itemsets: Sequence[Iterable[Item]]) -> np.ndarray:
        """Number of transactions containing each itemset."""
        schema = self.dataset.schema
        sets = [sorted({schema.flat(f, c) for f, c in s}) for s in itemsets]
        out = np.full(len(sets), self.dataset.n, dtype=np.int64)
        nonempty = [i for i, s in enumerate(sets) if s]
        if nonempty:
            width = max(len(sets[i]) for i in nonempty)
            mat = np.full((len(nonempty), width), -1, dtype=np.int64)
            for r, i in enumerate(nonempty):
                mat[r, :len(sets[i])] = sets[i]
            out[nonempty] = kernels.itemset_counts(self.bits, mat)
        return out

    def contains_any(self, itemsets: Sequence[Iterable[Item]]) -> np.ndarray:
        """Boolean mask of transactions containing at least one of the itemsets."""
        n = self.dataset.n
        hit = np.zeros(n, dtype=bool)
        rows = self.dataset.rows
        for s in itemsets:
            s = list(s)
            m = np.ones(n, dtype=bool)
            for f, c in s:
                m &= rows[:, f] == c
            hit |= m
            if hit.all():
                break
        return hit


def _index(dataset: Dataset, index: ItemIndex | None) -> ItemIndex:
    return index if index is not None else ItemIndex(dataset)


def support(dataset: Dataset, itemset: Iterable[Item], index: ItemIndex | None = None) -> float:
    """Fraction of transactions containing every item (1.0 for the empty set)."""
    itemset = list(itemset)
    if not itemset:
        return 1.0
    if dataset.n == 0:
        return 0.0
    return float(_index(dataset, index).counts([itemset])[0]) / dataset.n


def confidence(dataset: Dataset, rule: Rule, index: ItemIndex | None = None) -> float | None:
    """``support(X u Y) / support(X)``, or None when X never occurs."""
    idx = _index(dataset, index)
    cx, cxy = idx.counts([rule.antecedent, rule.items])
    if cx == 0:
        return None
    return float(cxy) / float(cx)


def annotate(dataset: Dataset, rules: Sequence[Rule], index: ItemIndex | None = None) -> list[Rule]:
    """Attach data-measured support and confidence to every rule."""
    if not rules:
        return []
    idx = _index(dataset, index)
    counts = idx.counts([r.antecedent for r in rules] + [r.items for r in rules])
    cx, cxy = counts[: len(rules)], counts[len(rules):]
    n = dataset.n
    return [
        with_stats(r, float(xy) / n if n else 0.0, float(xy) / float(x) if x else None)
        for r, x, xy in zip(rules, cx.tolist(), cxy.tolist())
    ]


def annotate_itemsets(dataset: Dataset, itemsets: Sequence[Itemset]) -> list[Itemset]:
    if not itemsets:
        return []
    counts = ItemIndex(dataset).counts([s.items for s in itemsets])
    return [
        Itemset(s.items, s.probability, float(c) / dataset.n)
        for s, c in zip(itemsets, counts.tolist())
    ]


def coverage(dataset: Dataset, rules: Sequence[Rule], index: ItemIndex | None = None) -> float:
    """Fraction of transactions matching at least one rule antecedent."""
    if not rules or dataset.n == 0:
        return 0.0
    antecedents = list(dict.fromkeys(r.antecedent for r in rules))
    hit = _index(dataset, index).contains_any(antecedents)
    return float(hit.mean())


@dataclass(frozen=True)
class Summary:
    rules: int
    seconds: float | None
    coverage: float
    support: float | None
    confidence: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def summarize(dataset: Dataset, rules: Sequence[Rule], wall_time: float | None = None) -> Summary:
    """Rule count, mean support/confidence, coverage and elapsed seconds.

    Rules without stats are measured on ``dataset``; undefined confidences are
    left out of the mean.
    """
    if not rules:
        return Summary(0, wall_time, 0.0, None, None)
    index = ItemIndex(dataset)
    if any(r.support is None for r in rules):
        rules = annotate(dataset, rules, index)
    sup = [r.support for r in rules]
    conf = [r.confidence for r in rules if r.confidence is not None]
    return Summary(
        len(rules),
        wall_time,
        coverage(dataset, rules, index),
        float(np.mean(sup)),
        float(np.mean(conf)) if conf else None,
    )


def format_table(rows: Sequence[tuple[str, Summary]]) -> str:
    """Aligned text table with the columns Algorithm, #Rules, Time (s), Cov., Support, Conf."""
    def num(x, digits=2):
        return "-" if x is None else f"{x:.{digits}f}"

    header = ("Algorithm", "#Rules", "Time (s)", "Cov.", "Support", "Conf.")
    body = [
        (name, str(s.rules), num(s.seconds, 3), num(s.coverage), num(s.support), num(s.confidence))
        for name, s in rows
    ]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = [
        "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
        for r in [header, *body]
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
