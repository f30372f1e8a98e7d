"""Exhaustive association rule mining (FP-Growth) and a brute-force oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .data import Dataset
from .extract import Item, Rule

# absolute slack for threshold comparisons on count * fraction products
_SLACK = 1e-9
ORACLE_MAX_ITEMS = 24


@dataclass(frozen=True)
class MineParams:
    min_support: float = 0.05
    min_confidence: float = 0.8
    max_antecedents: int = 2

    def __post_init__(self):
        if not 0.0 < self.min_support <= 1.0:
            raise ValueError("min_support must lie in (0, 1]")
        if not 0.0 < self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in (0, 1]")
        if self.max_antecedents < 1:
            raise ValueError("max_antecedents must be >= 1")


def _min_count(min_support: float, n: int) -> int:
    return max(1, math.ceil(min_support * n - _SLACK))


def _confident(count_xy: int, count_x: int, min_confidence: float) -> bool:
    return count_xy >= min_confidence * count_x - _SLACK


# ---------------------------------------------------------------------------
# FP-tree
# ---------------------------------------------------------------------------


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}


class FPTree:
    """Prefix tree over transactions whose items are sorted by descending frequency."""

    def __init__(self, weighted_paths, min_count: int):
        counts: dict[int, int] = {}
        for path, w in weighted_paths:
            for it in path:
                counts[it] = counts.get(it, 0) + w
        self.counts = {it: c for it, c in counts.items() if c >= min_count}
        rank = {it: r for r, it in enumerate(sorted(self.counts, key=lambda i: (-self.counts[i], i)))}
        self.rank = rank
        self.root = _Node(None, None)
        self.header: dict[int, list[_Node]] = {it: [] for it in rank}
        for path, w in weighted_paths:
            kept = sorted((it for it in path if it in rank), key=rank.__getitem__)
            node = self.root
            for it in kept:
                child = node.children.get(it)
                if child is None:
                    child = _Node(it, node)
                    node.children[it] = child
                    self.header[it].append(child)
                child.count += w
                node = child

    def prefix_paths(self, item: int):
        for node in self.header[item]:
            path = []
            p = node.parent
            while p.item is not None:
                path.append(p.item)
                p = p.parent
            if path:
                yield path, node.count


def frequent_itemsets(
    transactions: list[tuple[int, ...]], min_count: int, max_len: int
) -> dict[tuple[int, ...], int]:
    """All itemsets of up to ``max_len`` items occurring in ``min_count`` transactions."""
    out: dict[tuple[int, ...], int] = {}

    def grow(tree: FPTree, suffix: tuple[int, ...]):
        # least frequent first, as in the classic formulation
        for item in sorted(tree.counts, key=tree.rank.__getitem__, reverse=True):
            found = tuple(sorted(suffix + (item,)))
            out[found] = tree.counts[item]
            if len(found) < max_len:
                cond = FPTree(list(tree.prefix_paths(item)), min_count)
                if cond.counts:
                    grow(cond, found)

    grow(FPTree([(t, 1) for t in transactions], min_count), ())
    return out


def _to_rule(dataset: Dataset, ante, cons, count_xy, count_x) -> Rule:
    unflat = dataset.schema.unflat
    return Rule(
        tuple(Item(*unflat(p)) for p in ante),
        Item(*unflat(cons)),
        support=count_xy / dataset.n,
        confidence=count_xy / count_x,
    )


def mine_exhaustive(dataset: Dataset, params: MineParams | None = None) -> list[Rule]:
    """Every rule meeting the support/confidence thresholds with at most
    ``max_antecedents`` antecedent items."""
    params = params or MineParams()
    if dataset.n == 0:
        raise ValueError("cannot mine an empty dataset")
    min_count = _min_count(params.min_support, dataset.n)
    freq = frequent_itemsets(dataset.transactions(), min_count, params.max_antecedents + 1)
    rules = []
    for itemset, count_xy in freq.items():
        if len(itemset) < 2:
            continue
        for cons in itemset:
            ante = tuple(p for p in itemset if p != cons)
            count_x = freq[ante]
            if _confident(count_xy, count_x, params.min_confidence):
                rules.append(_to_rule(dataset, ante, cons, count_xy, count_x))
    rules.sort(key=lambda r: r.key)
    return rules


def brute_force_oracle(dataset: Dataset, params: MineParams | None = None) -> list[Rule]:
    """Reference answer for :func:`mine_exhaustive` by direct enumeration.

    Only for small schemas (at most 24 categories in total).
    """
    params = params or MineParams()
    schema = dataset.schema
    if schema.total_dim > ORACLE_MAX_ITEMS:
        raise ValueError(f"brute force limited to {ORACLE_MAX_ITEMS} categories")
    transactions = [frozenset(t) for t in dataset.transactions()]
    feature_of = schema.item_feature()
    items = range(schema.total_dim)
    rules = []
    for size in range(1, params.max_antecedents + 1):
        for ante in combinations(items, size):
            feats = {int(feature_of[p]) for p in ante}
            if len(feats) != size:
                continue
            ante_set = set(ante)
            count_x = sum(1 for t in transactions if ante_set <= t)
            if count_x == 0:
                continue
            for cons in items:
                if int(feature_of[cons]) in feats:
                    continue
                count_xy = sum(1 for t in transactions if ante_set <= t and cons in t)
                if count_xy >= params.min_support * dataset.n - _SLACK and _confident(
                    count_xy, count_x, params.min_confidence
                ):
                    rules.append(_to_rule(dataset, ante, cons, count_xy, count_x))
    rules.sort(key=lambda r: r.key)
    return rules
