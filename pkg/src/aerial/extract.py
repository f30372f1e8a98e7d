"""Rule and itemset extraction by probing a trained autoencoder.

A probe (test vector) starts with every feature block at the uniform
distribution; the candidate antecedent items are then marked with probability
1 (siblings 0).  If the reconstruction keeps every marked item at or above the
antecedent threshold, any other feature's category reconstructed above the
consequent threshold becomes a rule consequent.

Candidate antecedents of size ``i`` are all ``i``-combinations of the current
item pool that touch ``i`` distinct features.  After the singleton level, items
whose own probe falls below the antecedent threshold leave the pool.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .data import FeatureSchema
from .nn import AutoencoderModel

log = logging.getLogger(__name__)

PROBE_CHUNK = 2048


class Item(NamedTuple):
    feature: int
    category: int


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[Item, ...]
    consequent: Item
    antecedent_prob: float | None = None
    consequent_prob: float | None = None
    support: float | None = None
    confidence: float | None = None

    def __post_init__(self):
        feats = [it.feature for it in self.antecedent]
        if not feats:
            raise ValueError("a rule needs at least one antecedent item")
        if len(set(feats)) != len(feats):
            raise ValueError("antecedent items must be on distinct features")
        if self.consequent.feature in feats:
            raise ValueError("consequent feature appears in the antecedent")

    @property
    def key(self) -> tuple:
        return (self.antecedent, self.consequent)

    @property
    def items(self) -> tuple[Item, ...]:
        return tuple(sorted((*self.antecedent, self.consequent)))


@dataclass(frozen=True)
class Itemset:
    items: tuple[Item, ...]
    probability: float | None = None
    support: float | None = None

    @property
    def key(self) -> tuple:
        return self.items


@dataclass(frozen=True)
class ExtractConfig:
    max_antecedents: int = 2
    tau_a: float = 0.5
    tau_c: float = 0.8
    tau_i: float = 0.5
    antecedent_items: frozenset[Item] | None = None
    consequent_items: frozenset[Item] | None = None
    top_k: int | None = None

    def __post_init__(self):
        if self.max_antecedents < 1:
            raise ValueError("max_antecedents must be >= 1")
        for name in ("tau_a", "tau_c", "tau_i"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.top_k is not None and self.top_k < 0:
            raise ValueError("top_k must be >= 0")
        for name in ("antecedent_items", "consequent_items"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, frozenset(Item(*it) for it in v))


def all_items(schema: FeatureSchema) -> list[Item]:
    return [Item(f, c) for f, (_, cats) in enumerate(schema.features) for c in range(len(cats))]


def uniform_vector(schema: FeatureSchema) -> np.ndarray:
    """Every feature block set to ``1 / c``."""
    return np.repeat(1.0 / schema.sizes, schema.sizes)


def mark(schema: FeatureSchema, v0: np.ndarray, items: Iterable[Item]) -> np.ndarray:
    """Copy of ``v0`` with each item's entry at 1 and its siblings at 0."""
    v = np.array(v0, dtype=np.float64)
    seen = set()
    for f, c in items:
        if f in seen:
            raise ValueError(f"two marked items share feature {schema.names[f]!r}")
        seen.add(f)
        lo = schema.offsets[f]
        v[lo:lo + len(schema.features[f][1])] = 0.0
        v[lo + c] = 1.0
    return v


def _check_items(schema: FeatureSchema, items: Iterable[Item], what: str) -> None:
    for f, c in items:
        if not (0 <= f < schema.n_features and 0 <= c < len(schema.features[f][1])):
            raise ValueError(f"{what} item {(f, c)} is not in the schema")


class Extractor:
    """Runs the probing loop for one model/config pair.

    ``model`` is anything with a ``schema`` attribute that maps a batch of
    test vectors to per-feature probabilities when called; normally an
    :class:`AutoencoderModel`.

    After a call, ``probes`` holds the number of forward passes made and
    ``level_probes`` the count per antecedent size.
    """

    def __init__(self, model: AutoencoderModel, config: ExtractConfig | None = None,
                 workers: int = 1):
        self.model = model
        self.config = config or ExtractConfig()
        self.workers = max(1, int(workers))
        self.schema = model.schema
        self.item_feature = self.schema.item_feature()
        # block_mask[f] selects feature f's columns
        self.block_mask = self.item_feature[None, :] == np.arange(self.schema.n_features)[:, None]
        self.v0 = uniform_vector(self.schema)
        self.probes = 0
        self.level_probes: list[int] = []
        self.elapsed = 0.0

    # -- public entry points -------------------------------------------------

    def rules(self) -> list[Rule]:
        return self._rules(self._flat(all_items(self.schema)), None)

    def constrained(self) -> list[Rule]:
        cfg = self.config
        if cfg.antecedent_items is None and cfg.consequent_items is None:
            raise ValueError("constrained extraction needs antecedent or consequent items")
        ant = cfg.antecedent_items if cfg.antecedent_items is not None else all_items(self.schema)
        con = cfg.consequent_items if cfg.consequent_items is not None else all_items(self.schema)
        if not ant or not con:
            raise ValueError("constraint item sets must be non-empty")
        _check_items(self.schema, ant, "antecedent")
        _check_items(self.schema, con, "consequent")
        return self._rules(self._flat(ant), self._flat(con))

    def itemsets(self) -> list[Itemset]:
        out = []
        for combos, ant_prob, ok, _ in self._levels(
            self._flat(all_items(self.schema)), self.config.tau_i, None
        ):
            for r in np.flatnonzero(ok):
                out.append(Itemset(self._items(combos[r]), float(ant_prob[r])))
        out.sort(key=lambda s: s.key)
        return out

    # -- internals -------------------------------------------------------------

    def _flat(self, items: Iterable[Item]) -> list[int]:
        return sorted({self.schema.flat(f, c) for f, c in items})

    def _items(self, flat: Sequence[int]) -> tuple[Item, ...]:
        return tuple(Item(*self.schema.unflat(int(p))) for p in flat)

    def _rules(self, pool: list[int], consequents: list[int] | None) -> list[Rule]:
        cfg = self.config
        d = self.schema.total_dim
        cons_mask = np.ones(d, dtype=bool)
        if consequents is not None:
            cons_mask[:] = False
            cons_mask[consequents] = True
        out: list[Rule] = []
        for combos, ant_prob, ok, hits in self._levels(pool, cfg.tau_a, cons_mask):
            rows, cols, probs = hits
            for r, c, p in zip(rows.tolist(), cols.tolist(), probs.tolist()):
                out.append(
                    Rule(
                        self._items(combos[r]),
                        Item(*self.schema.unflat(c)),
                        float(ant_prob[r]),
                        p,
                    )
                )
        out.sort(key=lambda r: r.key)
        if cfg.top_k is not None:
            out = top_k_filter(out, cfg.top_k)
        return out

    def _candidates(self, pool: list[int], size: int) -> np.ndarray:
        feats = self.item_feature
        combos = [
            c for c in combinations(pool, size)
            if len({feats[p] for p in c}) == size
        ]
        return np.array(combos, dtype=np.int64).reshape(len(combos), size)

    def _probe_chunk(self, combos: np.ndarray, threshold: float, cons_mask):
        m = combos.shape[0]
        rows = np.arange(m)
        v = np.broadcast_to(self.v0, (m, self.v0.size)).copy()
        marked_feats = self.item_feature[combos]
        for j in range(combos.shape[1]):
            v[self.block_mask[marked_feats[:, j]]] = 0.0
            v[rows, combos[:, j]] = 1.0
        p = np.asarray(self.model(v))
        ant_prob = p[rows[:, None], combos].min(axis=1)
        ok = ~(ant_prob < threshold)
        if cons_mask is None:
            return ant_prob, ok, None
        hit = (p > self.config.tau_c) & cons_mask[None, :] & ok[:, None]
        same_feature = self.block_mask[marked_feats].any(axis=1)
        hit &= ~same_feature
        r, c = np.nonzero(hit)
        return ant_prob, ok, (r, c, p[r, c])

    def _levels(self, pool: list[int], threshold: float, cons_mask):
        """Yield ``(combos, ant_prob, ok, hits)`` for each antecedent size."""
        start = time.perf_counter()
        self.probes = 0
        self.level_probes = []
        try:
            for size in range(1, self.config.max_antecedents + 1):
                combos = self._candidates(pool, size)
                self.level_probes.append(len(combos))
                self.probes += len(combos)
                if not len(combos):
                    break
                chunks = [combos[i:i + PROBE_CHUNK] for i in range(0, len(combos), PROBE_CHUNK)]
                if self.workers > 1 and len(chunks) > 1:
                    with ThreadPoolExecutor(self.workers) as ex:
                        parts = list(ex.map(lambda ch: self._probe_chunk(ch, threshold, cons_mask), chunks))
                else:
                    parts = [self._probe_chunk(ch, threshold, cons_mask) for ch in chunks]
                ant_prob = np.concatenate([p[0] for p in parts])
                ok = np.concatenate([p[1] for p in parts])
                hits = None
                if cons_mask is not None:
                    offs = np.cumsum([0] + [len(ch) for ch in chunks[:-1]])
                    hits = (
                        np.concatenate([p[2][0] + o for p, o in zip(parts, offs)]),
                        np.concatenate([p[2][1] for p in parts]),
                        np.concatenate([p[2][2] for p in parts]),
                    )
                log.debug("level %d: %d probes, %d pass", size, len(combos), int(ok.sum()))
                yield combos, ant_prob, ok, hits
                if size == 1:
                    pool = sorted(int(p) for p in combos[ok, 0])
        finally:
            self.elapsed = time.perf_counter() - start


def extract_rules(model: AutoencoderModel, config: ExtractConfig | None = None,
                  workers: int = 1) -> list[Rule]:
    """Association rules ``antecedent -> consequent`` read off the model."""
    return Extractor(model, config, workers).rules()


def extract_itemsets(model: AutoencoderModel, config: ExtractConfig | None = None,
                     workers: int = 1) -> list[Itemset]:
    """Item combinations whose marked entries all reconstruct at ``tau_i`` or more."""
    return Extractor(model, config, workers).itemsets()


def extract_constrained(model: AutoencoderModel, config: ExtractConfig,
                        workers: int = 1) -> list[Rule]:
    """Rules with antecedents drawn from ``antecedent_items`` and consequents
    restricted to ``consequent_items``."""
    return Extractor(model, config, workers).constrained()


def top_k_filter(rules: Sequence[Rule], k: int) -> list[Rule]:
    """Keep, per consequent, the ``k`` rules with the highest antecedent probability.

    Ties go to the lexicographically smaller antecedent.
    """
    if k <= 0:
        return []
    groups: dict[Item, list[Rule]] = {}
    for r in rules:
        if r.antecedent_prob is None:
            raise ValueError("top-k filtering needs antecedent probabilities")
        groups.setdefault(r.consequent, []).append(r)
    kept = []
    for group in groups.values():
        group.sort(key=lambda r: (-r.antecedent_prob, r.antecedent))
        kept.extend(group[:k])
    kept.sort(key=lambda r: r.key)
    return kept


def with_stats(rule: Rule, support: float | None, confidence: float | None) -> Rule:
    return replace(rule, support=support, confidence=confidence)
