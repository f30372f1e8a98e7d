from itertools import combinations

import numpy as np
import pytest

from aerial import extract
from aerial.data import FeatureSchema
from aerial.extract import (
    ExtractConfig,
    Extractor,
    Item,
    Rule,
    all_items,
    extract_constrained,
    extract_itemsets,
    extract_rules,
    mark,
    top_k_filter,
    uniform_vector,
)
from aerial.nn import TrainConfig, train
from synth import planted

COLD_WARM = FeatureSchema.from_dict({"weather": ["cold", "warm"], "beverage": ["tea", "coffee", "soda"]})
WARM_COLD = FeatureSchema.from_dict({"weather": ["warm", "cold"], "beverage": ["tea", "coffee", "soda"]})


class Stub:
    """Maps each probe row through ``fn(row) -> output row``."""

    def __init__(self, schema, fn):
        self.schema = schema
        self.fn = fn

    def __call__(self, v):
        return np.array([self.fn(row) for row in np.atleast_2d(v)])


def example_stub(schema):
    """Output probabilities from the worked example, keyed by item (p(warm) = 0.7)."""
    by_item = {"warm": 0.7, "cold": 0.3, "tea": 0.04, "coffee": 0.1, "soda": 0.86}
    target = mark(schema, uniform_vector(schema), [Item(0, schema.categories(0).index("warm"))])
    out = np.array([by_item[c] for _, cats in schema.features for c in cats])

    def fn(row):
        if np.array_equal(row, target):
            return out
        return uniform_vector(schema)  # no consequent reaches tau_c

    return Stub(schema, fn)


def identity_stub(schema):
    return Stub(schema, lambda row: row)


@pytest.fixture(scope="module")
def planted_model():
    ds = planted(500, seed=0)
    return ds, train(ds, TrainConfig(seed=0))


class TestProbeVectors:
    def test_uniform(self):
        np.testing.assert_allclose(uniform_vector(COLD_WARM), [0.5, 0.5, 1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(uniform_vector(FeatureSchema.from_dict({"b": ["0", "1"]})), [0.5, 0.5])

    def test_mark_warm(self):
        v = mark(WARM_COLD, uniform_vector(WARM_COLD), [Item(0, 0)])
        np.testing.assert_allclose(v, [1, 0, 1 / 3, 1 / 3, 1 / 3])
        v = mark(COLD_WARM, uniform_vector(COLD_WARM), [Item(0, 1)])
        np.testing.assert_allclose(v, [0, 1, 1 / 3, 1 / 3, 1 / 3])

    def test_mark_all_is_one_hot(self):
        v = mark(COLD_WARM, uniform_vector(COLD_WARM), [Item(0, 1), Item(1, 2)])
        assert v.tolist() == [0, 1, 0, 0, 1]

    def test_sibling_conflict(self):
        with pytest.raises(ValueError, match="share feature"):
            mark(COLD_WARM, uniform_vector(COLD_WARM), [Item(0, 0), Item(0, 1)])

    def test_block_sums(self):
        rng = np.random.default_rng(0)
        schema = FeatureSchema.from_dict({f"f{i}": [str(j) for j in range(i + 1)] for i in range(5)})
        for _ in range(50):
            items = [Item(f, int(rng.integers(0, f + 1))) for f in range(5) if rng.random() < 0.5]
            v = mark(schema, uniform_vector(schema), items)
            b = schema.bounds
            np.testing.assert_allclose([v[lo:hi].sum() for lo, hi in zip(b[:-1], b[1:])], 1.0)


class TestWorkedExample:
    @pytest.mark.parametrize("schema", [COLD_WARM, WARM_COLD], ids=["cold-warm", "warm-cold"])
    def test_warm_implies_soda(self, schema):
        rules = extract_rules(example_stub(schema), ExtractConfig(tau_a=0.5, tau_c=0.8))
        warm = Item(0, schema.categories(0).index("warm"))
        assert [(r.antecedent, r.consequent) for r in rules] == [((warm,), Item(1, 2))]
        assert rules[0].antecedent_prob == 0.7
        assert rules[0].consequent_prob == 0.86

    def test_tau_c_above_output(self):
        assert extract_rules(example_stub(COLD_WARM), ExtractConfig(tau_c=0.9)) == []

    def test_constrained(self):
        cfg = ExtractConfig(antecedent_items={Item(0, 1)}, consequent_items={Item(1, 2)})
        rules = extract_constrained(example_stub(COLD_WARM), cfg)
        assert [(r.antecedent, r.consequent) for r in rules] == [((Item(0, 1),), Item(1, 2))]

    def test_constrained_excludes_consequent(self):
        cfg = ExtractConfig(consequent_items={Item(1, 0)})
        assert extract_constrained(example_stub(COLD_WARM), cfg) == []

    def test_antecedent_threshold_is_strict_below(self):
        # p(warm) equal to tau_a is kept, just above rejects
        assert extract_rules(example_stub(COLD_WARM), ExtractConfig(tau_a=0.7))
        assert extract_rules(example_stub(COLD_WARM), ExtractConfig(tau_a=0.70001)) == []

    def test_consequent_threshold_is_strict_above(self):
        assert extract_rules(example_stub(COLD_WARM), ExtractConfig(tau_c=0.86)) == []


class TestItemsets:
    def test_single_category_feature_always_emitted(self):
        schema = FeatureSchema.from_dict({"a": ["x", "y"], "b": ["only"], "c": ["p", "q"]})

        # two-category blocks split evenly, the one-category block is forced to 1
        stub = Stub(schema, lambda row: np.array([0.5, 0.5, 1.0, 0.5, 0.5]))
        sets = extract_itemsets(stub, ExtractConfig(max_antecedents=1, tau_i=0.99))
        assert [s.items for s in sets] == [(Item(1, 0),)]

    def test_below_tau_i(self):
        stub = Stub(COLD_WARM, lambda row: np.full(5, 0.7))
        assert extract_itemsets(stub, ExtractConfig(tau_i=0.8)) == []
        assert len(extract_itemsets(stub, ExtractConfig(tau_i=0.7, max_antecedents=1))) == 5

    def test_identity_stub_emits_all_combinations(self):
        sets = extract_itemsets(identity_stub(COLD_WARM), ExtractConfig(tau_i=0.9))
        assert len(sets) == 5 + 2 * 3

    def test_planted_pair(self, planted_model):
        ds, model = planted_model
        keys = {s.items for s in extract_itemsets(model)}
        pair = tuple(sorted(Item(*ds.schema.parse_label(x)) for x in ("f1=a", "f2=x")))
        assert pair in keys


class TestRules:
    def test_rule_validation(self):
        with pytest.raises(ValueError):
            Rule((Item(0, 0),), Item(0, 1))
        with pytest.raises(ValueError):
            Rule((Item(0, 0), Item(0, 1)), Item(1, 0))
        with pytest.raises(ValueError):
            Rule((), Item(1, 0))

    @pytest.mark.parametrize("bad", [{"tau_a": 0.0}, {"tau_c": 1.0}, {"tau_i": -1}, {"max_antecedents": 0}, {"top_k": -1}])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            ExtractConfig(**bad)

    def test_planted_rule_found(self, planted_model):
        ds, model = planted_model
        rules = extract_rules(model)
        a, x = (Item(*ds.schema.parse_label(s)) for s in ("f1=a", "f2=x"))
        assert ((a,), x) in {r.key for r in rules}

    def test_no_self_implication_and_sorted(self, planted_model):
        _, model = planted_model
        rules = extract_rules(model, ExtractConfig(max_antecedents=3, tau_c=0.6))
        assert rules
        for r in rules:
            assert r.consequent.feature not in {i.feature for i in r.antecedent}
            assert r.antecedent_prob >= 0.5 and r.consequent_prob > 0.6
        assert [r.key for r in rules] == sorted(r.key for r in rules)

    def test_tau_c_nesting(self, planted_model):
        _, model = planted_model
        prev = None
        for tc in (0.5, 0.6, 0.7, 0.8, 0.9):
            keys = {r.key for r in extract_rules(model, ExtractConfig(tau_c=tc))}
            if prev is not None:
                assert keys <= prev
            prev = keys

    def test_tau_a_nesting(self, planted_model):
        _, model = planted_model
        prev = None
        for ta in (0.1, 0.3, 0.5, 0.7, 0.9):
            keys = {r.key for r in extract_rules(model, ExtractConfig(tau_a=ta))}
            if prev is not None:
                assert keys <= prev
            prev = keys

    def test_full_universe_constraint_is_noop(self, planted_model):
        ds, model = planted_model
        universe = frozenset(all_items(ds.schema))
        cfg = ExtractConfig(antecedent_items=universe, consequent_items=universe)
        assert extract_constrained(model, cfg) == extract_rules(model)

    def test_consequent_filter(self, planted_model):
        ds, model = planted_model
        f2 = ds.schema.feature_index("f2")
        cons = {Item(f2, c) for c in range(len(ds.schema.categories(f2)))}
        rules = extract_constrained(model, ExtractConfig(consequent_items=cons))
        assert rules and all(r.consequent.feature == f2 for r in rules)

    def test_antecedent_filter(self, planted_model):
        ds, model = planted_model
        pool = {Item(*ds.schema.parse_label(s)) for s in ("f1=a", "f3=p", "n1=A")}
        rules = extract_constrained(model, ExtractConfig(antecedent_items=pool))
        assert rules and all(set(r.antecedent) <= pool for r in rules)

    @pytest.mark.parametrize("cfg", [ExtractConfig(), ExtractConfig(antecedent_items=frozenset())])
    def test_constrained_needs_items(self, planted_model, cfg):
        with pytest.raises(ValueError):
            extract_constrained(planted_model[1], cfg)

    def test_constrained_rejects_unknown_item(self, planted_model):
        with pytest.raises(ValueError, match="not in the schema"):
            extract_constrained(planted_model[1], ExtractConfig(consequent_items={Item(0, 9)}))

    def test_parallel_matches_serial(self, planted_model, monkeypatch):
        _, model = planted_model
        monkeypatch.setattr(extract, "PROBE_CHUNK", 7)
        cfg = ExtractConfig(max_antecedents=3, tau_c=0.7)
        assert extract_rules(model, cfg, workers=4) == extract_rules(model, cfg, workers=1)
        assert extract_itemsets(model, cfg, workers=4) == extract_itemsets(model, cfg, workers=1)


class TestProbeCounts:
    def brute_count(self, schema, a):
        items = all_items(schema)
        return sum(
            1
            for i in range(1, a + 1)
            for c in combinations(items, i)
            if len({it.feature for it in c}) == i
        )

    @pytest.mark.parametrize("a", [1, 2, 3])
    def test_unpruned_count(self, a):
        schema = FeatureSchema.from_dict({f"f{i}": ["0", "1", "2"][: 2 + i % 2] for i in range(5)})
        ex = Extractor(identity_stub(schema), ExtractConfig(max_antecedents=a))
        ex.rules()
        assert ex.probes == self.brute_count(schema, a)
        assert ex.level_probes[0] == schema.total_dim

    def test_pruning_bounds_probes(self, planted_model):
        ds, model = planted_model
        ex = Extractor(model, ExtractConfig(max_antecedents=2))
        ex.rules()
        assert ex.probes <= self.brute_count(ds.schema, 2)

    def test_pruned_items_leave_pool(self):
        # item 0 of feature 0 always reconstructs low: no pair contains it
        seen = []

        def fn(row):
            seen.append(row.copy())
            out = row.copy()
            out[0] = min(out[0], 0.1)
            return out

        ex = Extractor(Stub(COLD_WARM, fn), ExtractConfig(max_antecedents=2))
        ex.rules()
        assert ex.level_probes == [5, 3]
        assert all(r[0] != 1.0 for r in seen[5:])


class TestTopK:
    def rules(self):
        x, y = Item(1, 0), Item(1, 1)
        return [
            Rule((Item(0, 0),), x, 0.9, 0.9),
            Rule((Item(0, 1),), x, 0.6, 0.9),
            Rule((Item(2, 0),), x, 0.6, 0.9),
            Rule((Item(0, 0),), y, 0.5, 0.9),
        ]

    def test_identity_when_k_large(self):
        rules = sorted(self.rules(), key=lambda r: r.key)
        assert top_k_filter(rules, 10) == rules

    def test_keeps_strongest(self):
        kept = top_k_filter(self.rules(), 1)
        assert {(r.antecedent[0], r.consequent) for r in kept} == {(Item(0, 0), Item(1, 0)), (Item(0, 0), Item(1, 1))}

    def test_tie_break(self):
        kept = top_k_filter(self.rules(), 2)
        assert [r.antecedent for r in kept if r.consequent == Item(1, 0)] == [(Item(0, 0),), (Item(0, 1),)]

    def test_zero(self):
        assert top_k_filter(self.rules(), 0) == []

    def test_trained_model(self, planted_model):
        _, model = planted_model
        full = extract_rules(model, ExtractConfig(max_antecedents=2, tau_c=0.7))
        kept = extract_rules(model, ExtractConfig(max_antecedents=2, tau_c=0.7, top_k=2))
        by_cons = {}
        for r in full:
            by_cons.setdefault(r.consequent, []).append(r)
        assert any(len(g) >= 3 for g in by_cons.values())
        for cons, group in by_cons.items():
            scores = sorted((r.antecedent_prob for r in group), reverse=True)[:2]
            got = sorted((r.antecedent_prob for r in kept if r.consequent == cons), reverse=True)
            assert got == scores
