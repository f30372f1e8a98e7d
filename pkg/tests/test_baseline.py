import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aerial.baseline import MineParams, brute_force_oracle, frequent_itemsets, mine_exhaustive
from aerial.data import Dataset, dataset_from_records
from aerial.extract import Item
from synth import random_records

# D = {{a,x},{a,x},{a,y},{b,x}}
D = dataset_from_records([["a", "x"], ["a", "x"], ["a", "y"], ["b", "x"]], ["f1", "f2"])
A, B, X, Y = Item(0, 0), Item(0, 1), Item(1, 0), Item(1, 1)


def keyed(rules):
    return {r.key: (r.support, r.confidence) for r in rules}


class TestFourTransactions:
    def test_conf_too_high(self):
        assert mine_exhaustive(D, MineParams(0.5, 0.8)) == []

    def test_two_rules(self):
        rules = mine_exhaustive(D, MineParams(0.5, 0.6))
        assert keyed(rules) == {((A,), X): (0.5, pytest.approx(2 / 3)), ((X,), A): (0.5, pytest.approx(2 / 3))}

    def test_oracle_agrees(self):
        for conf in (0.6, 0.8):
            assert keyed(brute_force_oracle(D, MineParams(0.5, conf))) == keyed(mine_exhaustive(D, MineParams(0.5, conf)))

    def test_full_support(self):
        assert mine_exhaustive(D, MineParams(1.0, 0.1)) == []

    def test_frequent_itemsets(self):
        freq = frequent_itemsets(D.transactions(), 2, 2)
        assert freq == {(0,): 3, (2,): 3, (0, 2): 2}


class TestOracle:
    def test_support_above_max(self):
        assert brute_force_oracle(D, MineParams(0.8, 0.1)) == []

    def test_singleton_dataset(self):
        ds = dataset_from_records([["a", "x", "p"]], ["f", "g", "h"])
        rules = brute_force_oracle(ds, MineParams(1.0, 1.0, 2))
        # 3 single-item antecedents x 2 consequents, 3 pairs x 1 consequent
        assert len(rules) == 9
        assert all(r.support == 1.0 and r.confidence == 1.0 for r in rules)
        assert keyed(mine_exhaustive(ds, MineParams(1.0, 1.0, 2))) == keyed(rules)

    def test_guard(self):
        ds = dataset_from_records([[str(i)] * 2 for i in range(13)], ["a", "b"])
        with pytest.raises(ValueError, match="limited"):
            brute_force_oracle(ds)

    @pytest.mark.parametrize("bad", [(0.0, 0.5, 2), (0.5, 1.5, 2), (0.5, 0.5, 0)])
    def test_params(self, bad):
        with pytest.raises(ValueError):
            MineParams(*bad)

    def test_empty(self):
        ds = Dataset(D.schema, np.zeros((0, 2), dtype=np.int64))
        with pytest.raises(ValueError):
            mine_exhaustive(ds)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    min_support=st.sampled_from([0.02, 0.1, 0.25, 0.5]),
    min_confidence=st.sampled_from([0.3, 0.6, 0.9, 1.0]),
    a=st.integers(1, 3),
)
def test_matches_oracle(seed, min_support, min_confidence, a):
    records, names = random_records(np.random.default_rng(seed))
    ds = dataset_from_records(records, names)
    params = MineParams(min_support, min_confidence, a)
    got = mine_exhaustive(ds, params)
    want = brute_force_oracle(ds, params)
    assert [r.key for r in got] == [r.key for r in want]
    for g, w in zip(got, want):
        assert g.support == pytest.approx(w.support) and g.confidence == pytest.approx(w.confidence)
