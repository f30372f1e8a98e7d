"""Synthetic datasets shared by the tests."""

from __future__ import annotations

import numpy as np

from aerial.data import Dataset, FeatureSchema, dataset_from_records
from aerial.extract import Item

PLANTED_NAMES = ["f1", "f2", "f3", "f4", "f5", "f6", "n1", "n2"]


def planted_records(n: int = 500, seed: int = 0) -> list[list[str]]:
    """Three implications at confidence 1 (a -> x, p -> s, m -> w) plus two noise columns."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        f1 = "a" if rng.random() < 0.5 else "b"
        f2 = "x" if f1 == "a" else str(rng.choice(["y", "z"]))
        f3 = str(rng.choice(["p", "q", "r"], p=[0.4, 0.3, 0.3]))
        f4 = "s" if f3 == "p" else str(rng.choice(["t", "u"]))
        f5 = "m" if rng.random() < 0.6 else "n"
        f6 = "w" if f5 == "m" else "v"
        rows.append([f1, f2, f3, f4, f5, f6, str(rng.choice(list("ABCD"))), str(rng.choice(list("EFG")))])
    return rows


def planted(n: int = 500, seed: int = 0):
    return dataset_from_records(planted_records(n, seed), PLANTED_NAMES)


def planted_rules(schema) -> list[tuple[tuple[Item, ...], Item]]:
    def it(label):
        return Item(*schema.parse_label(label))

    return [
        ((it("f1=a"),), it("f2=x")),
        ((it("f3=p"),), it("f4=s")),
        ((it("f5=m"),), it("f6=w")),
    ]


def conditional(p_x: float, n: int = 500, seed: int = 0):
    """Two features with P(f2=x | f1=a) exactly ``p_x``; f1=b always pairs with f2=z."""
    half = n // 2
    n_x = round(p_x * half)
    rows = [["a", "x"]] * n_x + [["a", "y"]] * (half - n_x) + [["b", "z"]] * (n - half)
    order = np.random.default_rng(seed).permutation(n)
    # x is declared even when it never occurs (p_x = 0)
    schema = FeatureSchema.from_dict({"f1": ["a", "b"], "f2": ["x", "y", "z"]})
    index = {"a": 0, "b": 1, "x": 0, "y": 1, "z": 2}
    return Dataset(schema, np.array([[index[v] for v in rows[i]] for i in order]))


def random_records(rng: np.random.Generator, max_features=6, max_categories=3, max_rows=64):
    k = int(rng.integers(1, max_features + 1))
    n = int(rng.integers(1, max_rows + 1))
    cats = [int(rng.integers(1, max_categories + 1)) for _ in range(k)]
    names = [f"c{j}" for j in range(k)]
    records = [[f"v{int(rng.integers(0, c))}" for c in cats] for _ in range(n)]
    return records, names
