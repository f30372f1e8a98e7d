"""Bundled benchmark data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..data import Dataset, load_dataset


def breast_cancer_path() -> Path:
    """UCI Breast Cancer (Ljubljana): 286 rows, class column first, ``?`` = missing."""
    return Path(str(resources.files(__package__).joinpath("breast_cancer.csv")))


def load_breast_cancer(include_class: bool = False) -> Dataset:
    """All columns read as categorical; without the class this gives 9 features, 43 categories."""
    ignore = () if include_class else ("class",)
    dataset, _ = load_dataset(breast_cancer_path(), categorical=True, ignore=ignore)
    return dataset
