"""Rule and itemset files: JSON lines or CSV, items written as ``feature=category``."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

from .data import DataError, FeatureSchema
from .extract import Item, Itemset, Rule

RULE_FIELDS = ("antecedent", "consequent", "antecedent_prob", "consequent_prob", "support", "confidence")
ITEMSET_FIELDS = ("items", "probability", "support")
CSV_ITEM_SEP = " & "


def rule_to_dict(rule: Rule, schema: FeatureSchema) -> dict:
    d = {
        "antecedent": [schema.label(*it) for it in rule.antecedent],
        "consequent": schema.label(*rule.consequent),
        "antecedent_prob": rule.antecedent_prob,
        "consequent_prob": rule.consequent_prob,
    }
    if rule.support is not None:
        d["support"] = rule.support
    if rule.confidence is not None or rule.support is not None:
        d["confidence"] = rule.confidence
    return d


def rule_from_dict(d: dict, schema: FeatureSchema) -> Rule:
    ante = d["antecedent"]
    if isinstance(ante, str):
        ante = [a for a in ante.split(CSV_ITEM_SEP) if a]
    items = tuple(sorted(Item(*schema.parse_label(a)) for a in ante))

    def num(key):
        v = d.get(key)
        return None if v in (None, "") else float(v)

    return Rule(
        items,
        Item(*schema.parse_label(d["consequent"])),
        num("antecedent_prob"),
        num("consequent_prob"),
        num("support"),
        num("confidence"),
    )


def format_rules(rules: Sequence[Rule], schema: FeatureSchema, fmt: str = "json") -> str:
    if fmt == "json":
        return "".join(json.dumps(rule_to_dict(r, schema)) + "\n" for r in rules)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RULE_FIELDS)
        for r in rules:
            d = rule_to_dict(r, schema)
            w.writerow([
                CSV_ITEM_SEP.join(d["antecedent"]),
                d["consequent"],
                *("" if d.get(k) is None else repr(d[k]) for k in RULE_FIELDS[2:]),
            ])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def write_rules(rules: Sequence[Rule], schema: FeatureSchema, path: str | Path, fmt: str = "json") -> None:
    Path(path).write_text(format_rules(rules, schema, fmt), encoding="utf-8")


def read_rules(path: str | Path, schema: FeatureSchema) -> list[Rule]:
    """Read a rule file written by :func:`write_rules`; CSV is detected by suffix."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".csv":
            rows = list(csv.DictReader(io.StringIO(text)))
        else:
            rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return [rule_from_dict(r, schema) for r in rows]
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: malformed rule file: {exc}") from exc


def format_itemsets(itemsets: Sequence[Itemset], schema: FeatureSchema, fmt: str = "json") -> str:
    rows = [
        {
            "items": [schema.label(*it) for it in s.items],
            "probability": s.probability,
            "support": s.support,
        }
        for s in itemsets
    ]
    if fmt == "json":
        return "".join(json.dumps(r) + "\n" for r in rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ITEMSET_FIELDS)
        for r in rows:
            w.writerow([
                CSV_ITEM_SEP.join(r["items"]),
                *("" if r[k] is None else repr(r[k]) for k in ITEMSET_FIELDS[1:]),
            ])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")
