"""Command line interface.

Subcommands: mine, itemsets, constrain, baseline, evaluate, benchmark.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .baseline import MineParams, mine_exhaustive
from .data import DEFAULT_BINS, DataError, Dataset, load_dataset
from .extract import ExtractConfig, Extractor, Item
from .metrics import annotate, annotate_itemsets, format_table, summarize
from .nn import TrainConfig, TrainingError, config_dict, train
from .ruleio import format_itemsets, format_rules, read_rules

log = logging.getLogger("aerial")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _antecedent_range(text: str) -> list[int]:
    """``"3"`` or ``"1..4"``."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid antecedent range {text!r}")
    return list(range(lo, hi + 1))


def _build_parser() -> argparse.ArgumentParser:
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("dataset", type=Path, help="CSV file")
    data.add_argument("--bins", type=int, default=DEFAULT_BINS,
                      help="equal-frequency bins for numeric columns (0: keep values as categories)")
    data.add_argument("--delimiter", default=",")
    data.add_argument("--no-header", action="store_true")
    data.add_argument("--ignore-columns", default="", help="comma-separated columns to drop")
    data.add_argument("--categorical", action="store_true", help="treat every column as categorical")
    data.add_argument("--seed", type=int, default=0)
    data.add_argument("--out", type=Path, default=Path("aerial-out"), help="output directory")
    data.add_argument("--format", choices=("json", "csv"), default="json")
    data.add_argument("-v", "--verbose", action="store_true")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int, default=2)
    training.add_argument("--batch-size", type=int, default=None)
    training.add_argument("--hidden-layers", type=int, default=None, choices=(1, 2, 3))
    training.add_argument("--learning-rate", type=float, default=5e-3)
    training.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    probing = argparse.ArgumentParser(add_help=False)
    probing.add_argument("--tau-a", type=float, default=0.5)
    probing.add_argument("--tau-c", type=float, default=0.8)
    probing.add_argument("--tau-i", type=float, default=0.5)
    probing.add_argument("--top-k", type=int, default=None)

    parser = argparse.ArgumentParser(prog="aerial", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[data, training, probing], help="train and extract rules")
    p.add_argument("--antecedents", type=int, default=2)

    p = sub.add_parser("itemsets", parents=[data, training, probing], help="train and extract frequent itemsets")
    p.add_argument("--antecedents", type=int, default=2, help="maximum itemset size")

    p = sub.add_parser("constrain", parents=[data, training, probing],
                       help="rules restricted to antecedent/consequent items")
    p.add_argument("--antecedents", type=int, default=2)
    p.add_argument("--antecedent-items", action="append", default=[],
                   help="feature=category or a bare feature name; repeatable, ';'-separated")
    p.add_argument("--consequent-items", action="append", default=[])

    p = sub.add_parser("baseline", parents=[data, training, probing], help="exhaustive FP-Growth rules")
    p.add_argument("--antecedents", type=int, default=2)
    p.add_argument("--min-support", default="auto",
                   help="fraction, or 'auto' for half the mean support of mined rules")
    p.add_argument("--min-confidence", type=float, default=0.8)

    p = sub.add_parser("evaluate", parents=[data], help="recompute metrics of a rule file")
    p.add_argument("rules", type=Path, help="rule file (.jsonl or .csv)")

    p = sub.add_parser("benchmark", parents=[data, training, probing],
                       help="sweep antecedent counts or thresholds")
    p.add_argument("--antecedents", type=_antecedent_range, default=[1, 2, 3, 4])
    p.add_argument("--sweep", choices=("antecedents", "tau-a", "tau-c"), default="antecedents")
    p.add_argument("--values", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                   help="threshold values for --sweep tau-a/tau-c")
    p.add_argument("--min-support", type=float, default=None,
                   help="also time the exhaustive miner at this support")
    p.add_argument("--min-confidence", type=float, default=0.8)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load(args) -> Dataset:
    ignore = [c.strip() for c in args.ignore_columns.split(",") if c.strip()]
    if not args.dataset.is_file():
        raise DataError(f"dataset not found: {args.dataset}")
    dataset, _ = load_dataset(
        args.dataset,
        bins=args.bins,
        header=not args.no_header,
        delimiter=args.delimiter,
        ignore=ignore,
        categorical=args.categorical,
    )
    log.info("loaded %s: %d rows, %d features, %d categories",
             args.dataset, dataset.n, dataset.schema.n_features, dataset.schema.total_dim)
    return dataset


def _train_config(args) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            batch_size=args.batch_size,
            hidden_layers=args.hidden_layers,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _extract_config(args, max_antecedents: int, **extra) -> ExtractConfig:
    try:
        return ExtractConfig(
            max_antecedents=max_antecedents,
            tau_a=args.tau_a,
            tau_c=args.tau_c,
            tau_i=args.tau_i,
            top_k=args.top_k,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_items(specs: list[str], dataset: Dataset) -> frozenset[Item] | None:
    schema = dataset.schema
    tokens = [t.strip() for s in specs for t in s.split(";") if t.strip()]
    if not tokens:
        return None
    items = set()
    for tok in tokens:
        if tok in schema.names:
            f = schema.feature_index(tok)
            items.update(Item(f, c) for c in range(len(schema.categories(f))))
        else:
            items.add(Item(*schema.parse_label(tok)))
    return frozenset(items)


def _manifest(args, dataset: Dataset, config: dict, outputs: list[str]) -> dict:
    return {
        "command": args.command,
        "argv": args.argv,
        "dataset": str(args.dataset),
        "seed": args.seed,
        "config": config,
        "schema_hash": dataset.schema.hash(),
        "versions": {
            "aerial": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernels": kernels.BACKEND,
        },
        "outputs": outputs,
    }


def _write(out: Path, name: str, text: str, written: list[str]) -> None:
    (out / name).write_text(text, encoding="utf-8")
    written.append(name)


def _rules_name(fmt: str, stem: str = "rules") -> str:
    return f"{stem}.jsonl" if fmt == "json" else f"{stem}.csv"


def _finish(args, dataset, config, written, summary_rows):
    out = args.out
    _write(out, "schema.json", dataset.schema.to_json() + "\n", written)
    if summary_rows:
        _write(out, "summary.json",
               json.dumps({name: s.to_dict() for name, s in summary_rows}, indent=2) + "\n", written)
        print(format_table(summary_rows))
    manifest = _manifest(args, dataset, config, sorted(written) + ["manifest.json"])
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _train_and_probe(args, dataset, ecfg):
    tcfg = _train_config(args)
    start = time.perf_counter()
    model = train(dataset, tcfg)
    ex = Extractor(model, ecfg, workers=args.workers)
    return model, ex, tcfg, start


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_mine(args) -> int:
    dataset = _load(args)
    ecfg = _extract_config(args, args.antecedents)
    model, ex, tcfg, start = _train_and_probe(args, dataset, ecfg)
    rules = ex.rules()
    elapsed = time.perf_counter() - start
    rules = annotate(dataset, rules)
    written: list[str] = []
    _write(args.out, _rules_name(args.format), format_rules(rules, dataset.schema, args.format), written)
    model.save(args.out / "model.json")
    written.append("model.json")
    summary = summarize(dataset, rules, elapsed)
    config = {"train": config_dict(tcfg), "extract": _ecfg_dict(ecfg, dataset), "probes": ex.probes}
    _finish(args, dataset, config, written, [("Aerial+", summary)])
    return EXIT_OK


def cmd_itemsets(args) -> int:
    dataset = _load(args)
    ecfg = _extract_config(args, args.antecedents)
    model, ex, tcfg, _ = _train_and_probe(args, dataset, ecfg)
    itemsets = annotate_itemsets(dataset, ex.itemsets())
    written: list[str] = []
    _write(args.out, _rules_name(args.format, "itemsets"),
           format_itemsets(itemsets, dataset.schema, args.format), written)
    config = {"train": config_dict(tcfg), "extract": _ecfg_dict(ecfg, dataset), "probes": ex.probes}
    _finish(args, dataset, config, written, [])
    print(f"{len(itemsets)} itemsets")
    return EXIT_OK


def cmd_constrain(args) -> int:
    dataset = _load(args)
    ant = _parse_items(args.antecedent_items, dataset)
    con = _parse_items(args.consequent_items, dataset)
    if ant is None and con is None:
        raise UsageError("give --antecedent-items and/or --consequent-items")
    ecfg = _extract_config(args, args.antecedents, antecedent_items=ant, consequent_items=con)
    model, ex, tcfg, start = _train_and_probe(args, dataset, ecfg)
    rules = ex.constrained()
    elapsed = time.perf_counter() - start
    rules = annotate(dataset, rules)
    written: list[str] = []
    _write(args.out, _rules_name(args.format), format_rules(rules, dataset.schema, args.format), written)
    config = {"train": config_dict(tcfg), "extract": _ecfg_dict(ecfg, dataset), "probes": ex.probes}
    _finish(args, dataset, config, written, [("Aerial+ (constrained)", summarize(dataset, rules, elapsed))])
    return EXIT_OK


def cmd_baseline(args) -> int:
    dataset = _load(args)
    config: dict = {}
    if args.min_support == "auto":
        ecfg = _extract_config(args, args.antecedents)
        _, ex, tcfg, _ = _train_and_probe(args, dataset, ecfg)
        s = summarize(dataset, ex.rules())
        if s.support is None:
            raise DataError("no Aerial+ rules to derive --min-support from; pass it explicitly")
        min_support = s.support / 2
        config["train"] = config_dict(tcfg)
        config["extract"] = _ecfg_dict(ecfg, dataset)
    else:
        try:
            min_support = float(args.min_support)
        except ValueError:
            raise UsageError(f"invalid --min-support {args.min_support!r}") from None
    try:
        params = MineParams(min_support, args.min_confidence, args.antecedents)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    start = time.perf_counter()
    rules = mine_exhaustive(dataset, params)
    elapsed = time.perf_counter() - start
    written: list[str] = []
    _write(args.out, _rules_name(args.format), format_rules(rules, dataset.schema, args.format), written)
    config["baseline"] = {
        "min_support": params.min_support,
        "min_confidence": params.min_confidence,
        "max_antecedents": params.max_antecedents,
    }
    _finish(args, dataset, config, written, [("FP-Growth", summarize(dataset, rules, elapsed))])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    dataset = _load(args)
    if not args.rules.is_file():
        raise DataError(f"rule file not found: {args.rules}")
    rules = read_rules(args.rules, dataset.schema)
    rules = annotate(dataset, rules)
    written: list[str] = []
    _write(args.out, "evaluated_" + _rules_name(args.format),
           format_rules(rules, dataset.schema, args.format), written)
    _finish(args, dataset, {"rules": str(args.rules)}, written, [(args.rules.name, summarize(dataset, rules))])
    return EXIT_OK


def cmd_benchmark(args) -> int:
    dataset = _load(args)
    tcfg = _train_config(args)
    t0 = time.perf_counter()
    model = train(dataset, tcfg)
    train_s = time.perf_counter() - t0
    rows = []
    if args.sweep == "antecedents":
        settings = [("antecedents", a, _extract_config(args, a)) for a in args.antecedents]
    else:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"invalid --values {args.values!r}") from None
        key = "tau_a" if args.sweep == "tau-a" else "tau_c"
        a = args.antecedents[-1] if len(args.antecedents) == 1 else 2
        settings = []
        for v in values:
            setattr(args, key, v)
            settings.append((key, v, _extract_config(args, a)))
    for key, value, ecfg in settings:
        ex = Extractor(model, ecfg, workers=args.workers)
        rules = ex.rules()
        s = summarize(dataset, rules)
        row = {
            key: value,
            "probes": ex.probes,
            "rules": s.rules,
            "train_s": train_s,
            "extract_s": ex.elapsed,
            "total_s": train_s + ex.elapsed,
            "support": s.support,
            "confidence": s.confidence,
            "coverage": s.coverage,
        }
        if args.min_support is not None:
            a = value if key == "antecedents" else ecfg.max_antecedents
            t = time.perf_counter()
            base = mine_exhaustive(dataset, MineParams(args.min_support, args.min_confidence, a))
            row["exhaustive_rules"] = len(base)
            row["exhaustive_s"] = time.perf_counter() - t
        rows.append(row)
    written: list[str] = []
    _write(args.out, "benchmark.json", json.dumps(rows, indent=2) + "\n", written)
    _finish(args, dataset, {"train": config_dict(tcfg), "sweep": args.sweep}, written, [])
    print(_benchmark_table(rows))
    return EXIT_OK


def _benchmark_table(rows: list[dict]) -> str:
    cols = list(rows[0]) if rows else []

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    table = [cols] + [[cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in table)


def _ecfg_dict(ecfg: ExtractConfig, dataset: Dataset) -> dict:
    def labels(items):
        return None if items is None else sorted(dataset.schema.label(*it) for it in items)

    return {
        "max_antecedents": ecfg.max_antecedents,
        "tau_a": ecfg.tau_a,
        "tau_c": ecfg.tau_c,
        "tau_i": ecfg.tau_i,
        "top_k": ecfg.top_k,
        "antecedent_items": labels(ecfg.antecedent_items),
        "consequent_items": labels(ecfg.consequent_items),
    }


COMMANDS = {
    "mine": cmd_mine,
    "itemsets": cmd_itemsets,
    "constrain": cmd_constrain,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with exit 2
        return int(exc.code or 0)
    args.argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"aerial {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"aerial {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, FloatingPointError) as exc:
        print(f"aerial {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"aerial {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
