"""Command-line surface: seeded, reproducible pipelines over the toolkit.

Every command resolves its flags (seed defaulting to the SETCOH_SEED
environment variable), writes a ``config.snapshot`` JSON next to its
outputs, and is byte-reproducible from that snapshot.  Exit codes:
0 success, 2 bad flags, 3 data errors, 4 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, evalkit, trainer, verifier
from .datagen import (
    DatasetSplit,
    GenConfig,
    MalformedRecordError,
    MissingSemanticsError,
    StatementSet,
    build_splits,
    load_jsonl,
    pools,
    save_jsonl,
)
from .model import (
    CorruptFileError,
    ModelParams,
    VersionMismatchError,
    build_vocabulary,
    load_params,
    save_params,
)
from .trainer import (
    EmptyValidationError,
    PoolExhaustedError,
    TrainerConfig,
    TrainingDivergedError,
    Threshold,
)

DATA_FILE = "data.jsonl"
MODEL_FILE = "model.bin"
THRESHOLD_FILE = "threshold.txt"
METRICS_FILE = "metrics.csv"
SNAPSHOT_FILE = "config.snapshot"

# Classes whose union contains at most one corrupted part; the locate
# default, where the gold index set has at most one element per set.
SINGLE_GOLD_CLASSES = ("C", "I", "CC", "CI", "CCC", "CCI", "CCCC", "CCCI")

_DATA_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    MalformedRecordError,
    MissingSemanticsError,
    CorruptFileError,
    VersionMismatchError,
    EmptyValidationError,
    PoolExhaustedError,
    evalkit.MissingGoldError,
    evalkit.LengthMismatchError,
    verifier.UnknownSetIdError,
)


def _default_seed() -> int:
    return int(os.environ.get("SETCOH_SEED", "0"))


def _write_snapshot(out: Path, command: str, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    snapshot = {"command": command, "version": __version__, "args": resolved}
    out.mkdir(parents=True, exist_ok=True)
    (out / SNAPSHOT_FILE).write_text(json.dumps(snapshot, indent=2, sort_keys=True, default=str) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_summary(out: Path, payload: dict) -> None:
    (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_corpus(data_dir: Path) -> DatasetSplit:
    """Rebuild the four splits from data.jsonl via the id prefix convention."""
    sets = load_jsonl(data_dir / DATA_FILE)
    split = DatasetSplit()
    buckets = split.splits()
    for s in sets:
        prefix = s.id.split("-", 1)[0]
        if prefix not in buckets:
            raise MalformedRecordError(
                f"set id {s.id!r} does not start with a split name (train/validation1/validation2/test)"
            )
        buckets[prefix].append(s)
    return split


def _split_sets(corpus: DatasetSplit, name: str) -> list[StatementSet]:
    sets = corpus.splits()[name]
    if not sets:
        raise MalformedRecordError(f"split {name!r} is empty")
    return sets


def cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "gen", args)
    train_count, eval_count = (int(x) for x in args.counts.split(","))
    config = GenConfig(
        style=args.style,
        train_count=train_count,
        eval_count=eval_count,
        qa_flips=tuple(args.qa_flips.split(",")),
    )
    corpus = build_splits(config, args.seed)
    ordered = corpus.train + corpus.validation1 + corpus.validation2 + corpus.test
    save_jsonl(ordered, out / DATA_FILE)
    print(f"wrote {len(ordered)} sets to {out / DATA_FILE}")
    return 0


def _save_threshold(out: Path, threshold: Threshold) -> None:
    lines = [
        repr(threshold.value),
        f"source={threshold.source}",
        f"epoch={threshold.learned_epoch}",
        f"degenerate={threshold.degenerate}",
    ]
    (out / THRESHOLD_FILE).write_text("\n".join(lines) + "\n")


def load_threshold(path: Path) -> Threshold:
    lines = path.read_text().splitlines()
    meta = dict(line.split("=", 1) for line in lines[1:] if "=" in line)
    return Threshold(
        value=float(lines[0]),
        source=meta.get("source", "energy"),
        learned_epoch=int(meta.get("epoch", "-1")),
        degenerate=meta.get("degenerate", "False") == "True",
    )


def cmd_train(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "train", args)
    corpus = load_corpus(Path(args.data))
    config = TrainerConfig(
        alpha=args.alpha,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        regime=args.regime,
        rng_seed=args.seed,
        pairs_per_epoch=args.pairs_per_epoch,
        val_per_class=args.val_per_class,
    )
    vocab = build_vocabulary(_split_sets(corpus, "train"))
    params = ModelParams.init(vocab, d=args.dim, h=args.hidden, seed=args.seed)
    if args.arch == "energy":
        result = trainer.train(params, corpus, config)
        save_params(result.params, out / MODEL_FILE)
        _save_threshold(out, result.threshold)
        rows = [
            [
                stats.epoch,
                repr(stats.mean_hinge_loss),
                repr(stats.val1_macro_acc),
                repr(stats.threshold),
            ]
            + [repr(stats.median_energies.get(tag, float("nan"))) for tag in ("C", "CC", "CI", "I", "II")]
            for stats in result.log
        ]
        _write_csv(
            out / "train_log.csv",
            ["epoch", "mean_hinge_loss", "val1_macro_acc", "threshold",
             "median_C", "median_CC", "median_CI", "median_I", "median_II"],
            rows,
        )
    else:
        params, threshold = trainer.train_binary(params, corpus, config)
        save_params(params, out / MODEL_FILE)
        _save_threshold(out, threshold)
    print(f"wrote {out / MODEL_FILE}")
    return 0


def resolve_scorer(spec: str, threshold_file: str | None) -> verifier.Scorer:
    """oracle | path to model.bin | external:scores.csv"""
    if spec == "oracle":
        return verifier.OracleScorer()
    if spec.startswith("external:"):
        return verifier.external_scorer_from_file(spec.split(":", 1)[1])
    params = load_params(spec)
    if threshold_file is None:
        threshold_file = str(Path(spec).parent / THRESHOLD_FILE)
    threshold = load_threshold(Path(threshold_file))
    if threshold.source == "inconsistent-softmax":
        return verifier.BinarySoftmaxScorer(params, threshold.value)
    return verifier.EnergyScorer(params, threshold.value)


def _mixture_for(args: argparse.Namespace, corpus: DatasetSplit,
                 classes=None) -> evalkit.EvalMixture:
    base_c, base_i = pools(_split_sets(corpus, args.split))
    return evalkit.build_eval_mixture(
        base_c, base_i, args.mixture_per_class, rng_seed=args.seed,
        classes=classes or evalkit.PROVENANCE_CLASSES,
    )


def _metrics_rows(report: evalkit.MetricsReport) -> list[list]:
    return [
        ["consistent", repr(report.consistent.precision), repr(report.consistent.recall),
         repr(report.consistent.f1), report.consistent.support],
        ["inconsistent", repr(report.inconsistent.precision), repr(report.inconsistent.recall),
         repr(report.inconsistent.f1), report.inconsistent.support],
        ["macro", "", "", repr(report.macro_f1), report.count],
    ]


def cmd_verify(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "verify", args)
    corpus = load_corpus(Path(args.data))
    scorer = resolve_scorer(args.scorer, args.threshold_file)
    mixture = _mixture_for(args, corpus)
    report = evalkit.verification_report(scorer, mixture.sets, strategy=args.strategy, mtr=args.mtr)
    _write_csv(out / METRICS_FILE, ["class", "precision", "recall", "f1", "support"],
               _metrics_rows(report))
    _write_summary(out, {
        "macro_f1": report.macro_f1,
        "f1_consistent": report.consistent.f1,
        "f1_inconsistent": report.inconsistent.f1,
        "strategy": args.strategy,
        "mtr": args.mtr,
        "count": report.count,
    })
    if args.dump_scores:
        scores = {s.id: scorer.score(s) for s in mixture.sets}
        verifier.write_scores_file(out / "scores.csv", scorer.threshold, scores)
    print(f"macro_f1={report.macro_f1:.4f} ({args.strategy})")
    return 0


def cmd_locate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "locate", args)
    corpus = load_corpus(Path(args.data))
    scorer = resolve_scorer(args.scorer, args.threshold_file)
    base_c, base_i = pools(_split_sets(corpus, args.split))
    base_c = [s for s in base_c if len(s) >= args.min_size]
    base_i = [s for s in base_i if len(s) >= args.min_size]
    classes = tuple(args.classes.split(","))
    mixture = evalkit.build_eval_mixture(
        base_c, base_i, args.mixture_per_class, rng_seed=args.seed, classes=classes
    )
    results = []
    for s in mixture.sets:
        gold = s.gold_inconsistent_indices
        if gold is None and s.label == "consistent":
            gold = ()
        results.append((verifier.locate(scorer, s), gold))
    report = evalkit.locate_metrics(results)
    _write_csv(out / "locate_report.csv", ["em", "precision", "recall", "f1", "count"],
               [[repr(report.em), repr(report.precision), repr(report.recall),
                 repr(report.f1), report.count]])
    _write_summary(out, {
        "em": report.em, "precision": report.precision,
        "recall": report.recall, "f1": report.f1, "count": report.count,
    })
    print(f"locate em={report.em:.4f} f1={report.f1:.4f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "sweep", args)
    corpus = load_corpus(Path(args.data))
    scorer = resolve_scorer(args.scorer, args.threshold_file)
    mixture = _mixture_for(args, corpus)
    grid = [float(x) for x in args.mtr_grid.split(",")]
    rows = evalkit.mtr_sweep(scorer, mixture, grid)
    _write_csv(out / "sweep.csv", ["mtr", "size_bucket", "macro_f1", "count"],
               [[repr(r.mtr), r.size_bucket, repr(r.macro_f1), r.count] for r in rows])
    best = max((r for r in rows if r.size_bucket == "all"), key=lambda r: r.macro_f1)
    _write_summary(out, {"best_mtr": best.mtr, "best_macro_f1": best.macro_f1})
    print(f"best mtr={best.mtr} macro_f1={best.macro_f1:.4f}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_snapshot(out, "ablate", args)
    corpus = load_corpus(Path(args.data))
    config = TrainerConfig(
        epochs=args.epochs,
        rng_seed=args.seed,
        pairs_per_epoch=args.pairs_per_epoch,
        val_per_class=args.val_per_class,
    )
    vocab = build_vocabulary(_split_sets(corpus, "train"))

    def params_factory() -> ModelParams:
        return ModelParams.init(vocab, d=args.dim, h=args.hidden, seed=args.seed)

    regimes = args.regimes.split(",")
    reports = evalkit.ablation_report(
        corpus, regimes, config, params_factory, eval_per_class=args.mixture_per_class
    )
    rows = []
    for report in reports:
        for q in report.quartiles:
            rows.append([report.regime, q.provenance, repr(q.q1), repr(q.median),
                         repr(q.q3), q.count, repr(report.macro_f1)])
    _write_csv(out / "ablation.csv",
               ["regime", "provenance", "q1", "median", "q3", "count", "macro_f1"], rows)
    _write_summary(out, {r.regime: r.macro_f1 for r in reports})
    for report in reports:
        print(f"{report.regime}: macro_f1={report.macro_f1:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setcoh", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, data: bool = True) -> None:
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--out", required=True)
        if data:
            p.add_argument("--data", required=True, help="directory containing data.jsonl")

    p = sub.add_parser("gen", help="generate a corpus")
    common(p, data=False)
    p.add_argument("--style", choices=["snli", "qa"], required=True)
    p.add_argument("--counts", default="2000,200", help="train,eval pair counts per label")
    p.add_argument("--qa-flips", default="no-to-yes,open-replace")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a scorer")
    common(p)
    p.add_argument("--arch", choices=["energy", "binary"], default="energy")
    p.add_argument("--regime", choices=sorted(trainer.REGIMES), default="eight")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--pairs-per-epoch", type=int, default=None)
    p.add_argument("--val-per-class", type=int, default=None)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--hidden", type=int, default=64)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="verification metrics on a class-balanced mixture")
    common(p)
    p.add_argument("--scorer", required=True, help="oracle | model.bin path | external:scores.csv")
    p.add_argument("--threshold-file", default=None)
    p.add_argument("--strategy", choices=["set", "elementwise"], default="set")
    p.add_argument("--mtr", type=float, default=0.0)
    p.add_argument("--mixture-per-class", type=int, default=50)
    p.add_argument("--split", choices=["train", "validation1", "validation2", "test"], default="test")
    p.add_argument("--dump-scores", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("locate", help="localization metrics over corrupted-QA mixtures")
    common(p)
    p.add_argument("--scorer", required=True)
    p.add_argument("--threshold-file", default=None)
    p.add_argument("--mixture-per-class", type=int, default=25)
    p.add_argument("--classes", default=",".join(SINGLE_GOLD_CLASSES))
    p.add_argument("--min-size", type=int, default=4)
    p.add_argument("--split", choices=["train", "validation1", "validation2", "test"], default="test")
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("sweep", help="element-wise macro-F1 over a tolerance-rate grid")
    common(p)
    p.add_argument("--scorer", required=True)
    p.add_argument("--threshold-file", default=None)
    p.add_argument("--mtr-grid", default="0,0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--mixture-per-class", type=int, default=25)
    p.add_argument("--split", choices=["train", "validation1", "validation2", "test"], default="validation2")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="compare contrast regimes")
    common(p)
    p.add_argument("--regimes", default="basic,six,eight")
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--pairs-per-epoch", type=int, default=None)
    p.add_argument("--val-per-class", type=int, default=None)
    p.add_argument("--mixture-per-class", type=int, default=25)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--hidden", type=int, default=64)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
