"""Command line entry point: ``rulcon <command> ...``.

Commands: ingest, preprocess, train, evaluate, report, export-embeddings, plot.
``--data-root`` may point at the raw CMAPSS text files or at a directory
written by ``ingest`` (``<subset>.npz``). It defaults to ``$RULCON_DATA`` or
``data/CMAPSS``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .cmapss import SUBSETS, load_saved_split, load_subset, save_split, validate_counts
from .evaluation import (DEFAULT_EXPORT_ENGINES, MetricsReport, collect_reports, emit_report,
                         evaluate_checkpoint, export_embeddings)
from .models import ENCODER_KINDS, ModelConfig
from .preprocessing import LabelConfig, WindowConfig, build_pool, default_bands, fit_normalization
from .training import TrainConfig, load_checkpoint, train

log = logging.getLogger("rulcon")


def default_data_root() -> str:
    return os.environ.get("RULCON_DATA", "data/CMAPSS")


def load_split(subset: str, data_root, check_counts: bool = True):
    saved = Path(data_root) / f"{subset}.npz"
    if saved.is_file():
        split = load_saved_split(saved)
        if check_counts:
            validate_counts(split)
        return split
    return load_subset(subset, data_root, check_counts=check_counts)


def cmd_ingest(args):
    split = load_subset(args.subset, args.data_root, check_counts=not args.skip_count_check)
    path = save_split(split, Path(args.out) / f"{args.subset}.npz")
    print(f"{args.subset}: {len(split.train)} train / {len(split.test)} test engines -> {path}")


def cmd_preprocess(args):
    split = load_split(args.subset, args.data_root, not args.skip_count_check)
    wc = WindowConfig(args.window, args.step)
    lc = LabelConfig(args.cap, default_bands(args.cap))
    stats = fit_normalization(split.train, per_condition=args.per_condition)
    out = Path(args.out)
    train_pool = build_pool(split.train, stats, wc, lc, clip=args.clip)
    test_pool = build_pool(split.test, stats, wc, lc, rul_truth=split.test_rul_truth,
                           last_only=True, clip=args.clip)
    train_pool.save(out / f"{args.subset}_train_windows.npz")
    test_pool.save(out / f"{args.subset}_test_last_windows.npz")
    (out / f"{args.subset}_preprocess.json").write_text(json.dumps(
        {"window": asdict(wc), "labels": lc.to_dict(), "stats": stats.to_dict()}, indent=1))
    print(f"{args.subset}: {len(train_pool)} training windows, {len(test_pool)} test windows -> {out}")


def _train_config(args) -> tuple[TrainConfig, ModelConfig]:
    overrides = json.loads(Path(args.config).read_text()) if args.config else {}
    model_over = overrides.pop("model", {})
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    overrides["seed"] = args.seed
    overrides["mgsc"] = args.mgsc == "on"
    cfg = TrainConfig.from_dict(overrides)
    model_cfg = ModelConfig(**{**model_over, "encoder_kind": args.encoder})
    return cfg, model_cfg


def cmd_train(args):
    cfg, model_cfg = _train_config(args)
    split = load_split(args.subset, args.data_root, not args.skip_count_check)
    out = Path(args.out)
    result = train(split, cfg, model_cfg, out_dir=out, per_condition=args.per_condition)
    (out / "train_config.json").write_text(json.dumps(
        {"train": asdict(cfg), "model": result.model.cfg.to_dict(), "subset": args.subset}, indent=1))
    print(f"trained {args.encoder} (mgsc={args.mgsc}) on {args.subset}: "
          f"{len(result.history.records)} epochs -> {out / 'final.pt'}")
    if args.evaluate:
        from .training import Checkpoint
        ckpt = Checkpoint(result.model, result.stats, result.window_cfg, result.label_cfg, cfg, args.subset)
        report = evaluate_checkpoint(ckpt, split)
        report.write(out)
        print(f"test RMSE {report.rmse:.2f}  Score {report.score:.2f}")


def cmd_evaluate(args):
    ckpt = load_checkpoint(args.checkpoint)
    subset = args.subset or ckpt.subset
    split = load_split(subset, args.data_root, not args.skip_count_check)
    report = evaluate_checkpoint(ckpt, split)
    out = report.write(args.out)
    print(f"{subset}: RMSE {report.rmse:.2f}  Score {report.score:.2f} ({len(report.records)} engines) -> {out}")


def cmd_report(args):
    reports = collect_reports(args.runs)
    if not reports:
        sys.exit(f"no metrics.json found under {args.runs}")
    table = emit_report(reports, include_published=args.published)
    table.write(args.out or args.runs)
    print(table.render())


def cmd_export_embeddings(args):
    ckpt = load_checkpoint(args.checkpoint)
    subset = args.subset or ckpt.subset
    split = load_split(subset, args.data_root, not args.skip_count_check)
    engines = [int(e) for e in args.engines.split(",") if e.strip()] if args.engines else []
    dump = export_embeddings(ckpt.model, split, engines, ckpt.stats, ckpt.window_cfg, ckpt.label_cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    dump.to_csv(args.out, index=False)
    print(f"{len(dump)} embedding rows -> {args.out}")


def cmd_plot(args):
    import pandas as pd

    from .plots import plot_embeddings, plot_predictions

    if args.run:
        report = MetricsReport.read(args.run)
        path = plot_predictions(report.records, Path(args.run) / "predictions.png",
                                f"{report.subset} {report.encoder} mgsc={report.mgsc}")
        print(f"-> {path}")
    if args.embeddings:
        dump = pd.read_csv(args.embeddings)
        path = plot_embeddings(dump, Path(args.embeddings).with_suffix(".png"))
        print(f"-> {path}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rulcon", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, subset_required=True):
        sp.add_argument("--subset", choices=SUBSETS, required=subset_required)
        sp.add_argument("--data-root", default=default_data_root())
        sp.add_argument("--skip-count-check", action="store_true",
                        help="accept engine counts that differ from the published subset sizes")

    sp = sub.add_parser("ingest", help="parse raw CMAPSS files into a validated .npz")
    data_args(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("preprocess", help="normalize and window a subset")
    data_args(sp)
    sp.add_argument("--window", type=int, default=30)
    sp.add_argument("--step", type=int, default=1)
    sp.add_argument("--cap", type=int, default=125)
    sp.add_argument("--per-condition", action="store_true")
    sp.add_argument("--clip", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("train", help="multi-phase training")
    data_args(sp)
    sp.add_argument("--encoder", choices=ENCODER_KINDS, default="cnn_lstm")
    sp.add_argument("--mgsc", choices=("on", "off"), default="on")
    sp.add_argument("--seed", type=int, default=17)
    sp.add_argument("--config", help="JSON file of TrainConfig fields, plus an optional 'model' object")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--per-condition", action="store_true")
    sp.add_argument("--evaluate", action="store_true", help="also score the test set")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="score a checkpoint on the test set")
    data_args(sp, subset_required=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("report", help="tabulate metrics.json files under a directory")
    sp.add_argument("--runs", required=True)
    sp.add_argument("--out")
    sp.add_argument("--published", action="store_true", help="add published reference rows")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("export-embeddings", help="dump encoder embeddings of test engines")
    data_args(sp, subset_required=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--engines", default=",".join(map(str, DEFAULT_EXPORT_ENGINES)))
    sp.add_argument("--out", default="embeddings.csv")
    sp.set_defaults(func=cmd_export_embeddings)

    sp = sub.add_parser("plot", help="render prediction curves and embedding maps")
    sp.add_argument("--run", help="directory holding metrics.json / predictions.csv")
    sp.add_argument("--embeddings", help="CSV written by export-embeddings")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    args.func(args)


if __name__ == "__main__":
    main()
