"""Grid runs over subsets x encoders x {baseline, MGSC} x seeds."""
from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Iterable

from .cmapss import load_subset
from .evaluation import MetricsReport, emit_report, evaluate_checkpoint
from .models import ModelConfig
from .training import Checkpoint, TrainConfig, train

log = logging.getLogger(__name__)


def run_name(subset: str, encoder: str, mgsc: bool, seed: int) -> str:
    return f"{subset}_{encoder}_{'mgsc' if mgsc else 'base'}_s{seed}"


def run_one(split, encoder: str, mgsc: bool, seed: int, cfg: TrainConfig | None = None,
            model_cfg: ModelConfig | None = None, out_dir=None, per_condition: bool = False) -> MetricsReport:
    cfg = replace(cfg or TrainConfig(), seed=seed, mgsc=mgsc)
    model_cfg = replace(model_cfg or ModelConfig(), encoder_kind=encoder)
    run_dir = None if out_dir is None else Path(out_dir) / run_name(split.subset_name, encoder, mgsc, seed)
    result = train(split, cfg, model_cfg, out_dir=run_dir, per_condition=per_condition)
    ckpt = Checkpoint(result.model, result.stats, result.window_cfg, result.label_cfg, cfg, split.subset_name)
    report = evaluate_checkpoint(ckpt, split)
    if run_dir is not None:
        report.write(run_dir)
    log.info("%s: RMSE %.2f Score %.2f", run_name(split.subset_name, encoder, mgsc, seed),
             report.rmse, report.score)
    return report


def run_grid(data_root, subsets: Iterable[str] = ("FD001",), encoders: Iterable[str] = ("cnn_lstm",),
             mgsc_modes: Iterable[bool] = (False, True), seeds: Iterable[int] = (0, 1, 2),
             cfg: TrainConfig | None = None, out_dir=None, per_condition: bool = False) -> list[MetricsReport]:
    """Train and score every combination; existing ``metrics.json`` runs are reused."""
    reports = []
    for subset in subsets:
        split = load_subset(subset, data_root)
        for encoder in encoders:
            for mgsc in mgsc_modes:
                for seed in seeds:
                    done = None if out_dir is None else \
                        Path(out_dir) / run_name(subset, encoder, mgsc, seed) / "metrics.json"
                    if done is not None and done.exists():
                        reports.append(MetricsReport.read(done.parent))
                        continue
                    reports.append(run_one(split, encoder, mgsc, seed, cfg, out_dir=out_dir,
                                           per_condition=per_condition))
    if out_dir is not None and reports:
        emit_report(reports, include_published=True).write(out_dir)
    return reports
