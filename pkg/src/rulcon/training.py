"""Multi-phase training: coarse contrast, then fine contrast per HS class, then regression.

Each epoch runs the three phases in that order, each as one full pass over
the training pool. With ``mgsc=False`` the two contrastive phases are
skipped and the same regression phase runs alone (the baseline).
"""
from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from .batching import BatchConfig, SkipClass, iter_coarse_epoch, iter_fine_epoch
from .cmapss import DatasetSplit
from .losses import mse_loss, supcon_loss
from .models import ModelConfig, RULModel, build_model
from .preprocessing import (LabelConfig, NormalizationStats, WindowConfig, WindowPool,
                            build_pool, fit_normalization)

log = logging.getLogger(__name__)

PHASES = ("coarse", "fine", "regression")
OPTIMIZERS = {"adam": torch.optim.Adam, "sgd": torch.optim.SGD, "adamw": torch.optim.AdamW}


@dataclass
class TrainConfig:
    epochs: int = 50
    lr_coarse: float = 1e-3
    lr_fine: float = 1e-3
    lr_regression: float = 1e-3
    coarse_batch: int = 128
    fine_batch: int = 64
    regression_batch: int = 256
    pair_policy: str = "jitter"
    jitter_sigma: float = 0.01
    fine_rul_tolerance: int = 0
    stratify_coarse: bool = False
    tau: float = 0.1
    supcon_reduction: str = "sum"
    seed: int = 17
    optimizer: str = "adam"
    encoder_trainable_in_regression: bool = True
    mgsc: bool = True
    keep_best: bool = False
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if min(self.lr_coarse, self.lr_fine, self.lr_regression) <= 0:
            raise ValueError("learning rates must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; choose from {sorted(OPTIMIZERS)}")
        if self.regression_batch < 1:
            raise ValueError("regression batch size must be positive")
        self.batch_config()  # validates policy and contrastive batch sizes

    def batch_config(self) -> BatchConfig:
        return BatchConfig(self.coarse_batch, self.fine_batch, self.pair_policy, self.jitter_sigma,
                           self.fine_rul_tolerance, self.stratify_coarse)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    coarse_loss: float | None
    fine_loss: float | None
    regression_loss: float
    wall_time: float
    seed: int
    fine_classes_skipped: list[int] = field(default_factory=list)

    def losses(self) -> tuple:
        """Everything except wall time, for reproducibility comparisons."""
        return (self.epoch, self.coarse_loss, self.fine_loss, self.regression_loss,
                self.seed, tuple(self.fine_classes_skipped))


@dataclass
class TrainHistory:
    seed: int
    records: list[EpochRecord] = field(default_factory=list)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(asdict(rec)) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "TrainHistory":
        records = [EpochRecord(**json.loads(line)) for line in Path(path).read_text().splitlines() if line]
        return cls(records[0].seed if records else -1, records)


class TrainingDiverged(RuntimeError):
    def __init__(self, phase: str, batch_index: int, seed: int, value: float):
        super().__init__(f"non-finite {phase} loss ({value}) at batch {batch_index}, seed {seed}")
        self.phase, self.batch_index, self.seed = phase, batch_index, seed


def set_determinism(seed: int, single_threaded: bool = True) -> None:
    torch.manual_seed(seed)
    if single_threaded:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)


def make_optimizers(model: RULModel, cfg: TrainConfig) -> dict:
    """One optimizer per phase; contrastive phases never touch the regressor."""
    opt = OPTIMIZERS[cfg.optimizer]
    contrastive = list(model.encoder.parameters()) + list(model.projector.parameters())
    regression = list(model.regressor.parameters())
    if cfg.encoder_trainable_in_regression:
        regression += list(model.encoder.parameters())
    return {
        "coarse": opt(contrastive, lr=cfg.lr_coarse),
        "fine": opt(contrastive, lr=cfg.lr_fine),
        "regression": opt(regression, lr=cfg.lr_regression),
    }


def _check(loss: torch.Tensor, phase: str, batch_index: int, seed: int) -> None:
    if not torch.isfinite(loss):
        raise TrainingDiverged(phase, batch_index, seed, float(loss.detach()))


def _contrastive_step(model, optimizer, views, labels, cfg, phase, batch_index) -> float:
    """One optimizer step; returns the batch's summed per-anchor loss."""
    x = torch.from_numpy(views)
    z = model.project(model.encode(x))
    loss = supcon_loss(z, torch.from_numpy(labels), cfg.tau, reduction=cfg.supcon_reduction,
                       tolerance=cfg.fine_rul_tolerance if phase == "fine" else 0)
    _check(loss, phase, batch_index, cfg.seed)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    value = float(loss.detach())
    return value * len(views) if cfg.supcon_reduction == "mean" else value


def coarse_phase(model, pool: WindowPool, cfg: TrainConfig, rng, optimizer) -> float:
    total, count = 0.0, 0
    for b, batch in enumerate(iter_coarse_epoch(pool, cfg.batch_config(), rng)):
        total += _contrastive_step(model, optimizer, batch.views, batch.hs_labels, cfg, "coarse", b)
        count += len(batch.views)
    return total / max(count, 1)


def fine_phase(model, pool: WindowPool, cfg: TrainConfig, rng, optimizer,
               n_classes: int) -> tuple[float | None, list[int]]:
    per_class, skipped = [], []
    b = 0
    for k in range(n_classes):
        try:
            batches = iter_fine_epoch(pool, k, cfg.batch_config(), rng)
            total, count = 0.0, 0
            for batch in batches:
                total += _contrastive_step(model, optimizer, batch.views, batch.rul_labels, cfg, "fine", b)
                count += len(batch.views)
                b += 1
        except SkipClass:
            skipped.append(k)
            continue
        per_class.append(total / count)
    return (float(np.mean(per_class)) if per_class else None), skipped


def regression_phase(model, pool: WindowPool, cfg: TrainConfig, rng, optimizer) -> float:
    order = rng.permutation(len(pool))
    targets = pool.rul_target.astype(np.float32)
    total = 0.0
    for b, start in enumerate(range(0, len(order), cfg.regression_batch)):
        idx = order[start:start + cfg.regression_batch]
        x = torch.from_numpy(pool.windows[idx])
        if cfg.encoder_trainable_in_regression:
            r = model.encode(x)
        else:
            with torch.no_grad():
                r = model.encode(x)
        loss = mse_loss(model.regress(r), torch.from_numpy(targets[idx]))
        _check(loss, "regression", b, cfg.seed)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        total += float(loss.detach()) * len(idx)
    return total / len(order)


def train_epoch(model: RULModel, pool: WindowPool, cfg: TrainConfig, rng: np.random.Generator,
                optimizers: dict | None = None, epoch: int = 1, n_classes: int | None = None,
                phase_hook: Callable[[str], None] | None = None) -> EpochRecord:
    """Run coarse, fine and regression phases once each over ``pool``.

    Logged contrastive losses are per-anchor averages over the whole pass,
    so they are comparable across batch sizes and reductions.
    """
    if len(pool) == 0:
        raise ValueError("empty training pool")
    optimizers = optimizers or make_optimizers(model, cfg)
    n_classes = n_classes if n_classes is not None else int(pool.hs_label.max()) + 1
    hook = phase_hook or (lambda _phase: None)
    start = time.perf_counter()
    model.train()
    coarse = fine = None
    skipped: list[int] = []
    if cfg.mgsc:
        hook("coarse")
        coarse = coarse_phase(model, pool, cfg, rng, optimizers["coarse"])
        hook("fine")
        fine, skipped = fine_phase(model, pool, cfg, rng, optimizers["fine"], n_classes)
    hook("regression")
    reg = regression_phase(model, pool, cfg, rng, optimizers["regression"])
    return EpochRecord(epoch, coarse, fine, reg, time.perf_counter() - start, cfg.seed, skipped)


def fit(model: RULModel, pool: WindowPool, cfg: TrainConfig, n_classes: int | None = None,
        on_epoch: Callable[[EpochRecord, RULModel], None] | None = None) -> TrainHistory:
    """Train ``model`` in place for ``cfg.epochs`` epochs."""
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory(cfg.seed)
    if cfg.epochs == 0:
        return history
    optimizers = make_optimizers(model, cfg)
    for epoch in range(1, cfg.epochs + 1):
        rec = train_epoch(model, pool, cfg, rng, optimizers, epoch, n_classes)
        history.records.append(rec)
        log.info("epoch %d  L_HS=%s  L_RUL=%s  L_reg=%.5f  (%.1fs)", epoch,
                 _fmt(rec.coarse_loss), _fmt(rec.fine_loss), rec.regression_loss, rec.wall_time)
        if on_epoch:
            on_epoch(rec, model)
    return history


def _fmt(x):
    return "-" if x is None else f"{x:.4f}"


@dataclass
class TrainResult:
    model: RULModel
    history: TrainHistory
    stats: NormalizationStats
    window_cfg: WindowConfig
    label_cfg: LabelConfig
    train_cfg: TrainConfig
    best_state: dict | None = None


def train(split: DatasetSplit, cfg: TrainConfig | None = None, model_cfg: ModelConfig | None = None,
          window_cfg: WindowConfig | None = None, label_cfg: LabelConfig | None = None,
          out_dir=None, per_condition: bool = False, clip: bool = False) -> TrainResult:
    """Fit normalization on the training engines, window them, and train.

    Writes ``final.pt`` (and ``best.pt`` with ``keep_best``, chosen on the
    training regression loss) plus ``history.jsonl`` when ``out_dir`` is set.
    """
    cfg = cfg or TrainConfig()
    window_cfg = window_cfg or WindowConfig()
    label_cfg = label_cfg or LabelConfig()
    model_cfg = model_cfg or ModelConfig()
    if model_cfg.window != window_cfg.width:
        model_cfg = ModelConfig(**{**model_cfg.to_dict(), "window": window_cfg.width})

    set_determinism(cfg.seed, cfg.deterministic)
    stats = fit_normalization(split.train, per_condition=per_condition)
    pool = build_pool(split.train, stats, window_cfg, label_cfg, clip=clip)
    log.info("%s: %d training windows", split.subset_name, len(pool))
    model = build_model(model_cfg, seed=cfg.seed)

    best = {"loss": float("inf"), "state": None}

    def keep_best(rec: EpochRecord, m: RULModel):
        if cfg.keep_best and rec.regression_loss < best["loss"]:
            best["loss"] = rec.regression_loss
            best["state"] = copy.deepcopy(m.state_dict())

    history = fit(model, pool, cfg, n_classes=label_cfg.n_classes, on_epoch=keep_best)
    result = TrainResult(model, history, stats, window_cfg, label_cfg, cfg, best["state"])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "final.pt", model, stats, window_cfg, label_cfg, cfg, split.subset_name)
        if best["state"] is not None:
            best_model = build_model(model_cfg)
            best_model.load_state_dict(best["state"])
            save_checkpoint(out / "best.pt", best_model, stats, window_cfg, label_cfg, cfg, split.subset_name)
        history.write_jsonl(out / "history.jsonl")
    return result


@dataclass
class Checkpoint:
    model: RULModel
    stats: NormalizationStats
    window_cfg: WindowConfig
    label_cfg: LabelConfig
    train_cfg: TrainConfig
    subset: str


def save_checkpoint(path, model: RULModel, stats: NormalizationStats, window_cfg: WindowConfig,
                    label_cfg: LabelConfig, train_cfg: TrainConfig, subset: str) -> Path:
    path = Path(path)
    torch.save({
        "state_dict": model.state_dict(),
        "model_cfg": model.cfg.to_dict(),
        "stats": stats.to_dict(),
        "window_cfg": asdict(window_cfg),
        "label_cfg": label_cfg.to_dict(),
        "train_cfg": asdict(train_cfg),
        "subset": subset,
    }, path)
    return path


def load_checkpoint(path) -> Checkpoint:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    model = RULModel(ModelConfig(**blob["model_cfg"]))
    model.load_state_dict(blob["state_dict"])
    model.eval()
    lc = blob["label_cfg"]
    return Checkpoint(model, NormalizationStats.from_dict(blob["stats"]),
                      WindowConfig(**blob["window_cfg"]),
                      LabelConfig(lc["rul_cap"], tuple(tuple(b) for b in lc["hs_bands"])),
                      TrainConfig(**blob["train_cfg"]), blob["subset"])
