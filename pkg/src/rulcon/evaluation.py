"""Test-set prediction, RMSE / Score, comparison tables and embedding export."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import torch

from .cmapss import SUBSETS, DatasetSplit
from .models import RULModel
from .preprocessing import (LabelConfig, NormalizationStats, WindowConfig, WindowPool,
                            apply_normalization, build_pool, make_windows)

# Published reference numbers (RMSE, Score) per (encoder, mgsc) and subset.
PUBLISHED_RESULTS = {
    ("cnn_lstm", False): {"FD001": (14.78, 405.30), "FD002": (22.11, 10438.61),
                          "FD003": (14.65, 393.92), "FD004": (26.69, 11123.60)},
    ("cnn_lstm", True): {"FD001": (12.63, 301.12), "FD002": (18.85, 1879.65),
                         "FD003": (12.78, 313.08), "FD004": (25.37, 6927.23)},
    ("cnn", False): {"FD001": (14.49, 396.08), "FD002": (21.57, 3224.94),
                     "FD003": (14.18, 382.21), "FD004": (25.81, 9882.99)},
    ("cnn", True): {"FD001": (13.65, 280.19), "FD002": (20.38, 2988.29),
                    "FD003": (13.05, 286.01), "FD004": (24.85, 14410.83)},
    ("lstm", False): {"FD001": (13.22, 292.05), "FD002": (16.03, 1091.71),
                      "FD003": (11.46, 244.77), "FD004": (19.4877, 4274.96)},
    ("lstm", True): {"FD001": (12.54, 283.49), "FD002": (15.94, 1074.34),
                     "FD003": (11.33, 230.08), "FD004": (18.92, 1970.88)},
}


@dataclass
class PredictionRecord:
    engine_id: int
    predicted: float
    true: float

    @property
    def delta(self) -> float:
        return self.predicted - self.true


def _deltas(records) -> np.ndarray:
    if len(records) == 0:
        raise ValueError("no predictions to score")
    if isinstance(records[0], PredictionRecord):
        return np.array([r.delta for r in records], dtype=np.float64)
    return np.asarray(records, dtype=np.float64)


def rmse(records) -> float:
    """Root mean squared error; accepts prediction records or raw errors."""
    d = _deltas(records)
    return math.sqrt(float(np.mean(d * d)))


def score(records) -> float:
    """Asymmetric prognostics score: late predictions (positive error) cost more.

    Each error adds ``exp(-d/13) - 1`` if ``d <= 0`` and ``exp(d/10) - 1``
    otherwise.
    """
    d = _deltas(records)
    return float(np.sum(np.where(d <= 0, np.expm1(-d / 13.0), np.expm1(d / 10.0))))


@torch.no_grad()
def predict_pool(model: RULModel, pool: WindowPool, batch_size: int = 512) -> np.ndarray:
    """Normalized (0, 1) predictions for every window of a pool."""
    model.eval()
    out = []
    for start in range(0, len(pool), batch_size):
        x = torch.from_numpy(pool.windows[start:start + batch_size])
        out.append(model(x).numpy())
    return np.concatenate(out) if out else np.zeros(0)


def predict_testset(model: RULModel, split: DatasetSplit, stats: NormalizationStats,
                    window_cfg: WindowConfig | None = None, label_cfg: LabelConfig | None = None,
                    clip: bool = False) -> list[PredictionRecord]:
    """One prediction per test engine, from its last (possibly padded) window."""
    window_cfg = window_cfg or WindowConfig()
    label_cfg = label_cfg or LabelConfig()
    if len(split.test_rul_truth) != len(split.test):
        raise ValueError("missing ground-truth RUL for some test engines")
    pool = build_pool(split.test, stats, window_cfg, label_cfg, rul_truth=split.test_rul_truth,
                      last_only=True, clip=clip)
    preds = predict_pool(model, pool) * label_cfg.rul_cap
    return [PredictionRecord(int(e), float(p), float(min(t, label_cfg.rul_cap)))
            for e, p, t in zip(pool.engine_id, preds, split.test_rul_truth)]


@dataclass
class MetricsReport:
    subset: str
    encoder: str
    mgsc: bool
    rmse: float
    score: float
    seed: int
    records: list[PredictionRecord] = field(default_factory=list)
    # test-side truth is capped at the training RUL cap before scoring
    true_rul_capped: bool = True

    @classmethod
    def from_records(cls, records, subset, encoder, mgsc, seed) -> "MetricsReport":
        return cls(subset, encoder, bool(mgsc), rmse(records), score(records), seed, list(records))

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        return d

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(json.dumps(self.summary(), indent=2) + "\n")
        pd.DataFrame([{"engine_id": r.engine_id, "predicted_rul": r.predicted, "true_rul": r.true,
                       "delta": r.delta} for r in self.records]).to_csv(out / "predictions.csv", index=False)
        return out

    @classmethod
    def read(cls, run_dir) -> "MetricsReport":
        run_dir = Path(run_dir)
        meta = json.loads((run_dir / "metrics.json").read_text())
        records = []
        pred_file = run_dir / "predictions.csv"
        if pred_file.exists():
            df = pd.read_csv(pred_file)
            records = [PredictionRecord(int(r.engine_id), float(r.predicted_rul), float(r.true_rul))
                       for r in df.itertuples()]
        return cls(records=records, **meta)


def evaluate_checkpoint(ckpt, split: DatasetSplit) -> MetricsReport:
    records = predict_testset(ckpt.model, split, ckpt.stats, ckpt.window_cfg, ckpt.label_cfg)
    return MetricsReport.from_records(records, split.subset_name, ckpt.model.cfg.encoder_kind,
                                      ckpt.train_cfg.mgsc, ckpt.train_cfg.seed)


DEFAULT_EXPORT_ENGINES = (1, 2, 3, 4)


@torch.no_grad()
def export_embeddings(model: RULModel, split: DatasetSplit, engines: Sequence[int],
                      stats: NormalizationStats, window_cfg: WindowConfig | None = None,
                      label_cfg: LabelConfig | None = None) -> pd.DataFrame:
    """Encoder embeddings for every window of the chosen test engines.

    Columns: engine_id, end_cycle, rul_label, hs_label, emb_0 .. emb_{e-1}.
    """
    window_cfg = window_cfg or WindowConfig()
    label_cfg = label_cfg or LabelConfig()
    by_id = {t.engine_id: (t, truth) for t, truth in zip(split.test, split.test_rul_truth)}
    unknown = [e for e in engines if e not in by_id]
    if unknown:
        raise KeyError(f"unknown test engine ids: {unknown}")
    columns = ["engine_id", "end_cycle", "rul_label", "hs_label"] + \
        [f"emb_{k}" for k in range(model.cfg.embedding_dim)]
    frames = []
    model.eval()
    for e in engines:
        traj, truth = by_id[e]
        pool = make_windows(apply_normalization(traj, stats), window_cfg, label_cfg, rul_at_last=truth)
        emb = model.encode(torch.from_numpy(pool.windows)).numpy()
        frame = pd.DataFrame(emb, columns=columns[4:])
        frame.insert(0, "hs_label", pool.hs_label)
        frame.insert(0, "rul_label", pool.rul_label)
        frame.insert(0, "end_cycle", pool.end_cycle)
        frame.insert(0, "engine_id", pool.engine_id)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


@torch.no_grad()
def alignment_similarity(model: RULModel, pool: WindowPool) -> dict:
    """Mean cosine similarity of projected embeddings for four kinds of pairs.

    ``intra_hs`` / ``inter_hs``: same vs different health status.
    ``same_rul`` / ``diff_rul``: pairs inside one health status with equal vs
    different RUL label. Self-pairs are excluded.
    """
    model.eval()
    z = model.project(model.encode(torch.from_numpy(pool.windows))).double().numpy()
    sim = z @ z.T
    off = ~np.eye(len(z), dtype=bool)
    same_hs = (pool.hs_label[:, None] == pool.hs_label[None, :]) & off
    same_rul = pool.rul_label[:, None] == pool.rul_label[None, :]
    return {
        "intra_hs": float(sim[same_hs].mean()),
        "inter_hs": float(sim[~same_hs & off].mean()),
        "same_rul": float(sim[same_hs & same_rul].mean()),
        "diff_rul": float(sim[same_hs & ~same_rul].mean()),
    }


@dataclass
class ComparisonTable:
    runs: pd.DataFrame    # one row per (encoder, mgsc, subset, seed)
    summary: pd.DataFrame  # seed medians, one row per (encoder, mgsc)

    def render(self) -> str:
        lines = ["Median over seeds (RMSE / Score); true test RUL capped at the training cap", ""]
        lines.append(self.summary.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
        lines += ["", "Individual runs", ""]
        lines.append(self.runs.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.summary.to_csv(out / "report.csv", index=False)
        self.runs.to_csv(out / "report_runs.csv", index=False)
        (out / "report.txt").write_text(self.render())
        return out


def emit_report(reports: Sequence[MetricsReport], include_published: bool = False) -> ComparisonTable:
    """Group runs by (encoder, mgsc); columns are subset x {RMSE, Score}.

    Repeated keys with different seeds are all kept in ``runs``; ``summary``
    holds their medians and the seed count. ``include_published`` adds the
    published reference rows for the same keys.
    """
    if not reports:
        raise ValueError("no reports to tabulate")
    runs = pd.DataFrame([{"encoder": r.encoder, "mgsc": r.mgsc, "subset": r.subset, "seed": r.seed,
                          "rmse": r.rmse, "score": r.score} for r in reports])
    runs = runs.sort_values(["encoder", "mgsc", "subset", "seed"]).reset_index(drop=True)
    med = runs.groupby(["encoder", "mgsc", "subset"]).agg(
        rmse=("rmse", "median"), score=("score", "median"), seeds=("seed", "nunique")).reset_index()
    rows = []
    for (enc, mgsc), grp in med.groupby(["encoder", "mgsc"], sort=True):
        row = {"encoder": enc, "mgsc": bool(mgsc), "source": "run"}
        for sub in SUBSETS:
            hit = grp[grp.subset == sub]
            row[f"{sub}_rmse"] = float(hit.rmse.iloc[0]) if len(hit) else np.nan
            row[f"{sub}_score"] = float(hit.score.iloc[0]) if len(hit) else np.nan
            row[f"{sub}_seeds"] = int(hit.seeds.iloc[0]) if len(hit) else 0
        rows.append(row)
        if include_published and (enc, bool(mgsc)) in PUBLISHED_RESULTS:
            pub = {"encoder": enc, "mgsc": bool(mgsc), "source": "published"}
            for sub in SUBSETS:
                pub[f"{sub}_rmse"], pub[f"{sub}_score"] = PUBLISHED_RESULTS[(enc, bool(mgsc))][sub]
                pub[f"{sub}_seeds"] = 0
            rows.append(pub)
    summary = pd.DataFrame(rows)
    # drop subsets nobody ran
    for sub in SUBSETS:
        if (summary[f"{sub}_seeds"] == 0).all() and not include_published:
            summary = summary.drop(columns=[f"{sub}_rmse", f"{sub}_score", f"{sub}_seeds"])
    return ComparisonTable(runs, summary)


def collect_reports(runs_dir) -> list[MetricsReport]:
    return [MetricsReport.read(p.parent) for p in sorted(Path(runs_dir).rglob("metrics.json"))]
