"""Min-max scaling to [-1, 1], sliding windows and RUL / health-status labels."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cmapss import N_CHANNELS, RawTrajectory

DEFAULT_HS_BANDS = ((125, 125), (100, 124), (75, 99), (50, 74), (25, 49), (0, 24))


def default_bands(cap: int = 125, width: int = 25) -> tuple[tuple[int, int], ...]:
    """``{cap}``, then ``width``-cycle bands downward; the last band ends at 0.

    For cap 125 this gives the standard six health-status bands.
    """
    bands = [(cap, cap)]
    hi = cap - 1
    while hi >= 0:
        lo = max(0, hi - width + 1)
        bands.append((lo, hi))
        hi = lo - 1
    return tuple(bands)


@dataclass
class WindowConfig:
    width: int = 30
    step: int = 1

    def __post_init__(self):
        if self.width < 1 or self.step < 1:
            raise ValueError(f"window width and step must be >= 1, got {self.width}, {self.step}")


@dataclass
class LabelConfig:
    """RUL cap and the inclusive RUL bands defining each health-status class.

    Band k is health status ``HSk``. Bands must tile every integer in
    ``[0, rul_cap]`` exactly once.
    """
    rul_cap: int = 125
    hs_bands: tuple[tuple[int, int], ...] = DEFAULT_HS_BANDS

    def __post_init__(self):
        self.hs_bands = tuple((int(lo), int(hi)) for lo, hi in self.hs_bands)
        if self.rul_cap < 1:
            raise ValueError("rul_cap must be positive")
        covered = np.zeros(self.rul_cap + 1, dtype=np.int64)
        for lo, hi in self.hs_bands:
            if lo > hi or lo < 0 or hi > self.rul_cap:
                raise ValueError(f"band ({lo}, {hi}) is empty or outside [0, {self.rul_cap}]")
            covered[lo:hi + 1] += 1
        if not np.all(covered == 1):
            bad = np.flatnonzero(covered != 1)
            raise ValueError(f"HS bands must cover [0, {self.rul_cap}] exactly once; "
                             f"problem at RUL {bad[:5].tolist()}")
        self._lookup = np.empty(self.rul_cap + 1, dtype=np.int64)
        for k, (lo, hi) in enumerate(self.hs_bands):
            self._lookup[lo:hi + 1] = k

    @property
    def n_classes(self) -> int:
        return len(self.hs_bands)

    def to_dict(self) -> dict:
        return {"rul_cap": self.rul_cap, "hs_bands": [list(b) for b in self.hs_bands]}


def map_hs(rul, cfg: LabelConfig):
    """Health-status class index for an RUL value (scalar or array)."""
    arr = np.asarray(rul)
    if np.any(arr < 0) or np.any(arr > cfg.rul_cap) or np.any(arr != np.floor(arr)):
        raise ValueError(f"RUL must be an integer in [0, {cfg.rul_cap}], got {rul}")
    out = cfg._lookup[arr.astype(np.int64)]
    return int(out) if out.ndim == 0 else out


def compute_rul_label(end_cycle, last_cycle: int, cap: int, rul_at_last: int = 0):
    """Capped RUL at ``end_cycle``.

    Training engines run to failure, so ``rul_at_last`` is 0 and the raw RUL
    is ``last_cycle - end_cycle``. Test engines pass the ground-truth RUL of
    their final recorded cycle as ``rul_at_last``.
    """
    raw = np.asarray(rul_at_last + last_cycle - np.asarray(end_cycle))
    if np.any(raw < 0):
        raise ValueError(f"negative RUL (end_cycle={end_cycle}, last_cycle={last_cycle}, "
                         f"rul_at_last={rul_at_last})")
    out = np.minimum(raw, cap)
    return int(out) if out.ndim == 0 else out.astype(np.int64)


def condition_key(op_settings: np.ndarray) -> list[tuple]:
    """Operating-condition id per row, from rounded op settings.

    The six CMAPSS flight conditions sit on well separated op-setting
    clusters, so rounding to (0, 2, 0) decimals recovers them.
    """
    rounded = np.column_stack([
        np.round(op_settings[:, 0], 0),
        np.round(op_settings[:, 1], 2),
        np.round(op_settings[:, 2], 0),
    ])
    return [tuple(r) for r in rounded.tolist()]


@dataclass
class NormalizationStats:
    x_min: np.ndarray
    x_max: np.ndarray
    # condition key -> (x_min, x_max); empty unless fitted per condition
    per_condition: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_min = np.asarray(self.x_min, dtype=np.float64)
        self.x_max = np.asarray(self.x_max, dtype=np.float64)
        if np.any(self.x_min > self.x_max):
            raise ValueError("x_min exceeds x_max")

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min.tolist(),
            "x_max": self.x_max.tolist(),
            "per_condition": [[list(k), lo.tolist(), hi.tolist()]
                              for k, (lo, hi) in self.per_condition.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        per = {tuple(k): (np.asarray(lo), np.asarray(hi)) for k, lo, hi in d.get("per_condition", [])}
        return cls(np.asarray(d["x_min"]), np.asarray(d["x_max"]), per)


def fit_normalization(train: Sequence[RawTrajectory], per_condition: bool = False) -> NormalizationStats:
    """Per-channel extrema over every training row of every engine."""
    if len(train) == 0:
        raise ValueError("cannot fit normalization on an empty training set")
    data = np.vstack([t.channels for t in train])
    stats = NormalizationStats(data.min(axis=0), data.max(axis=0))
    if per_condition:
        keys = condition_key(data[:, :3])
        groups: dict = {}
        for idx, key in enumerate(keys):
            groups.setdefault(key, []).append(idx)
        for key, idx in groups.items():
            rows = data[idx]
            stats.per_condition[key] = (rows.min(axis=0), rows.max(axis=0))
    return stats


def _scale(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    constant = span == 0
    out = 2.0 * (x - lo) / np.where(constant, 1.0, span) - 1.0
    out[..., constant] = 0.0
    return out


@dataclass
class NormalizedTrajectory:
    engine_id: int
    cycles: np.ndarray
    values: np.ndarray  # T x 24

    @property
    def length(self) -> int:
        return len(self.cycles)


def apply_normalization(traj: RawTrajectory, stats: NormalizationStats,
                        clip: bool = False) -> NormalizedTrajectory:
    """Map every channel to ``2 (x - min) / (max - min) - 1``.

    Channels that were constant on the training split map to 0. Values
    outside the training range are passed through unless ``clip`` is set.
    """
    x = traj.channels
    if stats.per_condition:
        out = np.empty_like(x)
        for row, key in enumerate(condition_key(traj.op_settings)):
            lo, hi = stats.per_condition.get(key, (stats.x_min, stats.x_max))
            out[row] = _scale(x[row], lo, hi)
    else:
        out = _scale(x, stats.x_min, stats.x_max)
    if clip:
        np.clip(out, -1.0, 1.0, out=out)
    return NormalizedTrajectory(traj.engine_id, traj.cycles.copy(), out)


@dataclass
class WindowSample:
    window: np.ndarray
    rul_label: int
    rul_target: float
    hs_label: int
    engine_id: int
    end_cycle: int


@dataclass
class WindowPool:
    """Column-oriented collection of window samples.

    ``windows`` is ``N x W x C`` float32; label columns are int64 of length N.
    Indexing with an int gives a :class:`WindowSample`, with an array gives a
    sub-pool.
    """
    windows: np.ndarray
    rul_label: np.ndarray
    hs_label: np.ndarray
    engine_id: np.ndarray
    end_cycle: np.ndarray
    rul_cap: int = 125

    def __post_init__(self):
        self.windows = np.asarray(self.windows, dtype=np.float32)
        for name in ("rul_label", "hs_label", "engine_id", "end_cycle"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        n = len(self.windows)
        if not all(len(getattr(self, c)) == n for c in ("rul_label", "hs_label", "engine_id", "end_cycle")):
            raise ValueError("pool columns have different lengths")

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def rul_target(self) -> np.ndarray:
        return self.rul_label / float(self.rul_cap)

    def __getitem__(self, idx):
        if np.isscalar(idx) or isinstance(idx, (int, np.integer)):
            i = int(idx)
            return WindowSample(self.windows[i], int(self.rul_label[i]),
                                float(self.rul_label[i]) / self.rul_cap, int(self.hs_label[i]),
                                int(self.engine_id[i]), int(self.end_cycle[i]))
        idx = np.asarray(idx)
        return WindowPool(self.windows[idx], self.rul_label[idx], self.hs_label[idx],
                          self.engine_id[idx], self.end_cycle[idx], self.rul_cap)

    @classmethod
    def concat(cls, pools: Sequence["WindowPool"]) -> "WindowPool":
        pools = [p for p in pools if p is not None]
        if not pools:
            raise ValueError("nothing to concatenate")
        return cls(
            np.concatenate([p.windows for p in pools]),
            np.concatenate([p.rul_label for p in pools]),
            np.concatenate([p.hs_label for p in pools]),
            np.concatenate([p.engine_id for p in pools]),
            np.concatenate([p.end_cycle for p in pools]),
            pools[0].rul_cap,
        )

    def save(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez_compressed(fh, windows=self.windows, rul_label=self.rul_label,
                                hs_label=self.hs_label, engine_id=self.engine_id,
                                end_cycle=self.end_cycle, rul_cap=np.int64(self.rul_cap))
        return path

    @classmethod
    def load(cls, path: str | os.PathLike) -> "WindowPool":
        with np.load(path) as d:
            return cls(d["windows"], d["rul_label"], d["hs_label"], d["engine_id"],
                       d["end_cycle"], int(d["rul_cap"]))


def window_count(T: int, width: int, step: int) -> int:
    if T < width:
        return 1
    return (T - width) // step + 1


def make_windows(traj: NormalizedTrajectory, wc: WindowConfig, lc: LabelConfig,
                 rul_at_last: int = 0) -> WindowPool:
    """Cut windows ending at cycles W, W+s, ... and label each by its end cycle.

    Trajectories shorter than W are front-padded with copies of their first
    row, giving a single window that ends at the last cycle.
    """
    values = traj.values.astype(np.float32)
    T, W = traj.length, wc.width
    if T < W:
        pad = np.repeat(values[:1], W - T, axis=0)
        windows = np.concatenate([pad, values])[None]
        end_idx = np.array([T - 1])
    else:
        end_idx = np.arange(W - 1, T, wc.step)
        view = np.lib.stride_tricks.sliding_window_view(values, W, axis=0)  # (T-W+1, C, W)
        windows = view[end_idx - (W - 1)].transpose(0, 2, 1).copy()
    end_cycle = traj.cycles[end_idx]
    rul = compute_rul_label(end_cycle, int(traj.cycles[-1]), lc.rul_cap, rul_at_last)
    return WindowPool(windows, rul, map_hs(rul, lc), np.full(len(end_idx), traj.engine_id),
                      end_cycle, lc.rul_cap)


def build_pool(trajs: Sequence[RawTrajectory], stats: NormalizationStats,
               wc: WindowConfig | None = None, lc: LabelConfig | None = None,
               rul_truth: Sequence[int] | None = None, last_only: bool = False,
               clip: bool = False) -> WindowPool:
    """Normalize and window a list of trajectories.

    ``rul_truth`` gives the RUL at the final cycle of each trajectory (test
    engines); leave it out for run-to-failure training engines. ``last_only``
    keeps just the final window of each engine.
    """
    wc = wc or WindowConfig()
    lc = lc or LabelConfig()
    if rul_truth is not None and len(rul_truth) != len(trajs):
        raise ValueError("need one RUL truth per trajectory")
    pools = []
    for k, traj in enumerate(trajs):
        norm = apply_normalization(traj, stats, clip=clip)
        pool = make_windows(norm, wc, lc, rul_at_last=0 if rul_truth is None else int(rul_truth[k]))
        pools.append(pool[np.array([len(pool) - 1])] if last_only else pool)
    if not pools:
        return WindowPool(np.zeros((0, wc.width, N_CHANNELS), np.float32), [], [], [], [], lc.rul_cap)
    return WindowPool.concat(pools)
