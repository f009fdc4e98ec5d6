"""Synthetic run-to-failure trajectories in the CMAPSS layout.

Each engine's health index falls linearly, ``1 - rul / 150``; sensors are affine in that
health index plus Gaussian noise, a few sensors are constant (as in FD001),
and op settings are small noise around zero. Used for tests, the training
sanity check, and smoke-running the CLI without the real dataset.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .cmapss import ENGINE_COUNTS, N_OP_SETTINGS, N_SENSORS, DatasetSplit, RawTrajectory, format_cmapss_rows
from .preprocessing import LabelConfig, WindowConfig, WindowPool, build_pool, fit_normalization

CONSTANT_SENSORS = (0, 4, 9, 15, 17, 18)


def _sensor_model(rng: np.random.Generator):
    base = rng.uniform(10, 1000, N_SENSORS)
    amp = rng.uniform(0.5, 5.0, N_SENSORS) * rng.choice([-1.0, 1.0], N_SENSORS)
    noise = np.abs(amp) * rng.uniform(0.02, 0.06, N_SENSORS)
    amp[list(CONSTANT_SENSORS)] = 0.0
    noise[list(CONSTANT_SENSORS)] = 0.0
    return base, amp, noise


def degrading_trajectory(engine_id: int, length: int, rul_at_last: int, rng: np.random.Generator,
                         sensor_model, engine_shift: float = 0.0) -> RawTrajectory:
    base, amp, noise = sensor_model
    cycles = np.arange(1, length + 1)
    rul = rul_at_last + length - cycles
    health = 1.0 - rul / 150.0
    sensors = base + (health[:, None] + engine_shift) * amp + rng.normal(size=(length, N_SENSORS)) * noise
    ops = rng.normal(0.0, 0.002, size=(length, N_OP_SETTINGS))
    ops[:, 2] = 100.0
    return RawTrajectory(engine_id, cycles, ops, sensors)


def synthetic_train_engines(n_engines: int, n_windows: int, width: int = 30, seed: int = 0,
                            rul_offsets: tuple[int, int] = (6, 20)) -> tuple[list[RawTrajectory], list[int]]:
    """Engines whose ``n_windows`` windows end at RULs ``off+n_windows-1 .. off``.

    ``off`` is drawn per engine from ``rul_offsets`` (inclusive) and returned
    alongside the engines. With the defaults and 120 windows every engine
    visits all six HS bands.
    """
    rng = np.random.default_rng(seed)
    model = _sensor_model(rng)
    engines, offsets = [], []
    for e in range(1, n_engines + 1):
        off = int(rng.integers(rul_offsets[0], rul_offsets[1] + 1))
        engines.append(degrading_trajectory(e, n_windows + width - 1, off, rng, model,
                                            engine_shift=rng.normal(0, 0.03)))
        offsets.append(off)
    return engines, offsets


def synthetic_pool(n_engines: int = 10, n_windows: int = 120, width: int = 30, seed: int = 0,
                   label_cfg: LabelConfig | None = None) -> WindowPool:
    """Normalized, labelled windows built through the regular preprocessing path."""
    label_cfg = label_cfg or LabelConfig()
    engines, offsets = synthetic_train_engines(n_engines, n_windows, width, seed)
    stats = fit_normalization(engines)
    return build_pool(engines, stats, WindowConfig(width, 1), label_cfg, rul_truth=offsets)


def synthetic_split(subset: str = "FD001", seed: int = 0, length_range: tuple[int, int] = (130, 260),
                    counts: tuple[int, int] | None = None) -> DatasetSplit:
    """A CMAPSS-shaped split with the subset's engine counts.

    Test engines are truncated copies of fresh run-to-failure engines; the
    truth file value is the number of cycles cut off.
    """
    n_train, n_test = counts or ENGINE_COUNTS[subset]
    rng = np.random.default_rng(seed)
    model = _sensor_model(rng)
    lo, hi = length_range
    train = [degrading_trajectory(e, int(rng.integers(lo, hi + 1)), 0, rng, model,
                                  engine_shift=rng.normal(0, 0.03))
             for e in range(1, n_train + 1)]
    test, truth = [], []
    for e in range(1, n_test + 1):
        full = int(rng.integers(lo, hi + 1))
        kept = int(rng.integers(min(max(5, full // 4), full - 1), full))
        test.append(degrading_trajectory(e, kept, full - kept, rng, model,
                                         engine_shift=rng.normal(0, 0.03)))
        truth.append(full - kept)
    return DatasetSplit(subset, train, test, truth)


def write_cmapss_files(split: DatasetSplit, root: str | os.PathLike) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    name = split.subset_name
    (root / f"train_{name}.txt").write_text(format_cmapss_rows(split.train))
    (root / f"test_{name}.txt").write_text(format_cmapss_rows(split.test))
    (root / f"RUL_{name}.txt").write_text("".join(f"{r}\n" for r in split.test_rul_truth))
    return root
