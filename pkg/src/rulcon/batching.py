"""Coarse (health-status) and fine (RUL within one class) contrastive batches.

A batch of ``n`` anchors holds ``2n`` views: view ``2k`` is anchor ``k`` and
view ``2k + 1`` its paired view. Both views carry the anchor's labels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .preprocessing import WindowPool, WindowSample

PAIR_POLICIES = ("jitter", "identity", "resample")


@dataclass
class BatchConfig:
    coarse_batch: int = 128
    fine_batch: int = 64
    pair_policy: str = "jitter"
    jitter_sigma: float = 0.01
    fine_rul_tolerance: int = 0
    stratify_coarse: bool = False

    def __post_init__(self):
        check_policy(self.pair_policy)
        if self.coarse_batch < 2 or self.fine_batch < 2:
            raise ValueError("contrastive batch sizes must be >= 2")


def check_policy(policy: str) -> None:
    if policy not in PAIR_POLICIES:
        raise ValueError(f"unknown pair policy {policy!r}; choose from {PAIR_POLICIES}")


@dataclass
class CoarseBatch:
    views: np.ndarray       # 2n x W x C
    hs_labels: np.ndarray   # 2n
    engine_ids: np.ndarray  # 2n, provenance of each view
    rul_labels: np.ndarray  # 2n
    anchor_index: np.ndarray  # n, pool indices of the anchors


@dataclass
class FineBatch:
    hs_class: int
    views: np.ndarray
    rul_labels: np.ndarray
    hs_labels: np.ndarray
    engine_ids: np.ndarray
    anchor_index: np.ndarray


class SkipClass(Exception):
    """Raised when a health-status class has no samples in the pool."""

    def __init__(self, hs_class: int):
        super().__init__(f"HS{hs_class} has no samples")
        self.hs_class = hs_class


@dataclass
class PositiveCountReport:
    N: int
    m: int
    d: int
    n_hs: int
    n_rul: int


def count_positives(N: int, m: int, d: int) -> PositiveCountReport:
    """Positives per sample when N objects each hold m samples in d equal HS bands.

    With HS labels a sample matches the other ``m/d - 1`` samples of its own
    band plus ``m/d`` samples in each other object. With per-sample RUL labels
    it matches only the one sample of equal RUL in every other object.
    """
    if N < 1 or d < 1 or m < 1:
        raise ValueError("N, m and d must be positive")
    if m % d:
        raise ValueError(f"d={d} does not divide m={m}")
    per_band = m // d
    return PositiveCountReport(N, m, d, (per_band - 1) + (N - 1) * per_band, N - 1)


def make_pair_view(x: WindowSample, policy: str = "jitter", rng: np.random.Generator | None = None,
                   sigma: float = 0.01, pool: WindowPool | None = None,
                   label: str = "hs_label", index: int | None = None) -> WindowSample:
    """Second view of a window sample; labels are always copied from ``x``.

    ``resample`` draws a different pool member sharing ``x``'s ``label``
    column (its pool position is ``index``), falling back to jitter when
    ``x`` has no such partner.
    """
    check_policy(policy)
    window = x.window
    if policy == "identity":
        new = window.copy()
    elif policy == "resample" and pool is not None:
        candidates = np.flatnonzero(getattr(pool, label) == getattr(x, label))
        if index is not None:
            candidates = candidates[candidates != index]
        if len(candidates):
            new = pool.windows[rng.choice(candidates)].copy()
        else:
            new = _jitter(window, sigma, rng)
    else:
        new = _jitter(window, sigma, rng)
    return WindowSample(new, x.rul_label, x.rul_target, x.hs_label, x.engine_id, x.end_cycle)


def _jitter(window: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0:
        return np.array(window, copy=True)
    return (window + rng.normal(0.0, sigma, size=window.shape)).astype(window.dtype)


def _pair_windows(pool: WindowPool, idx: np.ndarray, policy: str, sigma: float,
                  rng: np.random.Generator, label: str, candidates: np.ndarray | None = None) -> np.ndarray:
    anchors = pool.windows[idx]
    if policy == "identity":
        return anchors.copy()
    if policy == "jitter":
        return _jitter(anchors, sigma, rng)
    # resample: vectorised over anchors, restricted to ``candidates`` if given
    space = np.arange(len(pool)) if candidates is None else candidates
    labels = getattr(pool, label)
    out = np.empty_like(anchors)
    for k, i in enumerate(idx):
        same = space[(labels[space] == labels[i]) & (space != i)]
        if len(same):
            out[k] = pool.windows[rng.choice(same)]
        else:
            out[k] = _jitter(anchors[k], sigma, rng)
    return out


def _interleave(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty((2 * len(a),) + a.shape[1:], dtype=a.dtype)
    out[0::2] = a
    out[1::2] = b
    return out


def coarse_batch_from_indices(pool: WindowPool, idx: np.ndarray, cfg: BatchConfig,
                              rng: np.random.Generator) -> CoarseBatch:
    idx = np.asarray(idx)
    second = _pair_windows(pool, idx, cfg.pair_policy, cfg.jitter_sigma, rng, "hs_label")
    twice = np.repeat(idx, 2)
    return CoarseBatch(_interleave(pool.windows[idx], second), pool.hs_label[twice],
                       pool.engine_id[twice], pool.rul_label[twice], idx)


def fine_batch_from_indices(pool: WindowPool, k: int, idx: np.ndarray, cfg: BatchConfig,
                            rng: np.random.Generator, class_index: np.ndarray | None = None) -> FineBatch:
    idx = np.asarray(idx)
    if np.any(pool.hs_label[idx] != k):
        raise ValueError(f"fine batch for HS{k} contains samples of another class")
    if class_index is None:
        class_index = np.flatnonzero(pool.hs_label == k)
    second = _pair_windows(pool, idx, cfg.pair_policy, cfg.jitter_sigma, rng, "rul_label",
                           candidates=class_index)
    twice = np.repeat(idx, 2)
    return FineBatch(k, _interleave(pool.windows[idx], second), pool.rul_label[twice],
                     pool.hs_label[twice], pool.engine_id[twice], idx)


def _ensure_two_engines(pool: WindowPool, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    engines = pool.engine_id[idx]
    if len(idx) < 2 or len(np.unique(engines)) > 1:
        return idx
    others = np.setdiff1d(np.flatnonzero(pool.engine_id != engines[0]), idx)
    if len(others) == 0:
        return idx
    idx = idx.copy()
    idx[-1] = rng.choice(others)
    return idx


def sample_coarse_batch(pool: WindowPool, n: int, rng: np.random.Generator,
                        cfg: BatchConfig | None = None) -> CoarseBatch:
    """Draw ``n`` anchors from the pool and pair each with a second view.

    Anchors are drawn uniformly without replacement (with replacement if the
    pool is smaller than ``n``), or in equal shares per HS class when
    ``cfg.stratify_coarse`` is set. If every anchor lands on one engine while
    the pool holds several, the last anchor is swapped for another engine.
    """
    cfg = cfg or BatchConfig()
    if len(pool) == 0:
        raise ValueError("cannot sample from an empty pool")
    if n < 1:
        raise ValueError("batch size must be positive")
    if cfg.stratify_coarse:
        classes = np.unique(pool.hs_label)
        shares = np.full(len(classes), n // len(classes))
        shares[: n % len(classes)] += 1
        parts = []
        for c, share in zip(classes, shares):
            members = np.flatnonzero(pool.hs_label == c)
            parts.append(rng.choice(members, size=share, replace=share > len(members)))
        idx = rng.permutation(np.concatenate(parts))
    else:
        idx = rng.choice(len(pool), size=n, replace=n > len(pool))
    idx = _ensure_two_engines(pool, idx, rng)
    return coarse_batch_from_indices(pool, idx, cfg, rng)


def sample_fine_batch(pool: WindowPool, k: int, n: int, rng: np.random.Generator,
                      cfg: BatchConfig | None = None) -> FineBatch:
    """Draw ``n`` anchors from HS class ``k`` only; raises :class:`SkipClass` if it is empty."""
    cfg = cfg or BatchConfig()
    members = np.flatnonzero(pool.hs_label == k)
    if len(members) == 0:
        raise SkipClass(k)
    idx = rng.choice(members, size=n, replace=n > len(members))
    return fine_batch_from_indices(pool, k, idx, cfg, rng, class_index=members)


def iter_coarse_epoch(pool: WindowPool, cfg: BatchConfig, rng: np.random.Generator) -> Iterator[CoarseBatch]:
    """One pass over the shuffled pool in coarse batches.

    A trailing chunk with a single anchor is folded into the previous batch,
    since a lone anchor plus its pair carries no negatives.
    """
    order = rng.permutation(len(pool))
    for chunk in _chunks(order, cfg.coarse_batch):
        yield coarse_batch_from_indices(pool, chunk, cfg, rng)


def iter_fine_epoch(pool: WindowPool, k: int, cfg: BatchConfig,
                    rng: np.random.Generator) -> Iterator[FineBatch]:
    members = np.flatnonzero(pool.hs_label == k)
    if len(members) == 0:
        raise SkipClass(k)
    order = members[rng.permutation(len(members))]
    for chunk in _chunks(order, cfg.fine_batch):
        yield fine_batch_from_indices(pool, k, chunk, cfg, rng, class_index=members)


def _chunks(order: np.ndarray, size: int) -> list[np.ndarray]:
    chunks = [order[i:i + size] for i in range(0, len(order), size)]
    if len(chunks) > 1 and len(chunks[-1]) < 2:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks
