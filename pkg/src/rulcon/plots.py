"""Figures: per-engine RUL predictions and 2-D maps of exported embeddings."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def plot_predictions(records, path, title: str = "") -> Path:
    """Predicted vs true RUL per test engine, engines sorted by true RUL."""
    order = np.argsort([r.true for r in records], kind="stable")
    true = np.array([records[i].true for i in order])
    pred = np.array([records[i].predicted for i in order])
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(true, "k-", lw=1.5, label="actual RUL")
    ax.plot(pred, "o", ms=3, color="tab:red", label="predicted RUL")
    ax.set_xlabel("test engine (sorted by actual RUL)")
    ax.set_ylabel("RUL (cycles)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def reduce_2d(dump: pd.DataFrame, seed: int = 0) -> np.ndarray:
    from sklearn.manifold import TSNE

    emb = dump.filter(like="emb_").to_numpy()
    perplexity = min(30.0, max(2.0, (len(emb) - 1) / 3))
    return TSNE(n_components=2, perplexity=perplexity, random_state=seed, init="pca").fit_transform(emb)


def plot_embeddings(dump: pd.DataFrame, path, title: str = "", seed: int = 0) -> Path:
    """t-SNE scatter of an embedding dump coloured by RUL, marker per engine."""
    xy = reduce_2d(dump, seed)
    fig, ax = plt.subplots(figsize=(6, 5))
    markers = "osD^v<>ph*"
    for k, (engine, idx) in enumerate(dump.groupby("engine_id").indices.items()):
        sc = ax.scatter(xy[idx, 0], xy[idx, 1], c=dump.rul_label.to_numpy()[idx], cmap="viridis",
                        vmin=0, vmax=dump.rul_label.max(), marker=markers[k % len(markers)], s=12,
                        label=f"engine {engine}")
    fig.colorbar(sc, ax=ax, label="RUL label")
    ax.legend(fontsize=7)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
