"""Encoder / projector / regressor networks.

Inputs are ``B x W x C`` windows (time first, channels last). The encoder
maps them to ``B x e`` embeddings; the projector (training only) maps those
to unit-norm ``B x p`` vectors for the contrastive phases; the regressor maps
embeddings to a normalized RUL in (0, 1).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .cmapss import N_CHANNELS

ENCODER_KINDS = ("cnn_lstm", "cnn", "lstm")


@dataclass
class ModelConfig:
    encoder_kind: str = "cnn_lstm"
    in_channels: int = N_CHANNELS
    window: int = 30  # only the cnn encoder's flatten layer depends on it
    conv_channels: tuple[int, int, int] = (32, 64, 128)
    conv_kernel: int = 3
    lstm_hidden: int = 64
    lstm_layers: int = 2  # lstm encoder only
    embedding_dim: int = 64
    projection_dim: int = 32
    regressor_hidden: tuple[int, int] = (64, 32)

    def __post_init__(self):
        if self.encoder_kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.encoder_kind!r}; choose from {ENCODER_KINDS}")
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.regressor_hidden = tuple(int(c) for c in self.regressor_hidden)
        if len(self.conv_channels) != 3 or len(self.regressor_hidden) != 2:
            raise ValueError("need three conv widths and two regressor hidden widths")
        dims = (self.in_channels, self.window, self.conv_kernel, self.lstm_hidden, self.lstm_layers,
                self.embedding_dim, self.projection_dim, *self.conv_channels, *self.regressor_hidden)
        if min(dims) < 1:
            raise ValueError("all model dimensions must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _conv_stack(cfg: ModelConfig) -> nn.Sequential:
    layers = []
    c_in = cfg.in_channels
    for c_out in cfg.conv_channels:
        layers += [nn.Conv1d(c_in, c_out, cfg.conv_kernel, padding="same"), nn.ReLU()]
        c_in = c_out
    return nn.Sequential(*layers)


class CNNLSTMEncoder(nn.Module):
    """Three same-padded 1-D convolutions over time, then an LSTM; the last hidden state is the embedding."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.conv = _conv_stack(cfg)
        self.lstm = nn.LSTM(cfg.conv_channels[-1], cfg.lstm_hidden, batch_first=True)
        self.out = (nn.Identity() if cfg.lstm_hidden == cfg.embedding_dim
                    else nn.Linear(cfg.lstm_hidden, cfg.embedding_dim))

    def forward(self, x):
        h = self.conv(x.transpose(1, 2)).transpose(1, 2)
        _, (h_n, _) = self.lstm(h)
        return self.out(h_n[-1])


class CNNEncoder(nn.Module):
    """The CNN-LSTM encoder with its LSTM swapped for one linear layer over the flattened sequence."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.window = cfg.window
        self.conv = _conv_stack(cfg)
        self.fc = nn.Linear(cfg.conv_channels[-1] * cfg.window, cfg.embedding_dim)

    def forward(self, x):
        if x.shape[1] != self.window:
            raise ValueError(f"cnn encoder was built for windows of {self.window}, got {x.shape[1]}")
        return self.fc(self.conv(x.transpose(1, 2)).flatten(1))


class LSTMEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.lstm = nn.LSTM(cfg.in_channels, cfg.lstm_hidden, num_layers=cfg.lstm_layers, batch_first=True)
        self.out = (nn.Identity() if cfg.lstm_hidden == cfg.embedding_dim
                    else nn.Linear(cfg.lstm_hidden, cfg.embedding_dim))

    def forward(self, x):
        _, (h_n, _) = self.lstm(x)
        return self.out(h_n[-1])


class Projector(nn.Module):
    """Linear, ReLU, linear, then L2 normalization.

    ``F.normalize`` guards the norm with eps=1e-12, so an exactly zero
    pre-normalization vector comes out as zeros rather than NaN.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(cfg.embedding_dim, cfg.embedding_dim), nn.ReLU(),
                                 nn.Linear(cfg.embedding_dim, cfg.projection_dim))

    def forward(self, r):
        return F.normalize(self.net(r), dim=1, eps=1e-12)


class Regressor(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        h1, h2 = cfg.regressor_hidden
        self.net = nn.Sequential(nn.Linear(cfg.embedding_dim, h1), nn.ReLU(),
                                 nn.Linear(h1, h2), nn.ReLU(), nn.Linear(h2, 1))

    def logits(self, r):
        return self.net(r).squeeze(-1)

    def forward(self, r):
        return torch.sigmoid(self.logits(r))


_ENCODERS = {"cnn_lstm": CNNLSTMEncoder, "cnn": CNNEncoder, "lstm": LSTMEncoder}


class RULModel(nn.Module):
    def __init__(self, cfg: ModelConfig | None = None):
        super().__init__()
        self.cfg = cfg or ModelConfig()
        self.encoder = _ENCODERS[self.cfg.encoder_kind](self.cfg)
        self.projector = Projector(self.cfg)
        self.regressor = Regressor(self.cfg)

    def _check_input(self, x):
        if x.ndim != 3 or x.shape[2] != self.cfg.in_channels:
            raise ValueError(f"expected input of shape (B, W, {self.cfg.in_channels}), got {tuple(x.shape)}")

    def encode(self, x):
        self._check_input(x)
        return self.encoder(x)

    def project(self, r):
        return self.projector(r)

    def regress(self, r):
        return self.regressor(r)

    def forward(self, x):
        """Inference path: encoder then regressor, no projector."""
        return self.regress(self.encode(x))

    def encoder_parameters(self):
        return list(self.encoder.parameters())

    def parameter_count(self) -> dict:
        return {name: sum(p.numel() for p in part.parameters())
                for name, part in (("encoder", self.encoder), ("projector", self.projector),
                                   ("regressor", self.regressor))}


def build_model(cfg: ModelConfig | None = None, seed: int | None = None) -> RULModel:
    if seed is not None:
        torch.manual_seed(seed)
    return RULModel(cfg)
