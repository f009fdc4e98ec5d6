"""Supervised contrastive and regression losses.

Gradients come from autograd; every function here is differentiable in the
embeddings / predictions and works in float32 or float64.
"""
from __future__ import annotations

import torch

REDUCTIONS = ("sum", "mean")


def _unit_norm_tolerance(dtype: torch.dtype) -> float:
    return 1e-6 if dtype == torch.float64 else 1e-5


def _softplus(y: torch.Tensor) -> torch.Tensor:
    return y.clamp(min=0) + torch.log1p(torch.exp(-y.abs()))


def _neg_log_softmax_offdiag(logits: torch.Tensor, eye: torch.Tensor) -> torch.Tensor:
    """``-log softmax`` of each row over its off-diagonal entries.

    Written as ``log(1 + sum_{a != p} exp(s_a - s_p))`` so that entries close
    to zero keep full relative precision; ``logsumexp(s) - s_p`` cancels to 0
    there. The diagonal of the result is 0.
    """
    masked = logits.masked_fill(eye, float("-inf"))
    top = masked.detach().argmax(dim=1)
    m = masked.detach().gather(1, top[:, None])
    e = torch.exp(masked - m)
    is_top = torch.zeros_like(eye).scatter_(1, top[:, None], True)
    # row sum without the top entry, so removing the top entry does not cancel
    rest_of_top = e.masked_fill(is_top, 0.0).sum(dim=1, keepdim=True)
    rest = torch.where(is_top, rest_of_top, e.gather(1, top[:, None]) + rest_of_top - e)
    alone = rest <= 0  # the positive is the only other sample
    y = m - masked + torch.log(torch.where(alone, torch.ones_like(rest), rest))
    out = torch.where(alone | eye, torch.zeros_like(y), _softplus(y.masked_fill(eye, 0.0)))
    return out


def supcon_loss(z: torch.Tensor, labels, tau: float = 0.1, reduction: str = "sum",
                tolerance: float = 0, check_unit_norm: bool = True) -> torch.Tensor:
    """Supervised contrastive loss over a batch of unit-norm embeddings.

    For anchor ``i`` with positives ``P(i)`` (other samples whose label is
    within ``tolerance`` of its own) and candidates ``A(i)`` (all other
    samples)::

        l_i = -1/|P(i)| * sum_{p in P(i)} log( exp(z_i.z_p/tau) / sum_{a in A(i)} exp(z_i.z_a/tau) )

    Anchors with no positive contribute 0. ``reduction="sum"`` adds the
    ``l_i``; ``"mean"`` divides that sum by the batch size.
    """
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}")
    if tau <= 0:
        raise ValueError("temperature must be positive")
    if z.ndim != 2 or z.shape[0] < 2:
        raise ValueError(f"need at least two embeddings as an (n, p) tensor, got shape {tuple(z.shape)}")
    if not torch.isfinite(z).all():
        raise ValueError("embeddings contain non-finite values")
    if check_unit_norm:
        norms = z.detach().norm(dim=1)
        if (norms - 1).abs().max() > _unit_norm_tolerance(z.dtype):
            raise ValueError("embeddings must be L2-normalized")

    labels = torch.as_tensor(labels, device=z.device)
    if labels.shape[0] != z.shape[0]:
        raise ValueError("labels and embeddings differ in length")
    n = z.shape[0]
    eye = torch.eye(n, dtype=torch.bool, device=z.device)
    if tolerance:
        diff = (labels[:, None].to(torch.float64) - labels[None, :].to(torch.float64)).abs()
        positive = (diff <= tolerance) & ~eye
    else:
        positive = (labels[:, None] == labels[None, :]) & ~eye

    logits = (z @ z.T) / tau
    neg_log_prob = _neg_log_softmax_offdiag(logits, eye)

    n_pos = positive.sum(dim=1)
    pos_sum = (neg_log_prob * positive).sum(dim=1)
    per_anchor = torch.where(n_pos > 0, pos_sum / n_pos.clamp(min=1), torch.zeros_like(pos_sum))
    total = per_anchor.sum()
    return total / n if reduction == "mean" else total


def fine_supcon_loss(z: torch.Tensor, rul_labels, tau: float = 0.1, reduction: str = "sum",
                     tolerance: float = 0, hs_labels=None, hs_class: int | None = None,
                     check_unit_norm: bool = True) -> torch.Tensor:
    """Contrastive loss inside one health-status class, with RUL values as labels.

    The sample space is the batch itself, which must come from a single HS
    class; pass ``hs_labels`` and ``hs_class`` to have that checked.
    """
    if hs_labels is not None and hs_class is not None:
        if not bool((torch.as_tensor(hs_labels) == hs_class).all()):
            raise ValueError(f"fine batch mixes health-status classes (expected HS{hs_class})")
    return supcon_loss(z, rul_labels, tau, reduction=reduction, tolerance=tolerance,
                       check_unit_norm=check_unit_norm)


def mse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    pred = torch.as_tensor(pred)
    target = torch.as_tensor(target, dtype=pred.dtype, device=pred.device)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {tuple(pred.shape)} != target shape {tuple(target.shape)}")
    if pred.numel() == 0:
        raise ValueError("empty batch")
    return ((pred - target) ** 2).mean()
