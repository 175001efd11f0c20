from __future__ import annotations

import torch

from ..network.blocks import ContractError
from .schedule import ClassWeights

NORMALIZATION_TOL = 1e-3


def weighted_nll_loss(logprob: torch.Tensor, target: torch.Tensor, weights) -> torch.Tensor:
    """Mean over pixels of ``-w[target] * logprob[target]``.

    ``logprob`` is (2, H, W) or (B, 2, H, W); ``weights`` is a
    :class:`ClassWeights` or a (background, lane) pair, normalized to sum 1.
    Unlike ``nn.NLLLoss`` the mean is over pixels, not over summed weights.
    """
    if isinstance(weights, ClassWeights):
        w = weights.as_tuple()
    else:
        w_bg, w_lane = (float(v) for v in weights)
        w = ClassWeights(w_lane, w_bg).as_tuple()
    class_dim = logprob.dim() - 3
    if logprob.shape[class_dim] != 2:
        raise ContractError(f"expected 2 classes, got shape {tuple(logprob.shape)}")
    with torch.no_grad():
        drift = (logprob.exp().sum(class_dim) - 1.0).abs().max()
    if not drift <= NORMALIZATION_TOL:
        raise ContractError(f"log-probabilities are not normalized (max deviation {float(drift):.3g})")
    target = target.long()
    if target.shape != logprob.shape[:class_dim] + logprob.shape[class_dim + 1:]:
        raise ContractError(f"target shape {tuple(target.shape)} does not match {tuple(logprob.shape)}")
    picked = logprob.gather(class_dim, target.unsqueeze(class_dim)).squeeze(class_dim)
    w_t = torch.tensor(w, dtype=logprob.dtype, device=logprob.device)[target]
    return -(w_t * picked).mean()
