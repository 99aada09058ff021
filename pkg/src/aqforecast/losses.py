"""Differentiable training criteria."""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, NumericDomainError

PROB_CLAMP = 1e-7
_HALF_LOG_2PI = 0.5 * float(np.log(2 * np.pi))


def gaussian_nll(y, mean, var, reduction: str = "mean") -> Tensor:
    """Heteroscedastic Gaussian negative log-likelihood with diagonal covariance.

    ``reduction`` is ``mean`` (over every element) or ``sum``.
    """
    mean, var = ad.as_tensor(mean), ad.as_tensor(var)
    if np.any(var.data <= 0):
        raise NumericDomainError("predictive variance must be positive")
    resid = ad.as_tensor(y) - mean
    per = ad.log(var) * 0.5 + ad.square(resid) / var * 0.5 + _HALF_LOG_2PI
    return _reduce(per, reduction)


def binary_cross_entropy(o, p, reduction: str = "mean") -> Tensor:
    """Two-term binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7]."""
    p = ad.clip(ad.as_tensor(p), PROB_CLAMP, 1.0 - PROB_CLAMP)
    o = np.asarray(o.data if isinstance(o, Tensor) else o, dtype=np.float64)
    per = -(ad.log(p) * o + ad.log(1.0 - p) * (1.0 - o))
    return _reduce(per, reduction)


def pinball_loss(y, pred, quantile: float, reduction: str = "mean") -> Tensor:
    """Quantile (pinball) loss ``q (y-pred)^+ + (1-q) (pred-y)^+``."""
    if not 0.0 < quantile < 1.0:
        raise ContractError(f"quantile must be in (0, 1), got {quantile}")
    diff = ad.as_tensor(y) - ad.as_tensor(pred)
    per = ad.relu(diff) * quantile + ad.relu(-diff) * (1.0 - quantile)
    return _reduce(per, reduction)


def _reduce(per: Tensor, reduction: str) -> Tensor:
    if reduction == "mean":
        return ad.tmean(per)
    if reduction == "sum":
        return ad.tsum(per)
    raise ContractError(f"unknown reduction {reduction!r}")
