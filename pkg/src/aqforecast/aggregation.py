"""Turn M stochastic predictions into mixture moments, intervals,
exceedance probabilities and confidence scores."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import ContractError, NumericDomainError


@dataclass
class PredictiveMixture:
    """Uniform Gaussian mixture summary; all arrays share one shape."""

    mean: np.ndarray
    variance: np.ndarray
    epistemic: np.ndarray
    aleatoric: np.ndarray
    n_samples: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


def mix_moments(means, variances) -> PredictiveMixture:
    """Moments of the equally weighted mixture of N(means[i], variances[i]).

    Components run along axis 0; remaining axes are carried through.
    """
    mu = np.asarray(means, dtype=np.float64)
    var = np.asarray(variances, dtype=np.float64)
    if mu.ndim == 0 or mu.shape[0] == 0:
        raise ContractError("mixture needs at least one component")
    if mu.shape != var.shape:
        raise ContractError(f"means {mu.shape} and variances {var.shape} differ in shape")
    if np.any(var <= 0):
        raise NumericDomainError("component variances must be positive")
    m = mu.mean(axis=0)
    aleatoric = var.mean(axis=0)
    # mean((mu - m)^2) == mean(mu^2) - m^2 without the cancellation
    epistemic = ((mu - m) ** 2).mean(axis=0)
    return PredictiveMixture(m, aleatoric + epistemic, epistemic, aleatoric, mu.shape[0])


def z_score(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ContractError(f"interval level must lie in (0, 1), got {level}")
    return float(norm.ppf(0.5 + level / 2.0))


def prediction_interval(mixture: PredictiveMixture, level: float = 0.95):
    """Symmetric Gaussian interval ``mean ± z σ``; also stored on the mixture."""
    z = z_score(level)
    s = mixture.std
    mixture.lower = mixture.mean - z * s
    mixture.upper = mixture.mean + z * s
    return mixture.lower, mixture.upper


@dataclass
class ExceedanceForecast:
    probability: np.ndarray
    samples: np.ndarray
    confidence: np.ndarray | None = None


def average_probabilities(samples) -> ExceedanceForecast:
    """Mean exceedance probability over sample axis 0."""
    p = np.asarray(samples, dtype=np.float64)
    if p.ndim == 0 or p.shape[0] == 0:
        raise ContractError("need at least one probability sample")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ContractError("probability samples must lie in [0, 1]")
    return ExceedanceForecast(p.mean(axis=0), p)


def classification_confidence(samples, coverage: float = 0.95) -> np.ndarray:
    """``1 - width`` of the central empirical interval of sampled probabilities."""
    p = np.asarray(samples, dtype=np.float64)
    if p.ndim == 0 or p.shape[0] < 2:
        raise ContractError("confidence needs at least two samples")
    tail = (1.0 - coverage) / 2.0
    lo, hi = np.quantile(p, [tail, 1.0 - tail], axis=0)
    return np.clip(1.0 - (hi - lo), 0.0, 1.0)


def regression_confidence(spread) -> np.ndarray:
    """Min-max normalized confidence: smallest spread -> 1, largest -> 0."""
    s = np.asarray(spread, dtype=np.float64)
    lo, hi = np.min(s), np.max(s)
    if hi - lo <= 0:
        return np.ones_like(s)
    return 1.0 - (s - lo) / (hi - lo)


DUMP_COLUMNS = ("timestamp", "lead", "y_true", "mu_mix", "sigma_mix", "lower", "upper",
                "p_exceed", "confidence")


def write_prediction_dump(path, timestamps, y_true, mixture: PredictiveMixture | None = None,
                          probability=None, confidence=None, lower=None, upper=None,
                          mean=None, lead=None) -> None:
    """Per-series prediction dump; columns without data are left out."""
    n = len(timestamps)
    cols: dict[str, object] = {"timestamp": [str(t) for t in timestamps]}
    if lead is not None:
        cols["lead"] = list(lead)
    if y_true is not None:
        cols["y_true"] = y_true
    if mixture is not None:
        cols["mu_mix"] = mixture.mean
        cols["sigma_mix"] = mixture.std
        if mixture.lower is not None:
            cols["lower"], cols["upper"] = mixture.lower, mixture.upper
    else:
        if mean is not None:
            cols["mu_mix"] = mean
        if lower is not None:
            cols["lower"], cols["upper"] = lower, upper
    if probability is not None:
        cols["p_exceed"] = probability
    if confidence is not None:
        cols["confidence"] = confidence
    names = [c for c in DUMP_COLUMNS if c in cols]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            row = []
            for c in names:
                v = cols[c][i]
                row.append(v if isinstance(v, str) else repr(float(v)) if c != "lead" else int(v))
            w.writerow(row)
