"""Point, interval, probabilistic and classification scores, and the
per station/pollutant report that collects them."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import ContractError, NumericDomainError
from .losses import PROB_CLAMP

REGRESSION_METRICS = ("RMSE", "PICP", "MPIW", "CRPS", "NLL")
CLASSIFICATION_METRICS = ("Brier", "Precision", "Recall", "F1", "CE")
REPORT_COLUMNS = REGRESSION_METRICS + CLASSIFICATION_METRICS
DIRECTION = {
    "RMSE": "down", "PICP": "up", "MPIW": "down", "CRPS": "down", "NLL": "down",
    "Brier": "down", "Precision": "up", "Recall": "up", "F1": "up", "CE": "down",
}


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ContractError("metric over an empty series")
    return a, b


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def picp(y, lower, upper) -> float:
    """Fraction of observations inside [lower, upper]; bounds count as inside."""
    y, lower = _pair(y, lower)
    _, upper = _pair(y, upper)
    if np.any(lower > upper):
        raise ContractError("lower bound exceeds upper bound")
    return float(np.mean((y >= lower) & (y <= upper)))


def mpiw(lower, upper) -> float:
    lower, upper = _pair(lower, upper)
    if np.any(lower > upper):
        raise ContractError("lower bound exceeds upper bound")
    return float(np.mean(upper - lower))


def crps_gaussian(mu, sigma, y):
    """Closed-form CRPS of N(mu, sigma²) at y (elementwise)."""
    mu, sigma, y = (np.asarray(a, dtype=np.float64) for a in (mu, sigma, y))
    if np.any(sigma <= 0):
        raise NumericDomainError("CRPS needs sigma > 0")
    z = (y - mu) / sigma
    out = sigma * (z * (2 * norm.cdf(z) - 1) + 2 * norm.pdf(z) - 1 / np.sqrt(np.pi))
    return float(out) if out.ndim == 0 else out


def crps_samples(samples, y):
    """Sample CRPS ``mean|X-y| - mean|X-X'|/2`` over axis 0, in O(M log M)."""
    x = np.sort(np.asarray(samples, dtype=np.float64), axis=0)
    m = x.shape[0]
    if m < 1:
        raise ContractError("need at least one sample")
    y = np.asarray(y, dtype=np.float64)
    first = np.mean(np.abs(x - y), axis=0)
    w = (2 * np.arange(1, m + 1) - m - 1).reshape((m,) + (1,) * (x.ndim - 1))
    second = np.sum(w * x, axis=0) / m**2
    out = first - second
    return float(out) if np.ndim(out) == 0 else out


def crps_integral(cdf, y: float, lo: float, hi: float) -> float:
    """CRPS of a CDF at ``y`` by adaptive quadrature of (F(x) - 1{x >= y})²
    over [lo, hi]; the range must cover essentially all of the mass."""
    left, _ = integrate.quad(lambda t: cdf(t) ** 2, lo, y, epsabs=1e-10, limit=200)
    right, _ = integrate.quad(lambda t: (1.0 - cdf(t)) ** 2, y, hi, epsabs=1e-10, limit=200)
    return float(left + right)


def crps_mixture(means, sigmas, y: float) -> float:
    """Numeric CRPS of an equally weighted Gaussian mixture at scalar ``y``."""
    mu = np.asarray(means, dtype=np.float64).ravel()
    sd = np.asarray(sigmas, dtype=np.float64).ravel()
    if mu.shape != sd.shape or mu.size == 0:
        raise ContractError("one sigma per mixture component")
    if np.any(sd <= 0):
        raise NumericDomainError("CRPS needs sigma > 0")
    lo = min(float(np.min(mu - 12 * sd)), y)
    hi = max(float(np.max(mu + 12 * sd)), y)
    return crps_integral(lambda t: float(np.mean(norm.cdf((t - mu) / sd))), float(y), lo, hi)


def gaussian_nll_values(y, mean, var):
    y, mean, var = (np.asarray(a, dtype=np.float64) for a in (y, mean, var))
    if np.any(var <= 0):
        raise NumericDomainError("variance must be positive")
    return 0.5 * (np.log(2 * np.pi * var) + (y - mean) ** 2 / var)


def nll_metric(y, mean, var) -> float:
    """Mean Gaussian NLL of observations under (mixture) mean and variance."""
    return float(np.mean(gaussian_nll_values(y, mean, var)))


def brier(o, p) -> float:
    o, p = _pair(o, p)
    return float(np.mean((o - p) ** 2))


def cross_entropy(o, p) -> float:
    """Two-term binary cross-entropy with clamped probabilities."""
    o, p = _pair(o, p)
    p = np.clip(p, PROB_CLAMP, 1 - PROB_CLAMP)
    return float(-np.mean(o * np.log(p) + (1 - o) * np.log(1 - p)))


@dataclass
class ClassificationScores:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    undefined: tuple = ()


def confusion(o, predicted) -> tuple[int, int, int]:
    o = np.asarray(o).astype(bool).ravel()
    pr = np.asarray(predicted).astype(bool).ravel()
    if o.shape != pr.shape:
        raise ContractError("label/prediction length mismatch")
    return int(np.sum(o & pr)), int(np.sum(~o & pr)), int(np.sum(o & ~pr))


def scores_from_counts(tp: int, fp: int, fn: int) -> ClassificationScores:
    """Precision, recall and F1; a zero denominator yields 0 and is flagged."""
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    p = ratio(tp, tp + fp, "precision")
    r = ratio(tp, tp + fn, "recall")
    f = ratio(tp, tp + 0.5 * (fp + fn), "f1")
    return ClassificationScores(p, r, f, tp, fp, fn, tuple(undefined))


def classification_scores(o, p_hat, cut: float = 0.5) -> ClassificationScores:
    return scores_from_counts(*confusion(o, np.asarray(p_hat) >= cut))


def precision(o, predicted) -> float:
    return scores_from_counts(*confusion(o, predicted)).precision


def recall(o, predicted) -> float:
    return scores_from_counts(*confusion(o, predicted)).recall


def f1(o, predicted) -> float:
    return scores_from_counts(*confusion(o, predicted)).f1


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class MetricReport:
    station: str
    pollutant: str
    method: str = ""
    metrics: dict = field(default_factory=lambda: {k: None for k in REPORT_COLUMNS})
    n_samples: int = 0
    n_exceedances: int = 0
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.metrics = {k: self.metrics.get(k) for k in REPORT_COLUMNS}

    @property
    def regression(self) -> dict:
        return {k: self.metrics[k] for k in REGRESSION_METRICS}

    @property
    def classification(self) -> dict:
        return {k: self.metrics[k] for k in CLASSIFICATION_METRICS}

    def to_dict(self) -> dict:
        return {
            "station": self.station,
            "pollutant": self.pollutant,
            "method": self.method,
            "metrics": {k: self.metrics[k] for k in REPORT_COLUMNS},
            "n_samples": self.n_samples,
            "n_exceedances": self.n_exceedances,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(d["station"], d["pollutant"], d.get("method", ""), dict(d["metrics"]),
                   int(d.get("n_samples", 0)), int(d.get("n_exceedances", 0)),
                   list(d.get("flags", [])))


def assemble_report(station: str, pollutant: str, *, y=None, mean=None, variance=None,
                    lower=None, upper=None, samples=None, labels=None, probability=None,
                    method: str = "") -> MetricReport:
    """Compute whichever metric blocks the inputs allow; the rest stay ``None``.

    CRPS uses the sample CRPS when raw predictive ``samples`` are given and the
    Gaussian closed form of (mean, variance) otherwise.
    """
    rep = MetricReport(station, pollutant, method)
    m = rep.metrics
    if y is not None:
        y = np.asarray(y, dtype=np.float64)
        rep.n_samples = int(y.size)
        if mean is not None:
            m["RMSE"] = rmse(y, mean)
        if lower is not None and upper is not None:
            m["PICP"] = picp(y, lower, upper)
            m["MPIW"] = mpiw(lower, upper)
        if samples is not None:
            m["CRPS"] = float(np.mean(crps_samples(samples, y)))
        elif mean is not None and variance is not None:
            m["CRPS"] = float(np.mean(crps_gaussian(mean, np.sqrt(variance), y)))
        if mean is not None and variance is not None:
            m["NLL"] = nll_metric(y, mean, variance)
    if labels is not None and probability is not None:
        o = np.asarray(labels, dtype=np.float64)
        rep.n_samples = rep.n_samples or int(o.size)
        rep.n_exceedances = int(o.sum())
        sc = classification_scores(o, probability)
        m["Brier"] = brier(o, probability)
        m["Precision"], m["Recall"], m["F1"] = sc.precision, sc.recall, sc.f1
        m["CE"] = cross_entropy(o, probability)
        rep.flags.extend(f"{name} undefined (zero denominator)" for name in sc.undefined)
    return rep


def save_reports_json(reports, path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")


def load_reports_json(path) -> list[MetricReport]:
    return [MetricReport.from_dict(d) for d in json.loads(Path(path).read_text())]


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return repr(float(v))


def save_reports_csv(reports, path) -> None:
    """Table with one row per station/pollutant in the fixed metric order.

    The first line is a comment giving each metric's better direction.
    """
    with Path(path).open("w", newline="") as fh:
        fh.write("# direction: " + ",".join(f"{k}={DIRECTION[k]}" for k in REPORT_COLUMNS) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station", "pollutant", "method", *REPORT_COLUMNS])
        for r in reports:
            w.writerow([r.station, r.pollutant, r.method, *(_fmt(r.metrics[k]) for k in REPORT_COLUMNS)])


def load_reports_csv(path) -> list[MetricReport]:
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    out = []
    for row in rows:
        metrics = {k: None if row[k] == "NA" else float(row[k]) for k in REPORT_COLUMNS}
        out.append(MetricReport(row["station"], row["pollutant"], row["method"], metrics))
    return out
