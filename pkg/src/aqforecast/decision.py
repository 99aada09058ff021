"""Confidence-reliability curves and the two-threshold decision surface.

An event is acted on when its exceedance probability reaches ``tau1`` and
the model's confidence reaches ``tau2``; events that fail the confidence
gate get no countermeasure (they count as predicted negatives).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError
from .metrics import confusion, scores_from_counts

DEFAULT_GRID = np.linspace(0.0, 1.0, 51)


@dataclass
class ReliabilityCurve:
    tau: np.ndarray
    count: np.ndarray
    loss: np.ndarray
    task: str

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "loss", "count"])
            for t, l, c in zip(self.tau, self.loss, self.count):
                w.writerow([repr(float(t)), repr(float(l)), int(c)])


def _confidences(conf) -> np.ndarray:
    c = np.asarray(conf, dtype=np.float64).ravel()
    if np.any((c < 0) | (c > 1)) or np.any(np.isnan(c)):
        raise ContractError("confidences must lie in [0, 1]")
    return c


def normalize_confidence(values) -> np.ndarray:
    """Min-max scale to [0, 1] within one evaluation (constant input -> ones)."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = np.min(v), np.max(v)
    if hi - lo <= 0:
        return np.ones_like(v)
    return (v - lo) / (hi - lo)


def reliability_curve(prediction, confidence, truth, task: str, tau_grid=None) -> ReliabilityCurve:
    """Loss and count of predictions whose confidence is at least each tau.

    Classification ``prediction`` is a probability and the loss counts
    misclassifications at cut 0.5; regression loss is the sum of squared
    errors of the retained points.
    """
    c = _confidences(confidence)
    pred = np.asarray(prediction, dtype=np.float64).ravel()
    y = np.asarray(truth, dtype=np.float64).ravel()
    if not (len(c) == len(pred) == len(y)):
        raise ContractError("prediction, confidence and truth must align")
    if task in ("classification", "exceedance"):
        per = ((pred >= 0.5) != (y >= 0.5)).astype(np.float64)
    elif task == "regression":
        per = (pred - y) ** 2
    else:
        raise ContractError(f"unknown task {task!r}")
    grid = np.asarray(DEFAULT_GRID if tau_grid is None else tau_grid, dtype=np.float64)
    counts = np.empty(len(grid), dtype=np.int64)
    losses = np.empty(len(grid))
    for k, tau in enumerate(grid):
        keep = c >= tau
        counts[k] = int(keep.sum())
        losses[k] = float(per[keep].sum()) if counts[k] else 0.0
    return ReliabilityCurve(grid, counts, losses, task)


def binned_loss(curve: ReliabilityCurve, per_point: bool = True, min_count: int = 10):
    """Mean retained loss per tau, dropping taus with fewer than ``min_count`` points."""
    keep = curve.count >= min_count
    loss = curve.loss[keep] / np.maximum(curve.count[keep], 1) if per_point else curve.loss[keep]
    return curve.tau[keep], loss


@dataclass
class DecisionSurface:
    tau1: np.ndarray
    tau2: np.ndarray
    f1: np.ndarray  # (len(tau1), len(tau2))
    precision: np.ndarray
    recall: np.ndarray

    def aleatoric_slice(self) -> np.ndarray:
        """F1 along tau1 with the confidence gate fully open (tau2 = 0)."""
        j = np.flatnonzero(self.tau2 == 0.0)
        if len(j) == 0:
            raise ContractError("tau2 grid does not contain 0")
        return self.f1[:, j[0]]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau1", "tau2", "f1", "precision", "recall"])
            for i, t1 in enumerate(self.tau1):
                for j, t2 in enumerate(self.tau2):
                    w.writerow([repr(float(t1)), repr(float(t2)), repr(float(self.f1[i, j])),
                                repr(float(self.precision[i, j])), repr(float(self.recall[i, j]))])


def gated_decision(p_hat, confidence, tau1: float, tau2: float) -> np.ndarray:
    return (np.asarray(p_hat) >= tau1) & (np.asarray(confidence) >= tau2)


def decision_surface(p_hat, confidence, truth, tau1_grid=None, tau2_grid=None) -> DecisionSurface:
    p = np.asarray(p_hat, dtype=np.float64).ravel()
    c = _confidences(confidence)
    o = np.asarray(truth).ravel()
    if not (len(p) == len(c) == len(o)):
        raise ContractError("probabilities, confidences and truths must align")
    g1 = np.asarray(DEFAULT_GRID if tau1_grid is None else tau1_grid, dtype=np.float64)
    g2 = np.asarray(DEFAULT_GRID if tau2_grid is None else tau2_grid, dtype=np.float64)
    if len(g1) == 0 or len(g2) == 0:
        raise ContractError("threshold grids must be non-empty")
    shape = (len(g1), len(g2))
    f1, prec, rec = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    for i, t1 in enumerate(g1):
        for j, t2 in enumerate(g2):
            s = scores_from_counts(*confusion(o, gated_decision(p, c, t1, t2)))
            f1[i, j], prec[i, j], rec[i, j] = s.f1, s.precision, s.recall
    return DecisionSurface(g1, g2, f1, prec, rec)


def best_operating_point(surface: DecisionSurface) -> tuple[float, float, float]:
    """Highest-F1 cell; ties go to the smaller tau2, then the smaller tau1."""
    best = None
    for j in np.argsort(surface.tau2, kind="stable"):
        for i in np.argsort(surface.tau1, kind="stable"):
            v = surface.f1[i, j]
            if best is None or v > best[2]:
                best = (float(surface.tau1[i]), float(surface.tau2[j]), float(v))
    return best
