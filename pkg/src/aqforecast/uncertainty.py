"""Posterior and ensemble machinery: KL terms, the ELBO, Monte Carlo
sampling of stochastic forecasters, SWAG moments and deep ensembles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import RngStream, Tensor, no_grad
from .errors import ContractError, NumericDomainError, NumericError
from .losses import binary_cross_entropy, gaussian_nll, pinball_loss
from .models import Forecaster
from .nn import Pass, get_flat, set_flat


# ---------------------------------------------------------------------------
# KL divergences
# ---------------------------------------------------------------------------

def kl_gaussian_closed(mu_q, sigma_q, mu_p, sigma_p):
    """Summed KL(N(mu_q, sigma_q²) || N(mu_p, sigma_p²)) over all weights.

    Returns a Tensor when any argument is a Tensor (for use inside a loss),
    a float otherwise.
    """
    track = any(isinstance(a, Tensor) for a in (mu_q, sigma_q, mu_p, sigma_p))
    sq = sigma_q.data if isinstance(sigma_q, Tensor) else np.asarray(sigma_q, dtype=float)
    sp = sigma_p.data if isinstance(sigma_p, Tensor) else np.asarray(sigma_p, dtype=float)
    if np.any(sq <= 0) or np.any(sp <= 0):
        raise NumericDomainError("KL needs strictly positive scales")
    if not track:
        mq, mp = np.asarray(mu_q, dtype=float), np.asarray(mu_p, dtype=float)
        kl = np.log(sp / sq) + (sq**2 + (mq - mp) ** 2) / (2 * sp**2) - 0.5
        return float(np.sum(kl))
    mu_q, sigma_q = ad.as_tensor(mu_q), ad.as_tensor(sigma_q)
    mu_p, sigma_p = ad.as_tensor(mu_p), ad.as_tensor(sigma_p)
    var_p = ad.square(sigma_p)
    kl = (ad.log(sigma_p) - ad.log(sigma_q)
          + (ad.square(sigma_q) + ad.square(mu_q - mu_p)) / (var_p * 2.0) - 0.5)
    return ad.tsum(kl)


def kl_mc_estimate(samples, log_q: Callable, log_p: Callable, name: str = "weights",
                   return_stderr: bool = False):
    """Monte Carlo KL estimate ``mean_i [log q(w_i) - log p(w_i)]``.

    ``samples`` has the sample index on axis 0; the density callables return
    one log density per sample.
    """
    w = np.asarray(samples, dtype=np.float64)
    if w.ndim == 0 or w.shape[0] < 1:
        raise ContractError("need at least one weight sample")
    diff = np.asarray(log_q(w), dtype=np.float64) - np.asarray(log_p(w), dtype=np.float64)
    if not np.all(np.isfinite(diff)):
        raise NumericError(f"non-finite log density in {name}")
    est = float(np.mean(diff))
    if return_stderr:
        se = float(np.std(diff, ddof=1) / np.sqrt(len(diff))) if len(diff) > 1 else float("nan")
        return est, se
    return est


# ---------------------------------------------------------------------------
# ELBO
# ---------------------------------------------------------------------------

def data_term(model: Forecaster, x, target, ctx: Pass, reduction: str = "sum") -> Tensor:
    """Minibatch loss: Gaussian NLL, binary CE, or summed pinball loss of both quantile heads."""
    out = model(x, ctx)
    if getattr(model, "kind", "") == "quantile":
        lower, upper = out
        q_lo, q_hi = model.quantiles
        return (pinball_loss(target, lower, q_lo, reduction)
                + pinball_loss(target, upper, q_hi, reduction))
    if model.task == "regression":
        mean, var = out
        return gaussian_nll(target, mean, var, reduction)
    return binary_cross_entropy(target, out, reduction)


def elbo_terms(model: Forecaster, x, target, rng: np.random.Generator):
    """(data term summed over the batch, KL term) for a variational model."""
    if len(x) == 0:
        raise ContractError("ELBO needs a non-empty batch")
    ctx = Pass(rng, stochastic=True)
    data = data_term(model, x, target, ctx, reduction="sum")
    kl = model.kl(rng)
    if kl is None:
        raise ContractError("model has no variational parameters")
    return data, kl


def elbo_loss(model: Forecaster, x, target, rng: np.random.Generator, kl_weight: float) -> Tensor:
    """Negative ELBO for one minibatch: data term + kl_weight * KL."""
    if kl_weight < 0:
        raise ContractError("kl_weight must be non-negative")
    data, kl = elbo_terms(model, x, target, rng)
    return data + kl * kl_weight


# ---------------------------------------------------------------------------
# Monte Carlo prediction
# ---------------------------------------------------------------------------

@dataclass
class PredictiveSamples:
    """M stochastic forward passes over a batch.

    Regression: ``means`` and ``variances`` of shape (M, batch, n_out).
    Classification: ``probs`` of shape (M, batch, n_out).
    """

    task: str
    means: np.ndarray | None = None
    variances: np.ndarray | None = None
    probs: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        arr = self.means if self.task == "regression" else self.probs
        return arr.shape[0]

    def to_raw(self, target_mean, target_std, n_targets: int) -> "PredictiveSamples":
        """Rescale normalized regression outputs to raw target units."""
        if self.task != "regression":
            return self
        reps = self.means.shape[-1] // n_targets
        m = np.tile(np.asarray(target_mean, dtype=float), reps)
        s = np.tile(np.asarray(target_std, dtype=float), reps)
        return PredictiveSamples(self.task, self.means * s + m, self.variances * s**2)


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng))


def _collect(task, outputs) -> PredictiveSamples:
    if task == "regression":
        return PredictiveSamples(task, np.stack([o[0] for o in outputs]),
                                 np.stack([o[1] for o in outputs]))
    return PredictiveSamples(task, probs=np.stack(outputs))


def mc_sample_predict(model, x, M: int, rng, mode: str | None = None) -> PredictiveSamples:
    """M independent stochastic forward passes; sample ``i`` uses substream ``i``.

    ``mode`` is ``dropout`` or ``weight-sample``; ``None`` uses the model's
    own kind of randomness.  SWAG posteriors draw a weight vector per pass.
    """
    if M < 1:
        raise ContractError("M must be >= 1")
    stream = _as_stream(rng)
    if isinstance(model, SwagPosterior):
        return model.sample_predict(x, M, stream)
    mode = mode or model.stochastic_mode
    weight_mode = "weight-sample" if mode == "weight-sample" else None
    outputs = []
    with no_grad():
        for i in range(M):
            ctx = Pass(stream.substream(i).generator(), stochastic=mode is not None,
                       weight_mode=weight_mode)
            out = model(x, ctx)
            outputs.append(tuple(t.data for t in out) if isinstance(out, tuple) else out.data)
    return _collect(model.task, outputs)


def deterministic_predict(model: Forecaster, x):
    with no_grad():
        out = model(x, Pass())
    return tuple(t.data for t in out) if isinstance(out, tuple) else out.data


# ---------------------------------------------------------------------------
# SWAG
# ---------------------------------------------------------------------------

@dataclass
class SwagState:
    """Running first/second weight moments and a ring buffer of deviations."""

    mean: np.ndarray
    sq_mean: np.ndarray
    deviations: list = field(default_factory=list)
    n: int = 0
    rank: int = 20
    cadence: int = 1

    @classmethod
    def empty(cls, dim: int, rank: int = 20, cadence: int = 1) -> "SwagState":
        if rank < 2:
            raise ContractError("SWAG rank must be >= 2")
        return cls(np.zeros(dim), np.zeros(dim), [], 0, rank, cadence)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def diag_variance(self) -> np.ndarray:
        return np.maximum(self.sq_mean - self.mean**2, 0.0)

    def deviation_matrix(self) -> np.ndarray:
        if not self.deviations:
            return np.zeros((self.dim, 0))
        return np.column_stack(self.deviations)

    def to_arrays(self) -> dict:
        return {
            "swag_mean": self.mean,
            "swag_sq_mean": self.sq_mean,
            "swag_deviations": self.deviation_matrix(),
            "swag_meta": np.array([self.n, self.rank, self.cadence]),
        }

    @classmethod
    def from_arrays(cls, arrays) -> "SwagState":
        n, rank, cadence = (int(v) for v in arrays["swag_meta"])
        dev = arrays["swag_deviations"]
        return cls(np.array(arrays["swag_mean"]), np.array(arrays["swag_sq_mean"]),
                   [dev[:, j].copy() for j in range(dev.shape[1])], n, rank, cadence)


def swag_collect(state: SwagState, weights) -> SwagState:
    """Fold one weight snapshot into the running moments (in place)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != state.mean.shape:
        raise ContractError(f"snapshot of shape {w.shape} for SWAG dim {state.dim}")
    n = state.n
    state.mean = (state.mean * n + w) / (n + 1)
    state.sq_mean = (state.sq_mean * n + w**2) / (n + 1)
    state.n = n + 1
    state.deviations.append(w - state.mean)
    if len(state.deviations) > state.rank:
        state.deviations.pop(0)
    return state


def swag_sample(state: SwagState, rng: np.random.Generator) -> np.ndarray:
    """theta = mean + sqrt(diag/2) z1 + D z2 / sqrt(2(K-1)), K = stored columns."""
    if state.n < 2:
        raise ContractError(f"SWAG sampling needs >= 2 snapshots, have {state.n}")
    z1 = rng.standard_normal(state.dim)
    out = state.mean + np.sqrt(state.diag_variance() / 2.0) * z1
    k = len(state.deviations)
    if k >= 2:
        z2 = rng.standard_normal(k)
        out = out + state.deviation_matrix() @ z2 / np.sqrt(2.0 * (k - 1))
    return out


class SwagPosterior:
    """A trained base network plus its SWAG state; sampling swaps weights in."""

    def __init__(self, base: Forecaster, state: SwagState):
        self.base = base
        self.state = state
        self.task = base.task
        self.trained = True

    def sample_predict(self, x, M: int, stream: RngStream) -> PredictiveSamples:
        saved = get_flat(self.base)
        outputs = []
        try:
            with no_grad():
                for i in range(M):
                    set_flat(self.base, swag_sample(self.state, stream.substream(i).generator()))
                    out = self.base(x, Pass())
                    outputs.append(tuple(t.data for t in out) if isinstance(out, tuple) else out.data)
        finally:
            set_flat(self.base, saved)
        return _collect(self.task, outputs)


# ---------------------------------------------------------------------------
# deep ensembles
# ---------------------------------------------------------------------------

@dataclass
class EnsembleHandle:
    members: list
    seeds: list

    def __post_init__(self):
        if len(self.members) != len(self.seeds):
            raise ContractError("one seed per ensemble member")
        if len(set(self.seeds)) != len(self.seeds):
            raise ContractError(f"ensemble member seeds must be distinct: {self.seeds}")

    @property
    def task(self) -> str:
        return self.members[0].task

    def __len__(self) -> int:
        return len(self.members)


def ensemble_predict(handle: EnsembleHandle, x) -> list:
    """One deterministic pass per member, in member order."""
    preds = []
    for i, member in enumerate(handle.members):
        if not getattr(member, "trained", False):
            raise ContractError(f"ensemble member {i} has not been trained")
        preds.append(deterministic_predict(member, x))
    return preds


def ensemble_samples(handle: EnsembleHandle, x) -> PredictiveSamples:
    return _collect(handle.task, ensemble_predict(handle, x))
