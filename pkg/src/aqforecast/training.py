"""Optimizer, learning-rate schedule and training loops.

``train`` runs plain minibatch training (ELBO for Bayesian models, mean
NLL / cross-entropy otherwise).  ``free_adversarial_train`` replays every
minibatch ``m`` times, each replay updating both the weights and an
L-infinity bounded input perturbation from the same backward pass, over
``epochs / m`` epochs so that the number of gradient computations matches
standard training.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import RngStream, Tensor
from .errors import ConfigError, ContractError, EmptyDatasetError, NumericError
from .nn import Module, Pass, get_flat
from .uncertainty import (
    EnsembleHandle,
    SwagPosterior,
    SwagState,
    data_term,
    elbo_terms,
    swag_collect,
)


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 1e-3
    decay: float = 0.97
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float | None = 5.0
    adversarial: bool = False
    epsilon: float = 0.01
    replays: int = 4
    kl_weight: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"decay factor must lie in (0, 1], got {self.decay}")
        if self.epsilon < 0:
            raise ConfigError("adversarial epsilon must be >= 0")
        if self.replays < 1:
            raise ConfigError("replay count must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def learning_rate(config: TrainConfig, epoch: int) -> float:
    """Exponentially decayed learning rate ``lr * decay**epoch``."""
    return config.lr * config.decay**epoch


class Adam:
    """Adaptive-moment optimizer with bias correction."""

    def __init__(self, named_params, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.named = list(named_params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for _, p in self.named]
        self.v = [np.zeros_like(p.data) for _, p in self.named]
        self.t = 0

    @classmethod
    def for_module(cls, module: Module, config: TrainConfig) -> "Adam":
        return cls(module.named_parameters(), config.beta1, config.beta2, config.adam_eps)

    def step(self, lr: float, clip_norm: float | None = None) -> None:
        grads = []
        for name, p in self.named:
            g = np.zeros_like(p.data) if p.grad is None else p.grad
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in parameter {name}")
            grads.append(g)
        if clip_norm is not None:
            norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if norm > clip_norm:
                grads = [g * (clip_norm / norm) for g in grads]
        optimizer_step([p for _, p in self.named], grads, self, lr)


def optimizer_step(params, grads, state: Adam, lr: float) -> None:
    """One Adam update of ``params`` in place using the moment buffers in ``state``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        p.data -= lr * (state.m[i] / c1) / (np.sqrt(state.v[i] / c2) + state.eps)


@dataclass
class LearningCurve:
    """Per-epoch losses: mean data term per output element, total KL, learning rate."""

    epoch: list = field(default_factory=list)
    data_loss: list = field(default_factory=list)
    kl_loss: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    gradient_steps: int = 0

    def append(self, epoch, data, kl, lr):
        self.epoch.append(epoch)
        self.data_loss.append(data)
        self.kl_loss.append(kl)
        self.lr.append(lr)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "data_loss", "kl_loss", "learning_rate"])
            for row in zip(self.epoch, self.data_loss, self.kl_loss, self.lr):
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])


def training_arrays(dataset, task: str) -> tuple[np.ndarray, np.ndarray]:
    """Inputs and flat horizon-major targets for ``task`` from a WindowedDataset."""
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if task == "regression":
        return dataset.inputs, dataset.normalized_targets().reshape(n, -1)
    return dataset.inputs, dataset.labels.reshape(n, -1).astype(np.float64)


def perturbation_step(delta, input_grad, epsilon: float) -> np.ndarray:
    """Signed-gradient ascent on the input perturbation, projected onto the
    L-infinity ball of radius ``epsilon``."""
    return np.clip(delta + epsilon * np.sign(input_grad), -epsilon, epsilon)


def _fit(model, x, target, config: TrainConfig, epochs: int, replays: int, epsilon: float,
         on_epoch_end: Callable | None = None, lr_fn: Callable | None = None,
         max_steps: int | None = None) -> LearningCurve:
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    stream = RngStream(config.seed)
    shuffle_rng = stream.substream(0).generator()
    noise_rng = stream.substream(1).generator()
    opt = Adam.for_module(model, config)
    n_batches = math.ceil(n / config.batch_size)
    bayesian = getattr(model, "kind", "") == "bnn"
    kl_weight = config.kl_weight if config.kl_weight is not None else 1.0 / n_batches
    delta = np.zeros((min(config.batch_size, n), *x.shape[1:]))
    curve = LearningCurve()
    lr_fn = lr_fn or (lambda e: learning_rate(config, e))

    for epoch in range(epochs):
        lr = lr_fn(epoch)
        order = shuffle_rng.permutation(n)
        data_total, kl_total, elems, steps = 0.0, 0.0, 0, 0
        for b in range(n_batches):
            if max_steps is not None and curve.gradient_steps >= max_steps:
                break
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            xb, yb = x[idx], target[idx]
            for _ in range(replays):
                if max_steps is not None and curve.gradient_steps >= max_steps:
                    break
                model.zero_grad()
                xin = Tensor(xb + delta[: len(idx)], requires_grad=epsilon > 0)
                if bayesian:
                    data, kl = elbo_terms(model, xin, yb, noise_rng)
                    loss = data + kl * kl_weight
                    data_total += data.item()
                    kl_total += kl.item()
                else:
                    loss = data_term(model, xin, yb, Pass(noise_rng, stochastic=True), "mean")
                    data_total += loss.item() * yb.size
                if not math.isfinite(loss.item()):
                    raise NumericError(f"training diverged at epoch {epoch}")
                elems += yb.size
                steps += 1
                loss.backward()
                opt.step(lr, config.clip_norm)
                curve.gradient_steps += 1
                if epsilon > 0:
                    delta[: len(idx)] = perturbation_step(delta[: len(idx)], xin.grad, epsilon)
        curve.append(epoch, data_total / elems, kl_total / steps if bayesian else 0.0, lr)
        if on_epoch_end is not None:
            on_epoch_end(epoch, model)
    if epochs > 0:
        model.trained = True
    return curve


def train(model, x, target, config: TrainConfig, on_epoch_end: Callable | None = None,
          lr_fn: Callable | None = None) -> LearningCurve:
    """Standard training for ``config.epochs`` epochs; returns the learning curve."""
    return _fit(model, x, target, config, config.epochs, 1, 0.0, on_epoch_end, lr_fn)


def free_adversarial_epochs(config: TrainConfig) -> int:
    return math.ceil(config.epochs / config.replays)


def _budget(x, config: TrainConfig) -> int:
    """Gradient computations of standard training: epochs times minibatches."""
    return config.epochs * math.ceil(len(x) / config.batch_size)


def free_adversarial_train(model, x, target, config: TrainConfig) -> LearningCurve:
    """Free adversarial training with ``config.replays`` replays and radius ``config.epsilon``."""
    if config.replays < 1:
        raise ContractError("replay count must be >= 1")
    return _fit(model, x, target, config, free_adversarial_epochs(config), config.replays,
                config.epsilon, max_steps=_budget(x, config))


def fit(model, x, target, config: TrainConfig) -> LearningCurve:
    """Dispatch on ``config.adversarial``."""
    if config.adversarial and config.epsilon > 0:
        return free_adversarial_train(model, x, target, config)
    return train(model, x, target, config)


def train_swag(model, x, target, config: TrainConfig, rank: int = 20, start_fraction: float = 0.75,
               cadence: int = 1) -> tuple[SwagPosterior, LearningCurve]:
    """Train and collect SWAG moments once every ``cadence`` epochs after
    ``start_fraction`` of the epochs, holding the learning rate constant
    from that point on."""
    adversarial = config.adversarial and config.epsilon > 0
    epochs = free_adversarial_epochs(config) if adversarial else config.epochs
    start = min(int(math.floor(start_fraction * epochs)), max(epochs - 2, 0))
    state = SwagState.empty(model.n_parameters(), rank, cadence)
    held = learning_rate(config, start)

    def lr_fn(epoch):
        return learning_rate(config, epoch) if epoch < start else held

    def collect(epoch, m):
        if epoch >= start and (epoch - start) % cadence == 0:
            swag_collect(state, get_flat(m))

    if adversarial:
        curve = _fit(model, x, target, config, epochs, config.replays, config.epsilon, collect,
                     lr_fn, _budget(x, config))
    else:
        curve = _fit(model, x, target, config, epochs, 1, 0.0, collect, lr_fn)
    if state.n < 2:
        raise ContractError(f"SWAG collected only {state.n} snapshot(s); train for more epochs")
    return SwagPosterior(model, state), curve


def train_ensemble(factory: Callable[[int], object], x, target, config: TrainConfig,
                   size: int = 10) -> tuple[EnsembleHandle, list[LearningCurve]]:
    """Train ``size`` members that differ only by seed (initialization and shuffling)."""
    seeds = [config.seed + 1000 * (i + 1) for i in range(size)]
    members, curves = [], []
    for s in seeds:
        member = factory(s)
        cfg = TrainConfig(**{**config.to_dict(), "seed": s})
        curves.append(fit(member, x, target, cfg))
        members.append(member)
    return EnsembleHandle(members, seeds), curves
