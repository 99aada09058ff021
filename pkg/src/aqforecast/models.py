"""Forecasting networks.

Every forecaster maps a batch of input windows (batch, history, n_inputs)
to ``n_out = horizon * n_targets`` outputs ordered horizon-major
(output ``h * n_targets + j`` is target ``j`` at lead ``h``).  Regression
models return ``(mean, variance)`` in normalized target units,
classification models return exceedance probabilities.

``model.spec`` is a plain dict from which :func:`build_model` rebuilds the
same architecture, which is what checkpoints store.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ContractError
from .nn import (
    DETERMINISTIC,
    GLU,
    Dense,
    HeteroscedasticHead,
    LSTMLayer,
    Module,
    Pass,
    Prior,
    TemporalConv,
    VariationalDense,
    dropout_forward,
    graph_conv,
    learned_adjacency,
)

TASKS = ("regression", "classification")


class Forecaster(Module):
    kind = "base"
    #: which randomness an MC pass uses: "dropout", "weight-sample" or None
    stochastic_mode: str | None = None

    def __init__(self, task: str, n_out: int):
        if task not in TASKS:
            raise ContractError(f"task must be one of {TASKS}, got {task!r}")
        self.task = task
        self.n_out = n_out
        self.trained = False
        self.spec: dict = {}

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        raise NotImplementedError

    def kl(self, rng=None) -> Tensor | None:
        return None

    def _emit(self, feats, ctx):
        if self.task == "regression":
            return self.head(feats, ctx)
        return ad.sigmoid(self.head(feats, ctx))


class MLPForecaster(Forecaster):
    """Feed-forward net over the flattened window, dropout after each hidden layer."""

    kind = "mlp"
    stochastic_mode = "dropout"

    def __init__(self, n_in: int, n_out: int, task: str = "regression",
                 hidden=(128, 128), dropout: float = 0.5, seed: int = 0):
        super().__init__(task, n_out)
        rng = np.random.default_rng(seed)
        self.spec = dict(kind=self.kind, n_in=n_in, n_out=n_out, task=task,
                         hidden=list(hidden), dropout=dropout, seed=seed)
        self.dropout = dropout
        sizes = [n_in, *hidden]
        self.layers = [Dense(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        if task == "regression":
            self.head = HeteroscedasticHead.dense(sizes[-1], n_out, rng)
        else:
            self.head = Dense(sizes[-1], n_out, rng)

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        h = _flatten(x)
        for layer in self.layers:
            h = dropout_forward(ad.relu(layer(h)), self.dropout, ctx)
        return self._emit(h, ctx)


class BayesianMLP(Forecaster):
    """Feed-forward net whose every layer has a Gaussian weight posterior."""

    kind = "bnn"
    stochastic_mode = "weight-sample"

    def __init__(self, n_in: int, n_out: int, task: str = "regression", hidden=(128, 128),
                 prior: dict | None = None, weight_mode: str | None = None,
                 rho_init: float = -5.0, seed: int = 0):
        super().__init__(task, n_out)
        rng = np.random.default_rng(seed)
        if prior is None:
            prior = {"family": "laplace", "loc": 0.0, "scale": 0.1} if task == "regression" \
                else {"family": "gaussian", "loc": 0.0, "scale": 0.1}
        if weight_mode is None:
            weight_mode = "weight-sample" if task == "regression" else "local-reparam"
        self.spec = dict(kind=self.kind, n_in=n_in, n_out=n_out, task=task, hidden=list(hidden),
                         prior=dict(prior), weight_mode=weight_mode, rho_init=rho_init, seed=seed)
        self.prior = Prior(**prior)
        self.weight_mode = weight_mode
        sizes = [n_in, *hidden]
        self.layers = [VariationalDense(a, b, rng, self.prior, rho_init)
                       for a, b in zip(sizes[:-1], sizes[1:])]
        if task == "regression":
            self.head = HeteroscedasticHead(
                VariationalDense(sizes[-1], n_out, rng, self.prior, rho_init),
                VariationalDense(sizes[-1], n_out, rng, self.prior, rho_init),
            )
        else:
            self.head = VariationalDense(sizes[-1], n_out, rng, self.prior, rho_init)

    def variational_layers(self) -> list[VariationalDense]:
        return [m for m in self.submodules() if isinstance(m, VariationalDense)]

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        ctx = Pass(ctx.rng, ctx.stochastic, ctx.weight_mode or self.weight_mode)
        h = _flatten(x)
        for layer in self.layers:
            h = ad.relu(layer(h, ctx))
        return self._emit(h, ctx)

    def kl(self, rng=None) -> Tensor:
        total = None
        for layer in self.variational_layers():
            term = layer.kl(rng)
            total = term if total is None else total + term
        return total


class LSTMForecaster(Forecaster):
    """Stacked LSTM with per-sequence (variational) dropout masks."""

    kind = "lstm"
    stochastic_mode = "dropout"

    def __init__(self, n_features: int, n_out: int, task: str = "regression",
                 hidden: int = 64, layers: int = 2, dropout: float = 0.5, seed: int = 0):
        super().__init__(task, n_out)
        rng = np.random.default_rng(seed)
        self.spec = dict(kind=self.kind, n_features=n_features, n_out=n_out, task=task,
                         hidden=hidden, layers=layers, dropout=dropout, seed=seed)
        sizes = [n_features] + [hidden] * layers
        self.lstm = [LSTMLayer(a, b, rng, dropout) for a, b in zip(sizes[:-1], sizes[1:])]
        if task == "regression":
            self.head = HeteroscedasticHead.dense(hidden, n_out, rng)
        else:
            self.head = Dense(hidden, n_out, rng)

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        seq = ad.as_tensor(x)
        for layer in self.lstm:
            outs = layer(seq, ctx)
            seq = ad.stack(outs, axis=1)
        return self._emit(outs[-1], ctx)


class GraphForecaster(Forecaster):
    """Time-domain graph forecaster over the target series as nodes.

    Per node: 1-D temporal convolution over its own history, three GLU
    sub-layers, then a graph convolution with a learned adjacency, then
    two fully connected layers shared by all nodes (which also see the
    latest exogenous inputs), then a per-node output head over the horizon.
    Dropout follows every sub-layer activation.
    """

    kind = "gnn"
    stochastic_mode = "dropout"

    def __init__(self, n_nodes: int, history: int, n_exog: int, horizon: int,
                 task: str = "regression", embed_dim: int = 16, kernel: int = 3,
                 channels: int = 8, hidden: int = 64, dropout: float = 0.5, seed: int = 0):
        super().__init__(task, n_nodes * horizon)
        rng = np.random.default_rng(seed)
        kernel = min(kernel, history)
        self.spec = dict(kind=self.kind, n_nodes=n_nodes, history=history, n_exog=n_exog,
                         horizon=horizon, task=task, embed_dim=embed_dim, kernel=kernel,
                         channels=channels, hidden=hidden, dropout=dropout, seed=seed)
        self.n_nodes, self.horizon, self.dropout = n_nodes, horizon, dropout
        self.embeddings = ad.parameter(rng.normal(0.0, 1.0, (n_nodes, embed_dim)))
        self.conv = TemporalConv(kernel, channels, rng)
        conv_out = (history - kernel + 1) * channels
        self.glus = [GLU(conv_out, hidden, rng), GLU(hidden, hidden, rng), GLU(hidden, hidden, rng)]
        self.graph_weight = ad.parameter(
            rng.uniform(-1, 1, (hidden, hidden)) * np.sqrt(3.0 / hidden)
        )
        self.fc = [Dense(hidden + n_exog, hidden, rng), Dense(hidden, hidden, rng)]
        if task == "regression":
            self.head = HeteroscedasticHead.dense(hidden, horizon, rng)
        else:
            self.head = Dense(hidden, horizon, rng)

    def adjacency(self) -> Tensor:
        return learned_adjacency(self.embeddings)

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        x = ad.as_tensor(x)
        n = self.n_nodes
        nodes = ad.transpose(x[:, :, :n], (0, 2, 1))
        h = dropout_forward(self.conv(nodes), self.dropout, ctx)
        for glu in self.glus:
            h = dropout_forward(glu(h), self.dropout, ctx)
        h = dropout_forward(graph_conv(self.adjacency(), h, self.graph_weight), self.dropout, ctx)
        exog = x[:, -1:, n:]
        if exog.shape[2]:
            h = ad.concat([h, ad.take(exog, np.zeros(n, dtype=int), axis=1)], axis=2)
        for layer in self.fc:
            h = dropout_forward(ad.relu(layer(h)), self.dropout, ctx)
        out = self._emit(h, ctx)
        if self.task == "regression":
            return tuple(self._reorder(t) for t in out)
        return self._reorder(out)

    def _reorder(self, t: Tensor) -> Tensor:
        b = t.shape[0]
        return ad.transpose(t, (0, 2, 1)).reshape(b, self.horizon * self.n_nodes)


class QuantileForecaster(Forecaster):
    """Dense net with two pinball heads (lower and upper quantile)."""

    kind = "quantile"
    stochastic_mode = None

    def __init__(self, n_in: int, n_out: int, quantiles=(0.05, 0.95), hidden=(128, 128),
                 seed: int = 0):
        super().__init__("regression", n_out)
        rng = np.random.default_rng(seed)
        self.spec = dict(kind=self.kind, n_in=n_in, n_out=n_out, quantiles=list(quantiles),
                         hidden=list(hidden), seed=seed)
        self.quantiles = tuple(quantiles)
        sizes = [n_in, *hidden]
        self.layers = [Dense(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.lower = Dense(sizes[-1], n_out, rng)
        self.upper = Dense(sizes[-1], n_out, rng)

    def __call__(self, x, ctx: Pass = DETERMINISTIC):
        h = _flatten(x)
        for layer in self.layers:
            h = ad.relu(layer(h))
        return self.lower(h), self.upper(h)


def _flatten(x) -> Tensor:
    x = ad.as_tensor(x)
    return x.reshape(x.shape[0], -1) if x.ndim > 2 else x


_KINDS = {
    cls.kind: cls
    for cls in (MLPForecaster, BayesianMLP, LSTMForecaster, GraphForecaster, QuantileForecaster)
}


def build_model(spec: dict) -> Forecaster:
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown model kind {kind!r}") from None
    if "hidden" in spec and isinstance(spec["hidden"], list) and cls is not LSTMForecaster \
            and cls is not GraphForecaster:
        spec["hidden"] = tuple(spec["hidden"])
    if "quantiles" in spec:
        spec["quantiles"] = tuple(spec["quantiles"])
    return cls(**spec)


def make_forecaster(method: str, dataset_shape: tuple, task: str, *, dropout: float = 0.5,
                    hidden=(128, 128), lstm_hidden: int = 64, lstm_layers: int = 2,
                    embed_dim: int = 16, seed: int = 0) -> Forecaster:
    """Default architecture for a method given (history, n_inputs, horizon, n_targets)."""
    history, n_inputs, horizon, n_targets = dataset_shape
    n_in, n_out = history * n_inputs, horizon * n_targets
    if method == "bnn":
        return BayesianMLP(n_in, n_out, task, hidden, seed=seed)
    if method in ("mc-dropout", "ensemble"):
        return MLPForecaster(n_in, n_out, task, hidden, dropout, seed)
    if method == "swag":
        return MLPForecaster(n_in, n_out, task, hidden, 0.0, seed)
    if method == "lstm-mc":
        return LSTMForecaster(n_inputs, n_out, task, lstm_hidden, lstm_layers, dropout, seed)
    if method == "gnn-mc":
        return GraphForecaster(n_targets, history, n_inputs - n_targets, horizon, task,
                               embed_dim=embed_dim, hidden=hidden[0] if hidden else 64,
                               dropout=dropout, seed=seed)
    if method == "quantile":
        return QuantileForecaster(n_in, n_out, hidden=hidden, seed=seed)
    raise ConfigError(f"no network for method {method!r}")
