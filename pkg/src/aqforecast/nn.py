"""Neural building blocks on top of :mod:`aqforecast.autodiff`.

Layers are small callables ``layer(x, ctx)`` where ``ctx`` is a
:class:`Pass` describing the randomness of the current forward pass.
Deterministic layers ignore it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, DimensionError

VAR_FLOOR = 1e-6
LOG_2PI = float(np.log(2 * np.pi))


@dataclass
class Pass:
    """Randomness settings for one forward pass.

    ``stochastic`` switches dropout masks and weight sampling on;
    ``weight_mode`` overrides how variational layers sample when stochastic
    (``weight-sample`` or ``local-reparam``; ``None`` defers to the model).
    """

    rng: np.random.Generator | None = None
    stochastic: bool = False
    weight_mode: str | None = None

    def require_rng(self) -> np.random.Generator:
        if self.rng is None:
            raise ContractError("stochastic forward pass needs an rng")
        return self.rng


DETERMINISTIC = Pass()


class Module:
    """Parameter container; parameters are discovered from attributes."""

    def named_parameters(self, prefix: str = "") -> list[tuple[str, Tensor]]:
        out = []
        for key, val in vars(self).items():
            if key.startswith("_"):
                continue
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                out.append((name, val))
            elif isinstance(val, Module):
                out.extend(val.named_parameters(name + "."))
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        out.extend(item.named_parameters(f"{name}.{i}."))
                    elif isinstance(item, Tensor) and item.requires_grad:
                        out.append((f"{name}.{i}", item))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def submodules(self):
        for key, val in vars(self).items():
            if key.startswith("_"):
                continue
            if isinstance(val, Module):
                yield val
                yield from val.submodules()
            elif isinstance(val, (list, tuple)):
                for item in val:
                    if isinstance(item, Module):
                        yield item
                        yield from item.submodules()


def get_flat(module: Module) -> np.ndarray:
    ps = module.parameters()
    return np.concatenate([p.data.reshape(-1) for p in ps]) if ps else np.empty(0)


def set_flat(module: Module, vec: np.ndarray) -> None:
    vec = np.asarray(vec, dtype=np.float64)
    total = module.n_parameters()
    if vec.shape != (total,):
        raise DimensionError(f"flat vector of shape {vec.shape} for {total} parameters")
    i = 0
    for p in module.parameters():
        p.data[...] = vec[i : i + p.size].reshape(p.shape)
        i += p.size


def _glorot(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


# ---------------------------------------------------------------------------
# dense and dropout
# ---------------------------------------------------------------------------

class Dense(Module):
    """Affine map ``x W^T + b`` with W of shape (out, in)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None,
                 weight=None, bias=None):
        if weight is None:
            weight = _glorot(rng or np.random.default_rng(0), n_out, n_in)
        self.weight = ad.parameter(weight)
        self.bias = ad.parameter(np.zeros(n_out) if bias is None else bias)
        if self.weight.shape != (n_out, n_in) or self.bias.shape != (n_out,):
            raise DimensionError(
                f"dense layer expects weight {(n_out, n_in)} and bias {(n_out,)}, "
                f"got {self.weight.shape} and {self.bias.shape}"
            )

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    def __call__(self, x, ctx: Pass = DETERMINISTIC) -> Tensor:
        return dense_forward(self, x)


def dense_forward(layer: Dense, x) -> Tensor:
    x = ad.as_tensor(x)
    if x.shape[-1] != layer.n_in:
        raise DimensionError(f"input width {x.shape[-1]} does not match layer width {layer.n_in}")
    return x @ ad.transpose(layer.weight) + layer.bias


def dropout_forward(x, rate: float, ctx: Pass = DETERMINISTIC) -> Tensor:
    """Inverted dropout; identity unless ``ctx.stochastic``."""
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
    x = ad.as_tensor(x)
    if not ctx.stochastic or rate == 0.0:
        return x
    mask = (ctx.require_rng().random(x.shape) >= rate) / (1.0 - rate)
    return x * mask


def bernoulli_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


# ---------------------------------------------------------------------------
# variational dense
# ---------------------------------------------------------------------------

@dataclass
class Prior:
    """Factorized weight prior: ``gaussian`` (scale = σ) or ``laplace`` (scale = b)."""

    family: str = "gaussian"
    loc: float = 0.0
    scale: float = 0.1

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace"):
            raise ContractError(f"unsupported prior family {self.family!r}")
        if self.scale <= 0:
            raise ContractError("prior scale must be positive")

    def log_density(self, w):
        """Summed log density; accepts arrays or tensors."""
        if isinstance(w, Tensor):
            if self.family == "gaussian":
                z = (w - self.loc) * (1.0 / self.scale)
                return ad.tsum(ad.square(z) * -0.5) - w.size * (np.log(self.scale) + 0.5 * LOG_2PI)
            return ad.tsum(ad.absolute(w - self.loc)) * (-1.0 / self.scale) - w.size * np.log(2 * self.scale)
        w = np.asarray(w)
        if self.family == "gaussian":
            return -0.5 * ((w - self.loc) / self.scale) ** 2 - np.log(self.scale) - 0.5 * LOG_2PI
        return -np.abs(w - self.loc) / self.scale - np.log(2 * self.scale)


class VariationalDense(Module):
    """Dense layer with a factorized Gaussian posterior over W and b.

    Posterior scales are ``softplus(rho)``.
    """

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None,
                 prior: Prior | None = None, rho_init: float = -5.0):
        rng = rng or np.random.default_rng(0)
        self.weight_mu = ad.parameter(_glorot(rng, n_out, n_in))
        self.weight_rho = ad.parameter(np.full((n_out, n_in), rho_init))
        self.bias_mu = ad.parameter(np.zeros(n_out))
        self.bias_rho = ad.parameter(np.full(n_out, rho_init))
        self.prior = prior or Prior()
        self._sampled: tuple[Tensor, Tensor] | None = None

    @property
    def n_in(self) -> int:
        return self.weight_mu.shape[1]

    def weight_sigma(self) -> Tensor:
        return ad.softplus(self.weight_rho)

    def bias_sigma(self) -> Tensor:
        return ad.softplus(self.bias_rho)

    def __call__(self, x, ctx: Pass = DETERMINISTIC) -> Tensor:
        mode = (ctx.weight_mode or "local-reparam") if ctx.stochastic else "mean"
        return variational_dense_forward(self, x, ctx.rng, mode)

    def kl(self, rng: np.random.Generator | None = None) -> Tensor:
        """KL(q || prior) for this layer: closed form when the prior is Gaussian,
        otherwise a one-sample Monte Carlo estimate (reusing the last weight
        sample when there is one)."""
        from .uncertainty import kl_gaussian_closed

        if self.prior.family == "gaussian":
            return kl_gaussian_closed(
                self.weight_mu, self.weight_sigma(), self.prior.loc, self.prior.scale
            ) + kl_gaussian_closed(self.bias_mu, self.bias_sigma(), self.prior.loc, self.prior.scale)
        if self._sampled is None:
            if rng is None:
                raise ContractError("Monte Carlo KL needs an rng or a prior weight sample")
            self._sample_weights(rng)
        w, b = self._sampled
        self._sampled = None
        total = None
        for sample, mu, sigma in ((w, self.weight_mu, self.weight_sigma()),
                                  (b, self.bias_mu, self.bias_sigma())):
            log_q = _gaussian_log_density(sample, mu, sigma)
            log_p = self.prior.log_density(sample)
            term = log_q - log_p
            total = term if total is None else total + term
        if not np.isfinite(total.data):
            from .errors import NumericError
            raise NumericError("non-finite KL estimate in variational layer")
        return total

    def _sample_weights(self, rng: np.random.Generator) -> tuple[Tensor, Tensor]:
        w = self.weight_mu + self.weight_sigma() * rng.standard_normal(self.weight_mu.shape)
        b = self.bias_mu + self.bias_sigma() * rng.standard_normal(self.bias_mu.shape)
        # only samples that carry a graph are worth reusing in the KL estimate
        self._sampled = (w, b) if ad.grad_enabled() else None
        return w, b


def _gaussian_log_density(w: Tensor, mu, sigma: Tensor) -> Tensor:
    z = (w - mu) / sigma
    return ad.tsum(ad.square(z) * -0.5 - ad.log(sigma)) - w.size * 0.5 * LOG_2PI


def variational_dense_forward(layer: VariationalDense, x, rng, mode: str = "local-reparam") -> Tensor:
    """Forward pass in ``mean``, ``weight-sample`` or ``local-reparam`` mode."""
    x = ad.as_tensor(x)
    if x.shape[-1] != layer.n_in:
        raise DimensionError(f"input width {x.shape[-1]} does not match layer width {layer.n_in}")
    if mode == "mean":
        return x @ ad.transpose(layer.weight_mu) + layer.bias_mu
    if rng is None:
        raise ContractError(f"{mode} forward pass needs an rng")
    if mode == "weight-sample":
        w, b = layer._sample_weights(rng)
        return x @ ad.transpose(w) + b
    if mode == "local-reparam":
        mean = x @ ad.transpose(layer.weight_mu) + layer.bias_mu
        var = ad.square(x) @ ad.transpose(ad.square(layer.weight_sigma())) + ad.square(layer.bias_sigma())
        eps = rng.standard_normal(mean.shape)
        return mean + ad.sqrt(var + 1e-30) * eps
    raise ContractError(f"unknown variational mode {mode!r}")


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmState:
    """Hidden/cell state plus the dropout masks fixed for the whole sequence."""

    h: Tensor
    c: Tensor
    input_mask: np.ndarray
    recurrent_mask: np.ndarray
    output_mask: np.ndarray


class LSTMCell(Module):
    """Gate order along the 4H axis: input, forget, output, candidate."""

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.n_in, self.n_hidden = n_in, n_hidden
        self.w_x = ad.parameter(_glorot(rng, 4 * n_hidden, n_in).T.copy())
        self.w_h = ad.parameter(_glorot(rng, 4 * n_hidden, n_hidden).T.copy())
        b = np.zeros(4 * n_hidden)
        b[n_hidden : 2 * n_hidden] = 1.0
        self.bias = ad.parameter(b)

    def initial_state(self, batch: int, rate: float = 0.0, ctx: Pass = DETERMINISTIC) -> LstmState:
        H = self.n_hidden
        if ctx.stochastic and rate > 0:
            rng = ctx.require_rng()
            masks = (bernoulli_mask(rng, (batch, self.n_in), rate),
                     bernoulli_mask(rng, (batch, H), rate),
                     bernoulli_mask(rng, (batch, H), rate))
        else:
            masks = (np.ones((batch, self.n_in)), np.ones((batch, H)), np.ones((batch, H)))
        zeros = Tensor(np.zeros((batch, H)))
        return LstmState(zeros, zeros, *masks)


def lstm_step(cell: LSTMCell, state: LstmState, x_t) -> tuple[Tensor, LstmState]:
    """One timestep; returns (masked output, next state)."""
    H = cell.n_hidden
    x_t = ad.as_tensor(x_t) * state.input_mask
    z = x_t @ cell.w_x + (state.h * state.recurrent_mask) @ cell.w_h + cell.bias
    i = ad.sigmoid(z[:, 0:H])
    f = ad.sigmoid(z[:, H : 2 * H])
    o = ad.sigmoid(z[:, 2 * H : 3 * H])
    g = ad.tanh(z[:, 3 * H : 4 * H])
    c = f * state.c + i * g
    h = o * ad.tanh(c)
    nxt = LstmState(h, c, state.input_mask, state.recurrent_mask, state.output_mask)
    return h * state.output_mask, nxt


class LSTMLayer(Module):
    def __init__(self, n_in: int, n_hidden: int, rng=None, dropout: float = 0.0):
        self.cell = LSTMCell(n_in, n_hidden, rng)
        self.dropout = dropout

    def __call__(self, seq: Tensor, ctx: Pass = DETERMINISTIC) -> list[Tensor]:
        seq = ad.as_tensor(seq)
        state = self.cell.initial_state(seq.shape[0], self.dropout, ctx)
        outs = []
        for t in range(seq.shape[1]):
            out, state = lstm_step(self.cell, state, seq[:, t, :])
            outs.append(out)
        return outs


# ---------------------------------------------------------------------------
# graph blocks
# ---------------------------------------------------------------------------

def glu_forward(x, weight, bias, gate_weight, gate_bias) -> Tensor:
    """``(x W + b) * sigmoid(x V + c)``; weights are (in, out)."""
    x = ad.as_tensor(x)
    return (x @ weight + bias) * ad.sigmoid(x @ gate_weight + gate_bias)


class GLU(Module):
    def __init__(self, n_in: int, n_out: int, rng=None):
        rng = rng or np.random.default_rng(0)
        self.weight = ad.parameter(_glorot(rng, n_in, n_out))
        self.bias = ad.parameter(np.zeros(n_out))
        self.gate_weight = ad.parameter(_glorot(rng, n_in, n_out))
        self.gate_bias = ad.parameter(np.zeros(n_out))

    def __call__(self, x, ctx: Pass = DETERMINISTIC) -> Tensor:
        return glu_forward(x, self.weight, self.bias, self.gate_weight, self.gate_bias)


def learned_adjacency(embeddings) -> Tensor:
    """Row-stochastic adjacency ``softmax(relu(E E^T))`` over rows."""
    e = ad.as_tensor(embeddings)
    if e.ndim != 2 or e.shape[1] < 1:
        raise DimensionError(f"node embeddings must be (nodes, d>=1), got {e.shape}")
    return ad.softmax(ad.relu(e @ ad.transpose(e)), axis=1)


def graph_conv(adjacency, h, weight) -> Tensor:
    """``relu(A H W)`` for H of shape (nodes, F) or (batch, nodes, F)."""
    a = ad.as_tensor(adjacency)
    rows = a.data.sum(axis=1)
    if np.any(a.data < -1e-12) or not np.allclose(rows, 1.0, atol=1e-8):
        raise ContractError("graph_conv needs a row-stochastic adjacency matrix")
    return ad.relu(a @ ad.as_tensor(h) @ weight)


class TemporalConv(Module):
    """Single-channel 1-D convolution over each node's history.

    Input (batch, nodes, T) -> output (batch, nodes, (T-k+1)*channels).
    """

    def __init__(self, kernel: int, channels: int, rng=None):
        rng = rng or np.random.default_rng(0)
        self.kernel = kernel
        self.weight = ad.parameter(_glorot(rng, kernel, channels))
        self.bias = ad.parameter(np.zeros(channels))

    def __call__(self, x, ctx: Pass = DETERMINISTIC) -> Tensor:
        x = ad.as_tensor(x)
        T = x.shape[-1]
        if T < self.kernel:
            raise DimensionError(f"sequence length {T} shorter than kernel {self.kernel}")
        idx = np.arange(T - self.kernel + 1)[:, None] + np.arange(self.kernel)[None, :]
        windows = ad.take(x, idx, axis=2)
        out = ad.relu(windows @ self.weight + self.bias)
        b, n = x.shape[0], x.shape[1]
        return out.reshape(b, n, -1)


# ---------------------------------------------------------------------------
# output heads
# ---------------------------------------------------------------------------

class HeteroscedasticHead(Module):
    """Mean and variance heads; variance = softplus(raw) + floor."""

    def __init__(self, mean_layer, var_layer, var_floor: float = VAR_FLOOR):
        self.mean_layer = mean_layer
        self.var_layer = var_layer
        self.var_floor = var_floor

    @classmethod
    def dense(cls, n_in: int, n_out: int, rng=None, var_floor: float = VAR_FLOOR):
        return cls(Dense(n_in, n_out, rng), Dense(n_in, n_out, rng), var_floor)

    @classmethod
    def variational(cls, n_in: int, n_out: int, rng=None, prior=None, var_floor: float = VAR_FLOOR):
        return cls(VariationalDense(n_in, n_out, rng, prior), VariationalDense(n_in, n_out, rng, prior),
                   var_floor)

    def __call__(self, features, ctx: Pass = DETERMINISTIC) -> tuple[Tensor, Tensor]:
        return hetero_head_forward(self, features, ctx)


def hetero_head_forward(head: HeteroscedasticHead, features, ctx: Pass = DETERMINISTIC):
    mean = head.mean_layer(features, ctx)
    var = ad.softplus(head.var_layer(features, ctx)) + head.var_floor
    return mean, var
