"""Small fully-connected function approximators with exact backprop and Adam.

Hidden layers use a leaky ReLU; the output head is linear, sigmoid, tanh,
or gaussian (mean plus clamped log-std pair, for stochastic policies).
Everything runs in float64 so gradient checks can be tight. Inputs may be a
single vector (n,) or a batch (B, n); parameter gradients returned by
`backward` are summed over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointUnreadable, ShapeMismatch

HEADS = ("linear", "sigmoid", "tanh", "gaussian")
LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def lrelu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0.0, x, slope * x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


@dataclass
class Mlp:
    """Feed-forward net; `params` lists [W0, b0, W1, b1, ...] as live views."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head: str = "linear"
    slope: float = 0.01
    logstd_clamp: tuple[float, float] = (-20.0, 2.0)

    def __post_init__(self) -> None:
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if self.head == "gaussian" and self.layer_sizes[-1] % 2 != 0:
            raise ValueError("gaussian head needs an even output size (mean, log_std)")
        if not self.logstd_clamp[0] < self.logstd_clamp[1]:
            raise ValueError("logstd clamp bounds must satisfy low < high")
        for l, (n_in, n_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            if self.weights[l].shape != (n_in, n_out) or self.biases[l].shape != (n_out,):
                raise ShapeMismatch(f"layer {l} parameter shapes do not match layer_sizes")

    @property
    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            head=self.head,
            slope=self.slope,
            logstd_clamp=self.logstd_clamp,
        )


def init_mlp(
    layer_sizes: tuple[int, ...],
    head: str = "linear",
    rng: np.random.Generator | int | None = None,
    slope: float = 0.01,
    logstd_clamp: tuple[float, float] = (-20.0, 2.0),
) -> Mlp:
    """Seeded uniform +-1/sqrt(fan_in) initialization per layer."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rng)))
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-bound, bound, size=n_out))
    return Mlp(tuple(layer_sizes), weights, biases, head, slope, logstd_clamp)


def _as_batch(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ShapeMismatch(
            f"input has shape {x.shape}, net expects (*, {net.layer_sizes[0]})"
        )
    return x, single


def _forward_trace(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Output plus hidden activations and the output-layer preactivation."""
    hidden = [x]
    h = x
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if l < last:
            h = lrelu(z, net.slope)
            hidden.append(h)
        else:
            h = z
    z_out = h
    if net.head == "linear":
        out = z_out
    elif net.head == "sigmoid":
        out = sigmoid(z_out)
    elif net.head == "tanh":
        out = np.tanh(z_out)
    else:  # gaussian
        m = net.layer_sizes[-1] // 2
        out = z_out.copy()
        out[:, m:] = np.clip(z_out[:, m:], net.logstd_clamp[0], net.logstd_clamp[1])
    return out, hidden, z_out


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the net on one input vector or a batch of rows."""
    xb, single = _as_batch(net, x)
    out, _, _ = _forward_trace(net, xb)
    return out[0] if single else out


def backward(
    net: Mlp, x: np.ndarray, upstream: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact gradients of sum(output * upstream) w.r.t. params and input.

    Returns (param_grads, input_grad) with param_grads ordered like
    `net.params`; batched parameter gradients are summed over rows.
    """
    xb, single = _as_batch(net, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if single:
        upstream = upstream[None, :]
    if upstream.shape != (xb.shape[0], net.layer_sizes[-1]):
        raise ShapeMismatch(
            f"upstream has shape {upstream.shape}, expected "
            f"({xb.shape[0]}, {net.layer_sizes[-1]})"
        )
    out, hidden, z_out = _forward_trace(net, xb)

    if net.head == "linear":
        g = upstream
    elif net.head == "sigmoid":
        g = upstream * out * (1.0 - out)
    elif net.head == "tanh":
        g = upstream * (1.0 - out * out)
    else:  # gaussian: identity on mean, clipped pass-through on log_std
        m = net.layer_sizes[-1] // 2
        g = upstream.copy()
        inside = (z_out[:, m:] > net.logstd_clamp[0]) & (z_out[:, m:] < net.logstd_clamp[1])
        g[:, m:] = upstream[:, m:] * inside

    w_grads: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    b_grads: list[np.ndarray] = [None] * len(net.biases)   # type: ignore[list-item]
    for l in range(len(net.weights) - 1, -1, -1):
        h_in = hidden[l]
        w_grads[l] = h_in.T @ g
        b_grads[l] = g.sum(axis=0)
        g = g @ net.weights[l].T
        if l > 0:
            # hidden[l] is the post-LReLU activation; slope where it was negative
            g = g * np.where(hidden[l] >= 0.0, 1.0, net.slope)
    grads: list[np.ndarray] = []
    for wg, bg in zip(w_grads, b_grads):
        grads.extend((wg, bg))
    return grads, (g[0] if single else g)


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators mirroring a parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: list[np.ndarray], lr: float) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        lr=lr,
    )


def adam_update(
    params: list[np.ndarray], grads: list[np.ndarray], opt: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One in-place Adam step; returns the same (params, opt) for chaining."""
    if len(params) != len(grads) or len(params) != len(opt.m):
        raise ShapeMismatch("params, grads, and optimizer state lengths differ")
    opt.t += 1
    c1 = 1.0 - opt.beta1 ** opt.t
    c2 = 1.0 - opt.beta2 ** opt.t
    for p, g, m, v in zip(params, grads, opt.m, opt.v):
        if p.shape != g.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)
    return params, opt


def squash(u: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        return sigmoid(u)
    if kind == "tanh":
        return np.tanh(u)
    raise ValueError(f"unknown squash {kind!r}")


def sample_squashed_gaussian(
    mean: np.ndarray,
    log_std: np.ndarray,
    noise: np.ndarray,
    kind: str = "sigmoid",
) -> tuple[np.ndarray, np.ndarray]:
    """Reparameterized squashed-Gaussian sample and its log-probability.

    u = mean + exp(log_std) * noise is squashed onto (0, 1) (sigmoid) or
    (-1, 1) (tanh); the log-probability is the Gaussian log-density of u
    minus the squash log-Jacobian, summed over the last axis.
    """
    mean = np.asarray(mean, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if mean.shape != log_std.shape or mean.shape != noise.shape:
        raise ShapeMismatch("mean, log_std, and noise must share a shape")
    u = mean + np.exp(log_std) * noise
    action = squash(u, kind)
    base = -0.5 * noise * noise - log_std - LOG_SQRT_2PI
    if kind == "sigmoid":
        log_jac = -softplus(u) - softplus(-u)   # log a(1-a)
    else:
        log_jac = 2.0 * (np.log(2.0) - u - softplus(-2.0 * u))  # log(1 - tanh^2)
    log_prob = np.sum(base - log_jac, axis=-1)
    return action, log_prob


def save_checkpoint(net: Mlp, path: str | Path) -> None:
    """Plain-text checkpoint: header lines, then one line per tensor."""
    lines = [
        "layer_sizes " + " ".join(str(n) for n in net.layer_sizes),
        f"head {net.head}",
        f"slope {net.slope!r}",
        f"logstd_clamp {net.logstd_clamp[0]!r} {net.logstd_clamp[1]!r}",
    ]
    for tensor in net.params:
        lines.append(" ".join(f"{v:.17g}" for v in tensor.ravel()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> Mlp:
    path = Path(path)
    if not path.exists():
        raise CheckpointUnreadable(f"checkpoint not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    try:
        sizes = tuple(int(tok) for tok in lines[0].split()[1:])
        head = lines[1].split()[1]
        slope = float(lines[2].split()[1])
        clamp = tuple(float(tok) for tok in lines[3].split()[1:])
        n_layers = len(sizes) - 1
        tensors = []
        for k in range(n_layers):
            n_in, n_out = sizes[k], sizes[k + 1]
            w = np.array(lines[4 + 2 * k].split(), dtype=np.float64)
            b = np.array(lines[5 + 2 * k].split(), dtype=np.float64)
            if w.size != n_in * n_out or b.size != n_out:
                raise ValueError("tensor length mismatch")
            tensors.append((w.reshape(n_in, n_out), b))
    except (IndexError, ValueError) as exc:
        raise CheckpointUnreadable(f"{path}: {exc}") from None
    return Mlp(
        layer_sizes=sizes,
        weights=[w for w, _ in tensors],
        biases=[b for _, b in tensors],
        head=head,
        slope=slope,
        logstd_clamp=(clamp[0], clamp[1]),
    )
