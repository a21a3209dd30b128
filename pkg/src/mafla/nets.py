"""Small feed-forward networks with input-gradient and nested-gradient support.

Two heads: "vector" nets map R^d -> R^d (score models), "scalar_logit" nets
map R^d -> R (acceptance logits, squashed by a sigmoid downstream).  Parameters
live in a single flat float64 vector so checkpoints and optimizers stay
trivial.  All gradients flow through the autodiff graph, so a loss may contain
input gradients of the network and still yield exact parameter gradients.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ParameterError
from .rng import as_generator

_ACTIVATIONS = {"tanh": ad.tanh, "softplus": ad.softplus}


def param_count(layer_widths):
    return sum(layer_widths[i] * layer_widths[i + 1] + layer_widths[i + 1]
               for i in range(len(layer_widths) - 1))


@dataclass
class MLPNet:
    layer_widths: list
    activation: str = "tanh"
    output_head: str = "vector"  # "vector" | "scalar_logit"
    params: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if self.output_head not in ("vector", "scalar_logit"):
            raise ParameterError(f"unknown head {self.output_head!r}")
        if any(w < 1 for w in self.layer_widths):
            raise ParameterError("layer widths must be >= 1")
        if self.output_head == "scalar_logit" and self.layer_widths[-1] != 1:
            raise ParameterError("scalar_logit head requires final width 1")
        n = param_count(self.layer_widths)
        if self.params is None:
            self.params = np.zeros(n)
        elif len(self.params) != n:
            raise ParameterError(
                f"params length {len(self.params)} does not match architecture ({n})")

    @property
    def in_dim(self):
        return self.layer_widths[0]

    def arch_hash(self):
        blob = json.dumps([self.layer_widths, self.activation, self.output_head])
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def init_mlp(layer_widths, activation="tanh", output_head="vector", rng=0,
             scale=1.0) -> MLPNet:
    """Symmetric uniform fan-in initialization, fully determined by rng."""
    g = as_generator(rng)
    chunks = []
    for i in range(len(layer_widths) - 1):
        fan_in = layer_widths[i]
        bound = scale / np.sqrt(fan_in)
        chunks.append(g.uniform(-bound, bound, size=fan_in * layer_widths[i + 1]))
        chunks.append(np.zeros(layer_widths[i + 1]))
    return MLPNet(list(layer_widths), activation, output_head,
                  params=np.concatenate(chunks))


def _unpack(params_t: ad.Tensor, widths):
    layers, off = [], 0
    for i in range(len(widths) - 1):
        n_in, n_out = widths[i], widths[i + 1]
        W = ad.reshape(params_t[off:off + n_in * n_out], (n_in, n_out))
        off += n_in * n_out
        b = params_t[off:off + n_out]
        off += n_out
        layers.append((W, b))
    return layers


def forward_graph(net: MLPNet, params_t: ad.Tensor, x_t: ad.Tensor) -> ad.Tensor:
    """Graph forward pass; x_t has shape (n, in_dim)."""
    act = _ACTIVATIONS[net.activation]
    h = x_t
    layers = _unpack(params_t, net.layer_widths)
    for k, (W, b) in enumerate(layers):
        h = ad.matmul(h, W) + ad.reshape(b, (1, -1))
        if k < len(layers) - 1:
            h = act(h)
    if net.output_head == "scalar_logit":
        h = ad.reshape(h, (-1,))
    return h


def forward(net: MLPNet, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, float))
    if x.shape[1] != net.in_dim:
        raise ParameterError(f"input dim {x.shape[1]} != net in_dim {net.in_dim}")
    return forward_graph(net, ad.Tensor(net.params), ad.Tensor(x)).data


def input_grad(net: MLPNet, x, v=None) -> np.ndarray:
    """Per-row input gradients.

    Scalar head: rows of d(out_i)/d(x_i).  Vector head: rows of J(x_i)^T v_i
    (vector-Jacobian products), with v of matching shape.
    """
    x = np.atleast_2d(np.asarray(x, float))
    x_t = ad.Tensor(x)
    out = forward_graph(net, ad.Tensor(net.params), x_t)
    if net.output_head == "scalar_logit":
        total = ad.tsum(out)
    else:
        if v is None:
            raise ParameterError("vector head requires a cotangent v")
        v = np.atleast_2d(np.asarray(v, float))
        total = ad.tsum(ad.mul(out, ad.constant(v)))
    return ad.grad(total, x_t).data


# --- loss registry ----------------------------------------------------------

_LOSSES = {}


def register_loss(loss_id, builder):
    """builder(net, params_t, batch, **kw) -> scalar Tensor."""
    _LOSSES[loss_id] = builder


def loss_value_and_param_grad(net: MLPNet, loss_id: str, batch, **kw):
    if loss_id not in _LOSSES:
        # sbm registers its losses on import
        from . import sbm  # noqa: F401
    if loss_id not in _LOSSES:
        raise ParameterError(f"unregistered loss id {loss_id!r}")
    params_t = ad.Tensor(net.params)
    loss_t = _LOSSES[loss_id](net, params_t, batch, **kw)
    g = ad.grad(loss_t, params_t)
    return float(loss_t.data), g.data


def loss_param_grad(net: MLPNet, loss_id: str, batch, **kw) -> np.ndarray:
    return loss_value_and_param_grad(net, loss_id, batch, **kw)[1]


def _mse_loss(net, params_t, batch):
    x, y = batch
    out = forward_graph(net, params_t, ad.Tensor(np.atleast_2d(x)))
    diff = out - ad.constant(np.asarray(y, float))
    return ad.tmean(ad.tsum(ad.power(diff, 2.0), axis=-1)) if diff.data.ndim > 1 \
        else ad.tmean(ad.power(diff, 2.0))


def _ssm_loss(net, params_t, batch, projections=None):
    """Sliced score matching: E[ 1/2 ||s(x)||^2 + v^T grad_x s(x) v ]."""
    x, V = batch if isinstance(batch, tuple) else (batch, projections)
    x = np.atleast_2d(np.asarray(x, float))
    n = x.shape[0]
    x_t = ad.Tensor(x)
    s = forward_graph(net, params_t, x_t)
    norm_term = ad.mul(ad.tsum(ad.power(s, 2.0)), ad.constant(0.5 / n))
    total = ad.constant(0.0)
    V = np.atleast_3d(V) if np.asarray(V).ndim == 3 else np.asarray(V)[None]
    for v in V:  # v: (n, d); grad of (v . s) gives rows J^T v, and v.(J^T v) = v^T J v
        vs = ad.tsum(ad.mul(s, ad.constant(v)))
        gx = ad.grad(vs, x_t, output_ct=None)
        total = total + ad.tsum(ad.mul(gx, ad.constant(v)))
    total = ad.mul(total, ad.constant(1.0 / (n * V.shape[0])))
    return norm_term + total


register_loss("mse", _mse_loss)
register_loss("ssm", _ssm_loss)


# --- optimizer --------------------------------------------------------------

class Adam:
    """Adaptive-moment gradient descent on a flat parameter vector with
    global gradient-norm clipping."""

    def __init__(self, n_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 clip_norm=10.0):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.clip_norm = clip_norm
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params, grad):
        norm = np.linalg.norm(grad)
        if self.clip_norm is not None and norm > self.clip_norm:
            grad = grad * (self.clip_norm / norm)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


# --- sliced score matching training ----------------------------------------

def ssm_train(score_net: MLPNet, data, n_projections=1, epochs=100, lr=1e-3,
              rng=0, batch_size=128, projection_kind="gaussian"):
    """Train a vector-head net as a score model by sliced score matching.

    projection_kind "gaussian" draws v ~ N(0, I); "basis" cycles the standard
    basis (exact Jacobian trace, useful for oracle tests).  Returns the
    trained net (same object, params updated) and the per-epoch loss trace.
    """
    data = np.atleast_2d(np.asarray(data, float))
    if data.size == 0:
        raise ParameterError("ssm_train requires nonempty data")
    g = as_generator(rng)
    opt = Adam(len(score_net.params), lr=lr)
    trace = []
    n = data.shape[0]
    d = data.shape[1]
    for epoch in range(epochs):
        perm = g.permutation(n)
        losses = []
        for lo in range(0, n, batch_size):
            xb = data[perm[lo:lo + batch_size]]
            if projection_kind == "basis":
                # sqrt(d)-scaled basis keeps E[v v^T] = I, so averaging over
                # the full basis reproduces the Jacobian trace exactly
                V = np.stack([np.tile(np.sqrt(d) * np.eye(d)[k], (xb.shape[0], 1))
                              for k in range(d)])
            else:
                V = g.standard_normal((n_projections, xb.shape[0], d))
            val, gr = loss_value_and_param_grad(score_net, "ssm", (xb, V))
            if not np.isfinite(val):
                raise ParameterError(
                    f"SSM loss diverged (NaN/inf) at epoch {epoch}")
            score_net.params = opt.step(score_net.params, gr)
            losses.append(val)
        trace.append(float(np.mean(losses)))
    return score_net, trace


# --- wrappers used by the samplers and the balance loss ---------------------

class ScoreNet:
    """Callable score model s(x) with vector-Jacobian products."""

    def __init__(self, net: MLPNet):
        if net.output_head != "vector":
            raise ParameterError("ScoreNet requires a vector head")
        self.net = net

    def __call__(self, x):
        squeeze = np.asarray(x).ndim == 1
        out = forward(self.net, x)
        return out[0] if squeeze else out

    def vjp(self, x, v):
        squeeze = np.asarray(x).ndim == 1
        out = input_grad(self.net, x, v=np.atleast_2d(v))
        return out[0] if squeeze else out


def _sigmoid_stable(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


class AcceptanceNet:
    """Acceptance model a(x', x) = sigmoid(g(x', x)).

    By default the logit is antisymmetrized, g(x', x) = h(x', x) - h(x, x')
    with h the underlying scalar net on the concatenated pair.  That puts a
    in the Barker family: a(x', x) / a(x, x') = exp(g) exactly, a(x, x) = 1/2,
    and the balance residual becomes linear in the gradients of h, which
    removes the raw parameterization's collapse toward near-zero acceptance
    (large gradient targets are otherwise easiest to fit at very negative
    logits, where 1 - sigmoid saturates at 1).  Pass antisymmetric=False for
    the raw logit g = h(x', x).
    """

    def __init__(self, net: MLPNet, antisymmetric=True):
        if net.output_head != "scalar_logit":
            raise ParameterError("AcceptanceNet requires a scalar_logit head")
        if net.in_dim % 2 != 0:
            raise ParameterError("acceptance net input width must be 2 d")
        self.net = net
        self.antisymmetric = antisymmetric
        self.d = net.in_dim // 2

    def _pack(self, xp, x):
        xp = np.atleast_2d(np.asarray(xp, float))
        x = np.atleast_2d(np.asarray(x, float))
        return np.concatenate([xp, x], axis=1)

    def logit(self, xp, x):
        fwd = forward(self.net, self._pack(xp, x))
        if not self.antisymmetric:
            return fwd
        return fwd - forward(self.net, self._pack(x, xp))

    def prob(self, xp, x):
        return _sigmoid_stable(self.logit(xp, x))

    def grad_log_prob(self, xp, x):
        """(d/dxp log a, d/dx log a), both (n, d); log a = -softplus(-g)."""
        xp = np.atleast_2d(np.asarray(xp, float))
        x = np.atleast_2d(np.asarray(x, float))
        n, d = xp.shape
        if self.antisymmetric:
            packed = np.concatenate([self._pack(xp, x), self._pack(x, xp)], axis=0)
            gh = input_grad(self.net, packed)
            grad_xp = gh[:n, :d] - gh[n:, d:]
            grad_x = gh[:n, d:] - gh[n:, :d]
            z = forward(self.net, packed)
            g = z[:n] - z[n:]
        else:
            packed = self._pack(xp, x)
            gfull = input_grad(self.net, packed)
            grad_xp, grad_x = gfull[:, :d], gfull[:, d:]
            g = forward(self.net, packed)
        w = (1.0 - _sigmoid_stable(g))[:, None]
        return w * grad_xp, w * grad_x


def default_score_net(dim, rng=0) -> MLPNet:
    return init_mlp([dim, 64, 64, dim], "tanh", "vector", rng)


def default_acceptance_net(dim, rng=0) -> MLPNet:
    return init_mlp([2 * dim, 64, 64, 1], "tanh", "scalar_logit", rng)


# --- checkpoints -------------------------------------------------------------

_MAGIC = b"MAFLANET1\n"


def save_checkpoint(path, net: MLPNet, meta=None):
    """JSON header line followed by the flat little-endian float64 block."""
    header = {
        "layer_widths": list(net.layer_widths),
        "activation": net.activation,
        "output_head": net.output_head,
        "n_params": int(len(net.params)),
        "arch_hash": net.arch_hash(),
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(net.params.astype("<f8").tobytes())


def load_checkpoint(path) -> MLPNet:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ParameterError(f"{path} is not a network checkpoint")
        header = json.loads(fh.readline().decode())
        params = np.frombuffer(fh.read(), dtype="<f8").copy()
    net = MLPNet(header["layer_widths"], header["activation"],
                 header["output_head"], params=params)
    if net.arch_hash() != header["arch_hash"] or len(params) != header["n_params"]:
        raise ParameterError(f"{path}: architecture hash mismatch")
    return net
