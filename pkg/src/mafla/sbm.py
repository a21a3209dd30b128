"""Score balance matching: gradient-detailed-balance residuals, the loss
family, curriculum pair generation, and acceptance-network training.

The residual stacks gradients over (x, x') of the detailed-balance identity
in log form; it vanishes exactly when the acceptance function balances the
target-score and proposal-score differences.  No density is ever evaluated:
the target enters through its score and the proposal through the proxy
gradients of the proposal module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nets, proposal, targets
from .errors import NumericError, ParameterError
from .rng import RngStream, as_generator

_ENT_EPS = 1e-7


@dataclass
class SBMConfig:
    lambda_alpha: float = 1.0
    lambda_entropy: float = 0.01
    epochs: int = 300
    batch_size: int = 128
    lr: float = 1e-3
    eta_schedule: list = None  # [(epoch, eta)] breakpoints, piecewise linear

    def __post_init__(self):
        if self.lambda_alpha < 0 or self.lambda_entropy < 0:
            raise ParameterError("loss weights must be nonnegative")
        if self.eta_schedule is None:
            self.eta_schedule = default_eta_schedule(self.epochs)
        sched = sorted((int(e), float(v)) for e, v in self.eta_schedule)
        if sched[0][0] != 0:
            raise ParameterError("eta schedule must cover epoch 0")
        vals = [v for _, v in sched]
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ParameterError("eta values must lie in [0, 1]")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ParameterError("eta schedule must be nondecreasing")
        self.eta_schedule = sched

    def eta_at(self, epoch):
        pts = self.eta_schedule
        if epoch <= pts[0][0]:
            return pts[0][1]
        for (e0, v0), (e1, v1) in zip(pts, pts[1:]):
            if epoch <= e1:
                val = v0 + (v1 - v0) * (epoch - e0) / max(e1 - e0, 1)
                return min(max(val, 0.0), 1.0)
        return pts[-1][1]


def default_eta_schedule(epochs):
    """Hold eta at 0.1 for the first fifth of training, then ramp to 1."""
    hold = max(1, int(0.2 * epochs))
    return [(0, 0.1), (hold, 0.1), (max(epochs - 1, hold + 1), 1.0)]


@dataclass
class SBMBatch:
    x: np.ndarray        # (n, d) current states
    x_prime: np.ndarray  # (n, d) proposed states
    delta_p: np.ndarray  # (n, 2d) stacked target-score difference
    delta_q: np.ndarray  # (n, 2d) stacked proposal-score difference
    residual: np.ndarray = None  # filled by residual evaluation

    @property
    def n(self):
        return self.x.shape[0]


def make_batch(x, x_prime, score_fn, cfg: proposal.DriftConfig, jvp_fn) -> SBMBatch:
    """Precompute the score deltas for a set of pairs.

    delta_p = grad log p(x') - grad log p(x) stacked over (x, x'), i.e.
    (-s(x), s(x')); delta_q analogously from the four proposal proxies.
    """
    pair = proposal.make_pair(x, x_prime, score_fn, cfg)
    sx = pair.drift_x / cfg.c_alpha
    sxp = pair.drift_xprime / cfg.c_alpha
    g_xp_fwd, g_x_fwd, g_x_rev, g_xp_rev = proposal.proposal_scores(pair, cfg, jvp_fn)
    delta_p = np.concatenate([-sx, sxp], axis=1)
    delta_q = np.concatenate([g_x_rev - g_x_fwd, g_xp_rev - g_xp_fwd], axis=1)
    return SBMBatch(pair.x, pair.x_prime, delta_p, delta_q)


# --- acceptance models used as oracles or degenerate baselines ---------------

class ConstantAcceptance:
    """a(x', x) = const; gradient of log a is identically zero."""

    def __init__(self, value):
        self.value = float(value)

    def prob(self, xp, x):
        return np.full(np.atleast_2d(xp).shape[0], self.value)

    def grad_log_prob(self, xp, x):
        xp = np.atleast_2d(xp)
        return np.zeros_like(xp, dtype=float), np.zeros_like(xp, dtype=float)


class BarkerAcceptance:
    """Exact Barker rule a(x', x) = sigmoid(l) with l the log MH ratio,
    for Gaussian proposals (alpha = 2, covariance 2 tau I).

    Requires target log-density and score; the conditioning-side gradient of
    log q uses the exact drift Jacobian, so for Gaussian targets (constant
    Hessian) every quantity is closed form.  Used as the detailed-balance
    oracle: substituting it into the balance residual must give zero.
    """

    def __init__(self, log_density, score_fn, tau, hessian):
        self.log_density = log_density
        self.score = score_fn
        self.tau = float(tau)
        self.hessian = np.asarray(hessian, float)

    def _b(self, x):
        return np.asarray(self.score(x), float)  # c_2 = 1

    def _log_ratio(self, u, v):
        # l(u, v) = log p(u) - log p(v) + log q(v|u) - log q(u|v)
        t = self.tau
        qu = v - u - t * self._b(u)
        qv = u - v - t * self._b(v)
        lq_vu = -np.sum(qu * qu, axis=1) / (4 * t)
        lq_uv = -np.sum(qv * qv, axis=1) / (4 * t)
        return (np.asarray(self.log_density(u), float)
                - np.asarray(self.log_density(v), float) + lq_vu - lq_uv)

    def prob(self, xp, x):
        xp, x = np.atleast_2d(xp), np.atleast_2d(x)
        ell = self._log_ratio(xp, x)
        return np.where(ell >= 0, 1.0 / (1.0 + np.exp(-np.abs(ell))),
                        np.exp(-np.abs(ell)) / (1.0 + np.exp(-np.abs(ell))))

    def grad_log_prob(self, u, v):
        u, v = np.atleast_2d(np.asarray(u, float)), np.atleast_2d(np.asarray(v, float))
        t = self.tau
        J = self.hessian  # drift Jacobian at alpha = 2
        ru = v - u - t * self._b(u)   # residual of q(v|u)
        rv = u - v - t * self._b(v)   # residual of q(u|v)
        M = np.eye(J.shape[0]) + t * J
        grad_u = (self.score(u) + (ru @ M.T) / (2 * t) + rv / (2 * t))
        grad_v = (-self.score(v) - ru / (2 * t) - (rv @ M.T) / (2 * t))
        w = 1.0 - self.prob(u, v)
        return w[:, None] * grad_u, w[:, None] * grad_v


# --- residual and losses (numpy side) ----------------------------------------

def residual(x, x_prime, accept, target_score, prop_scores):
    """Stacked gradient-detailed-balance residual, shape (n, 2d).

    `accept` exposes grad_log_prob(u, v) = gradients of log a(u, v) in its two
    arguments; `prop_scores` is the proxy quadruple from proposal_scores.
    """
    x = np.atleast_2d(np.asarray(x, float))
    xp = np.atleast_2d(np.asarray(x_prime, float))
    if not (np.isfinite(x).all() and np.isfinite(xp).all()):
        raise NumericError("non-finite pair in residual")
    sx = np.atleast_2d(np.asarray(target_score(x), float))
    sxp = np.atleast_2d(np.asarray(target_score(xp), float))
    g_xp_fwd, g_x_fwd, g_x_rev, g_xp_rev = prop_scores
    delta_p = np.concatenate([-sx, sxp], axis=1)
    delta_q = np.concatenate([g_x_rev - g_x_fwd, g_xp_rev - g_xp_fwd], axis=1)
    du_f, dv_f = accept.grad_log_prob(xp, x)     # log a(x', x)
    du_r, dv_r = accept.grad_log_prob(x, xp)     # log a(x, x')
    ga_fwd = np.concatenate([dv_f, du_f], axis=1)  # (grad_x, grad_x')
    ga_rev = np.concatenate([du_r, dv_r], axis=1)
    return ga_fwd - ga_rev - delta_p - delta_q


def residual_for_batch(batch: SBMBatch, accept) -> np.ndarray:
    du_f, dv_f = accept.grad_log_prob(batch.x_prime, batch.x)
    du_r, dv_r = accept.grad_log_prob(batch.x, batch.x_prime)
    ga_fwd = np.concatenate([dv_f, du_f], axis=1)
    ga_rev = np.concatenate([du_r, dv_r], axis=1)
    batch.residual = ga_fwd - ga_rev - batch.delta_p - batch.delta_q
    return batch.residual


def loss_l2(batch: SBMBatch) -> float:
    if batch.residual is None:
        raise ParameterError("batch residual not evaluated")
    return float(np.mean(np.sum(batch.residual ** 2, axis=1)))


def loss_alpha(batch: SBMBatch, alpha) -> float:
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"alpha-norm loss needs alpha in (1, 2], got {alpha}")
    if batch.residual is None:
        raise ParameterError("batch residual not evaluated")
    return float(np.mean(np.sum(np.abs(batch.residual) ** alpha, axis=1)))


def loss_combined(batch: SBMBatch, cfg: SBMConfig, alpha) -> float:
    return loss_l2(batch) + cfg.lambda_alpha * loss_alpha(batch, alpha)


def entropy_term(a_values) -> float:
    """Mean binary entropy integrand H(a) = a log a + (1-a) log(1-a); values
    at the endpoints are clamped to [eps, 1-eps] before the logs."""
    a = np.clip(np.asarray(a_values, float), _ENT_EPS, 1.0 - _ENT_EPS)
    return float(np.mean(a * np.log(a) + (1.0 - a) * np.log(1.0 - a)))


# --- graph-side losses (differentiable in the acceptance parameters) ---------

def _residual_graph(net: nets.MLPNet, params_t, batch: SBMBatch, antisymmetric=True):
    n, d = batch.x.shape
    packed = np.concatenate([
        np.concatenate([batch.x_prime, batch.x], axis=1),
        np.concatenate([batch.x, batch.x_prime], axis=1)], axis=0)
    x_t = ad.Tensor(packed)
    h = nets.forward_graph(net, params_t, x_t)                # (2n,)
    if antisymmetric:
        # g = h(x',x) - h(x,x'); log a(x',x) - log a(x,x') = g, so the
        # acceptance part of the residual is just the stacked gradient of g
        total = ad.tsum(h[:n]) - ad.tsum(h[n:])
        g = ad.grad(total, x_t)                               # (2n, 2d)
        grad_x = g[:n, d:] + g[n:, :d]
        grad_xp = g[:n, :d] + g[n:, d:]
        accept_part = ad.concatenate([grad_x, grad_xp], axis=1)
        logits = h[:n] - h[n:]
    else:
        log_a = -ad.softplus(-h)
        g = ad.grad(ad.tsum(log_a), x_t)                      # (2n, 2d)
        ga_fwd = ad.concatenate([g[:n, d:], g[:n, :d]], axis=1)
        ga_rev = ad.concatenate([g[n:, :d], g[n:, d:]], axis=1)
        accept_part = ga_fwd - ga_rev
        logits = h[:n]
    res = accept_part - ad.constant(batch.delta_p) - ad.constant(batch.delta_q)
    return res, logits


def _l2_graph(net, params_t, batch, antisymmetric=True):
    res, _ = _residual_graph(net, params_t, batch, antisymmetric)
    return ad.tmean(ad.tsum(ad.power(res, 2.0), axis=1))


def _alpha_graph(net, params_t, batch, alpha=1.5, antisymmetric=True):
    res, _ = _residual_graph(net, params_t, batch, antisymmetric)
    return ad.tmean(ad.tsum(ad.abspow(res, alpha), axis=1))


def _entropy_graph_from_logits(logits):
    a = ad.clip(ad.sigmoid(logits), _ENT_EPS, 1.0 - _ENT_EPS)
    one_m = 1.0 - a
    return ad.tmean(ad.mul(a, ad.log(a)) + ad.mul(one_m, ad.log(one_m)))


def _entropy_graph(net, params_t, batch, antisymmetric=True):
    fwd = np.concatenate([batch.x_prime, batch.x], axis=1)
    logits = nets.forward_graph(net, params_t, ad.Tensor(fwd))
    if antisymmetric:
        rev = np.concatenate([batch.x, batch.x_prime], axis=1)
        logits = logits - nets.forward_graph(net, params_t, ad.Tensor(rev))
    return _entropy_graph_from_logits(logits)


def _combined_graph(net, params_t, batch, alpha=1.5, lambda_alpha=1.0,
                    lambda_entropy=0.0, antisymmetric=True):
    res, logits = _residual_graph(net, params_t, batch, antisymmetric)
    loss = ad.tmean(ad.tsum(ad.power(res, 2.0), axis=1))
    if lambda_alpha > 0:
        loss = loss + ad.mul(ad.constant(lambda_alpha),
                             ad.tmean(ad.tsum(ad.abspow(res, alpha), axis=1)))
    if lambda_entropy > 0:
        loss = loss + ad.mul(ad.constant(lambda_entropy),
                             _entropy_graph_from_logits(logits))
    return loss


nets.register_loss("sbm_l2", _l2_graph)
nets.register_loss("sbm_alpha", _alpha_graph)
nets.register_loss("sbm_combined", _combined_graph)
nets.register_loss("entropy", _entropy_graph)


# --- curriculum pair generation ----------------------------------------------

def curriculum_pairs(data_sampler, proposer, eta, n, rng):
    """Pairs (x, x') with x ~ data and x' = eta v' + (1 - eta) x,
    v' ~ proposal(x): a convex walk from the data toward the proposal."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must lie in [0, 1], got {eta}")
    g = as_generator(rng)
    x = np.atleast_2d(data_sampler(n, g))
    v = np.atleast_2d(proposer(x, g))
    return x, eta * v + (1.0 - eta) * x


def fula_warmup_sampler(score_fn, cfg, dim, n_warm=400, pool=2048, init_scale=1.0,
                        n_slices=16):
    """Data source for targets without an exact sampler: an unadjusted
    fractional warm-up chain, snapshotted at n_slices evenly spaced times and
    pooled (documented approximation for relaxation targets).  Align
    init_scale and n_warm with the downstream chain so the pool covers every
    state regime the chain will visit, early transient included."""
    cache = {}
    walkers = max(pool // max(n_slices, 1), 64)
    stride = max(n_warm // max(n_slices, 1), 1)

    def sampler(n, g):
        if "pool" not in cache:
            x = g.standard_normal((walkers, dim)) * init_scale
            slices = [x.copy()]
            for t in range(n_warm):
                pair = proposal.propose(x, score_fn, cfg, g)
                x = np.where(np.isfinite(pair.x_prime).all(axis=1, keepdims=True),
                             pair.x_prime, x)
                if (t + 1) % stride == 0:
                    slices.append(x.copy())
            cache["pool"] = np.concatenate(slices, axis=0)
        buf = cache["pool"]
        idx = g.integers(0, buf.shape[0], size=n)
        return buf[idx]

    return sampler


def train_acceptance(accept_net: nets.MLPNet, target, drift_cfg: proposal.DriftConfig,
                     sbm_cfg: SBMConfig, rng, score_fn=None, jvp_mode=None,
                     hessian=None, data_sampler=None, antisymmetric=True):
    """Fit the acceptance network by minimizing the combined balance loss.

    `target` is a TargetSpec; its oracle score is used unless `score_fn`
    overrides it (e.g. a learned ScoreNet, which also switches the Jacobian
    products to network mode).  Returns (AcceptanceNet, trace) where trace has
    one row per epoch: (epoch, eta, loss_l2, loss_alpha, entropy, combined).
    On a non-finite loss the last finite parameters are restored and training
    aborts.
    """
    if isinstance(rng, RngStream):
        g = rng.generator()
    else:
        g = as_generator(rng)
    if score_fn is None:
        oracle = targets.make_oracle(target)
        score_fn = oracle.score
        if jvp_mode is None:
            jvp_mode = "finite_difference"
        if data_sampler is None:
            if oracle.exact_sampler is not None:
                data_sampler = oracle.exact_sampler
            else:
                data_sampler = fula_warmup_sampler(score_fn, drift_cfg, target.dim)
    else:
        if jvp_mode is None:
            jvp_mode = "network" if hasattr(score_fn, "vjp") else "finite_difference"
        if data_sampler is None:
            if isinstance(target, targets.TargetSpec) and target.kind != "co_relaxation":
                oracle = targets.make_oracle(target)
                data_sampler = oracle.exact_sampler
            else:
                data_sampler = fula_warmup_sampler(score_fn, drift_cfg,
                                                   accept_net.layer_widths[0] // 2)
    jvp = proposal.make_jvp(score_fn, jvp_mode, drift_cfg, hessian=hessian)

    def proposer(x, gg):
        return proposal.propose(x, score_fn, drift_cfg, gg).x_prime

    opt = nets.Adam(len(accept_net.params), lr=sbm_cfg.lr)
    trace = []
    last_good = accept_net.params.copy()
    alpha = drift_cfg.alpha
    for epoch in range(sbm_cfg.epochs):
        eta = sbm_cfg.eta_at(epoch)
        x, xp = curriculum_pairs(data_sampler, proposer, eta, sbm_cfg.batch_size, g)
        keep = np.isfinite(xp).all(axis=1) & np.isfinite(x).all(axis=1)
        batch = make_batch(x[keep], xp[keep], score_fn, drift_cfg, jvp)
        val, grads = nets.loss_value_and_param_grad(
            accept_net, "sbm_combined", batch, alpha=alpha,
            lambda_alpha=sbm_cfg.lambda_alpha, lambda_entropy=sbm_cfg.lambda_entropy,
            antisymmetric=antisymmetric)
        if not np.isfinite(val):
            accept_net.params = last_good
            break
        last_good = accept_net.params.copy()
        accept_net.params = opt.step(accept_net.params, grads)
        wrapper = nets.AcceptanceNet(accept_net, antisymmetric=antisymmetric)
        residual_for_batch(batch, wrapper)
        row = {
            "epoch": epoch,
            "eta": eta,
            "loss_l2": loss_l2(batch),
            "loss_alpha": loss_alpha(batch, alpha),
            "entropy": entropy_term(wrapper.prob(batch.x_prime, batch.x)),
            "combined": float(val),
        }
        trace.append(row)
    return nets.AcceptanceNet(accept_net, antisymmetric=antisymmetric), trace
