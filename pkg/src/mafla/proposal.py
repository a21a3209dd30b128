"""Fractional Langevin proposals and their density-free score proxies.

The proposal x' = x + tau * b(x) + tau^(1/alpha) * xi with isotropic stable
noise has an intractable conditional density, but the location-family
structure gives computable approximations of all four gradients of log q
over both arguments and both directions.  Those proxies are what the balance
loss consumes; at alpha = 2 with a linear drift they are exact Gaussian
conditional scores, which is the main oracle used by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import stable
from .errors import CapabilityError, NumericError, ParameterError
from .rng import as_generator

_ALPHA_FLOOR = 1.0 + 1e-6


def c_alpha(alpha) -> float:
    """Drift scaling Gamma(alpha - 1) / Gamma(alpha / 2)^2, finite on (1, 2]."""
    if not _ALPHA_FLOOR <= alpha <= 2.0:
        raise ParameterError(
            f"alpha must lie in [{_ALPHA_FLOOR}, 2] (Gamma pole below), got {alpha}")
    return float(special.gamma(alpha - 1.0) / special.gamma(alpha / 2.0) ** 2)


@dataclass(frozen=True)
class DriftConfig:
    alpha: float
    tau: float
    c_alpha: float = field(init=False)
    kappa: float = field(init=False)
    noise_scale: float = field(init=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        ca = c_alpha(self.alpha)
        object.__setattr__(self, "c_alpha", ca)
        object.__setattr__(self, "kappa", 1.0 / (self.alpha * ca * self.tau))
        object.__setattr__(self, "noise_scale", self.tau ** (1.0 / self.alpha))


@dataclass
class ProposalPair:
    x: np.ndarray
    x_prime: np.ndarray
    drift_x: np.ndarray
    drift_xprime: np.ndarray
    r: np.ndarray
    r_rev: np.ndarray

    def swapped(self) -> "ProposalPair":
        return ProposalPair(self.x_prime, self.x, self.drift_xprime, self.drift_x,
                            self.r_rev, self.r)


def drift(score_fn, x, cfg: DriftConfig):
    """b(x) = c_alpha * score(x)."""
    return cfg.c_alpha * np.asarray(score_fn(x), float)


def make_pair(x, x_prime, score_fn, cfg: DriftConfig) -> ProposalPair:
    """Assemble a pair with both drifts and residuals from arbitrary endpoints
    (used by the training-pair curriculum, where x' is not a raw proposal)."""
    x = np.atleast_2d(np.asarray(x, float))
    x_prime = np.atleast_2d(np.asarray(x_prime, float))
    bx = cfg.c_alpha * np.asarray(score_fn(x), float)
    bxp = cfg.c_alpha * np.asarray(score_fn(x_prime), float)
    r = x_prime - x - cfg.tau * bx
    r_rev = x - x_prime - cfg.tau * bxp
    return ProposalPair(x, x_prime, bx, bxp, r, r_rev)


def propose(x, score_fn, cfg: DriftConfig, rng, noise=None) -> ProposalPair:
    """One Levy-driven proposal per row of x.

    The reverse drift is evaluated eagerly so rejected moves still carry the
    full diagnostic quadruple.  `noise` injects a fixed xi (test hook).
    """
    x = np.atleast_2d(np.asarray(x, float))
    n, d = x.shape
    bx = cfg.c_alpha * np.asarray(score_fn(x), float)
    if not np.isfinite(bx).all():
        raise NumericError("non-finite drift in proposal")
    if noise is None:
        noise = stable.sample_sas_isotropic(cfg.alpha, 1.0, d, n, as_generator(rng))
    else:
        noise = np.atleast_2d(np.asarray(noise, float))
    x_prime = x + cfg.tau * bx + cfg.noise_scale * noise
    bxp = cfg.c_alpha * np.asarray(score_fn(x_prime), float)
    r = x_prime - x - cfg.tau * bx
    r_rev = x - x_prime - cfg.tau * bxp
    return ProposalPair(x, x_prime, bx, bxp, r, r_rev)


def proposal_scores(pair: ProposalPair, cfg: DriftConfig, jvp_fn):
    """The four proxy gradients, in order:

        grad_{x'} log q(x'|x) ~ -kappa r
        grad_{x } log q(x'|x) ~  kappa (r + tau J_b(x)^T r)
        grad_{x } log q(x|x') ~ -kappa r_rev
        grad_{x'} log q(x|x') ~  kappa (r_rev + tau J_b(x')^T r_rev)

    jvp_fn(point, v) must return J_b(point)^T v.
    """
    k, tau = cfg.kappa, cfg.tau
    g_xp_fwd = -k * pair.r
    g_x_fwd = k * (pair.r + tau * jvp_fn(pair.x, pair.r))
    g_x_rev = -k * pair.r_rev
    g_xp_rev = k * (pair.r_rev + tau * jvp_fn(pair.x_prime, pair.r_rev))
    return g_xp_fwd, g_x_fwd, g_x_rev, g_xp_rev


def jacobian_vjp(score_fn, x, v, mode="finite_difference", cfg: DriftConfig = None,
                 hessian=None, fd_step=None):
    """Transposed-Jacobian product of the drift field, J_b(x)^T v.

    Modes:
      analytic          exact for quadratic log-densities; needs the constant
                        log-density Hessian (J_b = c_alpha * H, symmetric)
      finite_difference central directional difference of the drift; assumes
                        the score is a gradient field so J is symmetric
      network           exact transposed-Jacobian product of a ScoreNet
    """
    if cfg is None:
        raise ParameterError("jacobian_vjp needs a DriftConfig")
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    if mode == "analytic":
        if hessian is None:
            raise CapabilityError(
                "analytic jacobian mode needs a constant Hessian (quadratic log-density)")
        return cfg.c_alpha * v @ np.asarray(hessian, float).T
    if mode == "network":
        if not hasattr(score_fn, "vjp"):
            raise CapabilityError("network jacobian mode needs a ScoreNet with .vjp")
        return cfg.c_alpha * score_fn.vjp(x, v)
    if mode == "finite_difference":
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        out = np.zeros_like(v)
        nz = norms[:, 0] > 0
        if not nz.any():
            return out
        vn = v[nz] / norms[nz]
        xs = x[nz]
        step = fd_step if fd_step is not None else np.maximum(
            1e-5, 1e-7 * np.linalg.norm(xs, axis=1, keepdims=True))
        bp = cfg.c_alpha * np.asarray(score_fn(xs + step * vn), float)
        bm = cfg.c_alpha * np.asarray(score_fn(xs - step * vn), float)
        out[nz] = (bp - bm) / (2.0 * step) * norms[nz]
        return out
    raise ParameterError(f"unknown jacobian mode {mode!r}")


def make_jvp(score_fn, mode="finite_difference", cfg: DriftConfig = None, hessian=None):
    """Bind jacobian_vjp into the (point, vector) callable proposal_scores expects."""
    def jvp(x, v):
        return jacobian_vjp(score_fn, x, v, mode=mode, cfg=cfg, hessian=hessian)
    return jvp
