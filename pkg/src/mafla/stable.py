"""Symmetric alpha-stable laws: exact samplers, numerical densities and scores.

Conventions used throughout the toolkit: a univariate SaS(sigma) variable has
characteristic function exp(-sigma^alpha |u|^alpha), so alpha=2 is N(0, 2 sigma^2)
and alpha=1 is Cauchy(sigma).  Isotropic vectors in R^d use
exp(-sigma^alpha ||u||^alpha).  Samplers are exact transforms (no
discretization); densities come from numerical Fourier inversion, validated
against the characteristic function.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate, special

from .errors import NumericError, ParameterError
from .rng import RngStream, as_generator

# exp(-t) < 1e-16 beyond this, so the Fourier integrand tail is negligible
_EXP_TAIL = 36.85


def _check_alpha(alpha, lo=0.0, name="alpha"):
    if not (lo < alpha <= 2.0):
        raise ParameterError(f"{name} must lie in ({lo}, 2], got {alpha}")


def _check_scale(scale):
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")


@dataclass(frozen=True)
class StableLaw:
    """An isotropic or product-form symmetric alpha-stable law on R^dim."""

    alpha: float
    scale: float = 1.0
    dim: int = 1
    isotropy: str = "isotropic"  # "isotropic" | "product"

    def __post_init__(self):
        _check_alpha(self.alpha, lo=1.0)
        _check_scale(self.scale)
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.isotropy not in ("isotropic", "product"):
            raise ParameterError(f"unknown isotropy {self.isotropy!r}")

    def char_fn(self, u):
        """Characteristic function at the row(s) of u."""
        u = np.atleast_2d(np.asarray(u, float))
        norm = np.linalg.norm(u, axis=1) if self.isotropy == "isotropic" \
            else np.sum(np.abs(u) ** self.alpha, axis=1) ** (1.0 / self.alpha)
        return np.exp(-((self.scale * norm) ** self.alpha))

    def sample(self, n, rng):
        if self.isotropy == "isotropic":
            return sample_sas_isotropic(self.alpha, self.scale, self.dim, n, rng)
        g = as_generator(rng)
        cols = [sample_sas_1d(self.alpha, self.scale, n, g) for _ in range(self.dim)]
        return np.stack(cols, axis=1)


def sample_sas_1d(alpha, scale, n, rng):
    """Draw n univariate SaS(scale) variates via the Chambers-Mallows-Stuck
    transform of a uniform angle and a unit exponential."""
    _check_alpha(alpha)
    _check_scale(scale)
    if n < 0:
        raise ParameterError(f"n must be nonnegative, got {n}")
    g = as_generator(rng)
    u = g.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
    w = g.exponential(1.0, size=n)
    if alpha == 1.0:
        core = np.tan(u)
    elif alpha == 2.0:
        # CMS at alpha=2 reduces exactly to 2 sin(U) sqrt(W) ~ N(0, 2)
        core = 2.0 * np.sin(u) * np.sqrt(w)
    else:
        core = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) \
            * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
    return scale * core


def _sample_positive_stable(alpha_half, n, g):
    # totally skewed positive stable, unit scale, alpha_half in (0, 1);
    # Laplace transform E exp(-t A) = exp(-t^alpha_half / cos(pi alpha_half / 2))
    u = g.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
    w = g.exponential(1.0, size=n)
    shift = np.pi / 2.0
    s = np.cos(np.pi * alpha_half / 2.0) ** (-1.0 / alpha_half)
    return s * (np.sin(alpha_half * (u + shift)) / np.cos(u) ** (1.0 / alpha_half)) \
        * (np.cos(u - alpha_half * (u + shift)) / w) ** ((1.0 - alpha_half) / alpha_half)


def sample_sas_isotropic(alpha, scale, dim, n, rng):
    """Draw an (n, dim) matrix of isotropic SaS(scale) vectors.

    Uses the sub-Gaussian representation: a positive (alpha/2)-stable mixing
    variable times a standard Gaussian vector, calibrated so the joint
    characteristic function is exp(-scale^alpha ||u||^alpha).  At alpha=2 the
    mixing variable degenerates to the constant 2 scale^2.
    """
    _check_alpha(alpha, lo=1.0)
    _check_scale(scale)
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    if n < 0:
        raise ParameterError(f"n must be nonnegative, got {n}")
    g = as_generator(rng)
    if alpha == 2.0:
        return scale * np.sqrt(2.0) * g.standard_normal((n, dim))
    a0 = _sample_positive_stable(alpha / 2.0, n, g)
    mix = 2.0 * scale ** 2 * np.cos(np.pi * alpha / 4.0) ** (2.0 / alpha) * a0
    z = g.standard_normal((n, dim))
    return np.sqrt(mix)[:, None] * z


def _t_upper(alpha):
    return _EXP_TAIL ** (1.0 / alpha)


def _quad_cos(alpha, x, moment=0):
    # int_0^tmax t^moment exp(-t^alpha) cos(x t) dt, adaptive oscillatory rule
    val, err = integrate.quad(
        lambda t: t ** moment * np.exp(-t ** alpha) if moment else np.exp(-t ** alpha),
        0.0, _t_upper(alpha), weight="cos", wvar=float(x),
        epsabs=1e-13, epsrel=1e-11, limit=400)
    if not np.isfinite(val) or err > 1e-7:
        raise NumericError(
            f"Fourier quadrature did not converge (alpha={alpha}, x={x}, est err={err})")
    return val


def _quad_sin(alpha, x, moment=1):
    val, err = integrate.quad(
        lambda t: t ** moment * np.exp(-t ** alpha),
        0.0, _t_upper(alpha), weight="sin", wvar=float(x),
        epsabs=1e-13, epsrel=1e-11, limit=400)
    if not np.isfinite(val) or err > 1e-7:
        raise NumericError(
            f"Fourier quadrature did not converge (alpha={alpha}, x={x}, est err={err})")
    return val


def pdf_sas_1d(alpha, x):
    """Numerical SaS(1) density, f(x) = (1/pi) int_0^inf cos(t x) exp(-t^alpha) dt.

    Valid for alpha in (0, 2]; the integrand is truncated where
    exp(-t^alpha) < 1e-16 and evaluated with an adaptive oscillatory rule.
    """
    _check_alpha(alpha)
    xs = np.atleast_1d(np.asarray(x, float))
    vals = np.array([_quad_cos(alpha, xi) / np.pi for xi in xs])
    if np.any(vals <= 0):
        raise NumericError(f"quadrature produced nonpositive density at |x| up to "
                           f"{np.max(np.abs(xs))}; outside the reliable range")
    return float(vals[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else vals


def score_sas_1d(alpha, x):
    """d/dx log pdf_sas_1d, from the exact derivative of the Fourier integral
    (not a finite difference of the density)."""
    _check_alpha(alpha)
    xs = np.atleast_1d(np.asarray(x, float))
    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        f = _quad_cos(alpha, xi)
        fp = -_quad_sin(alpha, xi)
        out[i] = fp / f
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def _bessel_breakpoints(nu, r, t_hi):
    # subdivision points at the zeros of J_nu(r t) keep the adaptive rule honest
    if r * t_hi < np.pi:
        return None
    n_zeros = int(np.ceil(r * t_hi / np.pi)) + 2
    zeros = special.jn_zeros(int(nu), n_zeros) / r
    pts = zeros[zeros < t_hi]
    return pts if len(pts) else None


def _radial_quad(alpha, r, dim, deriv=False):
    # f_d(r) = (2 pi)^{-d/2} r^{-nu} int t^{nu+1} J_nu(r t) exp(-t^alpha) dt,
    # nu = d/2 - 1; the derivative swaps J_nu for -J_{nu+1} with t^{nu+2}.
    nu = dim / 2.0 - 1.0
    pref = (2.0 * np.pi) ** (-dim / 2.0)
    t_hi = _t_upper(alpha)
    if r < 1e-12:
        if deriv:
            return 0.0
        val, _ = integrate.quad(lambda t: t ** (dim - 1) * np.exp(-t ** alpha),
                                0.0, t_hi, epsabs=1e-13, epsrel=1e-11)
        return pref * 2.0 ** (-nu) / special.gamma(nu + 1.0) * val
    if dim == 1:
        if deriv:
            return -_quad_sin(alpha, r) / np.pi
        return _quad_cos(alpha, r) / np.pi
    if dim == 3:
        # half-integer Bessel orders reduce to sin/cos weights
        if deriv:
            # f_3'(r) = -(2 pi^2)^{-1} d/dr [ r^{-1} int t sin(rt) e dt ] handled
            # via the generic J_{3/2} route below for clarity
            pass
        else:
            return _quad_sin(alpha, r, moment=1) / (2.0 * np.pi ** 2 * r)
    order = nu + 1.0 if deriv else nu
    moment = nu + 2.0 if deriv else nu + 1.0
    pts = _bessel_breakpoints(max(order, 0.0), r, t_hi)
    kwargs = dict(epsabs=1e-13, epsrel=1e-11, limit=800)
    if pts is not None:
        kwargs["points"] = pts
        kwargs["limit"] = max(kwargs["limit"], len(pts) + 100)
    val, err = integrate.quad(
        lambda t: t ** moment * special.jv(order, r * t) * np.exp(-t ** alpha),
        0.0, t_hi, **kwargs)
    if not np.isfinite(val):
        raise NumericError(f"radial quadrature failed (alpha={alpha}, r={r}, dim={dim})")
    sign = -1.0 if deriv else 1.0
    return sign * pref * r ** (-nu) * val


def pdf_sas_radial(alpha, r, dim):
    """Density of the isotropic SaS(1) law in R^dim at radius r (dim <= 4)."""
    _check_alpha(alpha, lo=1.0)
    if dim not in (1, 2, 3, 4):
        raise ParameterError(f"radial quadrature supports dim <= 4, got {dim}")
    rs = np.atleast_1d(np.asarray(r, float))
    vals = np.array([_radial_quad(alpha, ri, dim) for ri in rs])
    return float(vals[0]) if np.isscalar(r) or np.asarray(r).ndim == 0 else vals


def dlogpdf_sas_radial(alpha, r, dim):
    """Radial log-density derivative d/dr log f_dim(r) for the isotropic law."""
    _check_alpha(alpha, lo=1.0)
    if dim not in (1, 2, 3, 4):
        raise ParameterError(f"radial quadrature supports dim <= 4, got {dim}")
    rs = np.atleast_1d(np.asarray(r, float))
    out = np.empty_like(rs)
    for i, ri in enumerate(rs):
        if ri < 1e-12:
            out[i] = 0.0
            continue
        out[i] = _radial_quad(alpha, ri, dim, deriv=True) / _radial_quad(alpha, ri, dim)
    return float(out[0]) if np.isscalar(r) or np.asarray(r).ndim == 0 else out


def tail_amplitude(alpha, dim):
    """Leading tail coefficient: f_dim(r) ~ amplitude * r^{-(alpha+dim)}."""
    return (alpha * 2.0 ** (alpha - 1.0) * np.pi ** (-(dim / 2.0 + 1.0))
            * np.sin(np.pi * alpha / 2.0)
            * special.gamma((alpha + dim) / 2.0) * special.gamma(alpha / 2.0))


class RadialProfile:
    """Cached log-density profile of an isotropic SaS(1) law in R^dim.

    Inside r_switch the profile is a cubic spline of quadrature values; beyond,
    the exact power-law tail slope -(alpha+dim)/r with the log level anchored
    at the switch radius for continuity.  Score and log-density share one
    spline so their finite-difference consistency is inherent.
    """

    def __init__(self, alpha, dim, r_switch=25.0, n_grid=700):
        _check_alpha(alpha, lo=1.0)
        self.alpha = float(alpha)
        self.dim = int(dim)
        self.r_switch = float(r_switch)
        if alpha == 2.0:
            # Gaussian N(0, 2 I): no quadrature needed
            self._spline = None
            return
        grid = np.concatenate([np.linspace(0.0, 1.0, n_grid // 4, endpoint=False),
                               np.geomspace(1.0, r_switch, n_grid - n_grid // 4)])
        logf = np.log(np.array([_radial_quad(alpha, r, dim) for r in grid]))
        self._spline = interpolate.CubicSpline(grid, logf, bc_type=((1, 0.0), "not-a-knot"))
        self._dspline = self._spline.derivative()
        self._log_anchor = float(self._spline(r_switch))

    def logpdf(self, r):
        r = np.asarray(r, float)
        if self._spline is None:
            return -r * r / 4.0 - (self.dim / 2.0) * np.log(4.0 * np.pi)
        inside = r <= self.r_switch
        out = np.where(inside,
                       self._spline(np.minimum(r, self.r_switch)),
                       self._log_anchor - (self.alpha + self.dim)
                       * np.log(np.maximum(r, self.r_switch) / self.r_switch))
        return out

    def dlogpdf(self, r):
        r = np.asarray(r, float)
        if self._spline is None:
            return -r / 2.0
        inside = r <= self.r_switch
        out = np.where(inside,
                       self._dspline(np.minimum(r, self.r_switch)),
                       -(self.alpha + self.dim) / np.maximum(r, self.r_switch))
        return out


@functools.lru_cache(maxsize=64)
def radial_profile(alpha, dim) -> RadialProfile:
    """Memoized radial profile; dim <= 4 for alpha < 2 (quadrature bound)."""
    if alpha != 2.0 and dim not in (1, 2, 3, 4):
        raise ParameterError(
            f"isotropic stable profiles are available for dim <= 4 only, got dim={dim}")
    return RadialProfile(alpha, dim)


def ecf(samples, u_grid):
    """Empirical characteristic function of 1-D samples on a grid."""
    samples = np.asarray(samples, float).ravel()
    if samples.size == 0:
        raise ParameterError("ecf of an empty sample")
    u = np.atleast_1d(np.asarray(u_grid, float))
    return np.exp(1j * np.outer(u, samples)).mean(axis=1)


def ecf_check(samples, u_grid, alpha, scale=1.0):
    """Absolute ECF errors against the SaS(scale) target exp(-(scale |u|)^alpha)."""
    u = np.atleast_1d(np.asarray(u_grid, float))
    target = np.exp(-((scale * np.abs(u)) ** alpha))
    return np.abs(ecf(samples, u) - target)
