"""Target distributions: oracle scores, exact samplers, optional log-densities.

Mixture components follow the stable scale convention, so a "gaussian_mixture"
component with scale sigma is N(center, 2 sigma^2 I) (the alpha = 2 stable law)
and a "cauchy_mixture" component is the isotropic Cauchy (multivariate t with
one degree of freedom).  Stable components in d <= 4 use the quadrature-backed
isotropic radial profile; "product_stable" components factorize per coordinate
and work in any dimension.  Log-densities are exact up to normalization and
every consumer uses only differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import stable
from .errors import CapabilityError, ParameterError
from .rng import as_generator

_MIXTURE_KINDS = ("gaussian_mixture", "cauchy_mixture",
                  "stable_location_mixture", "product_stable")
_KINDS = _MIXTURE_KINDS + ("co_relaxation",)


@dataclass
class Component:
    weight: float
    center: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, float))
        if self.scale <= 0:
            raise ParameterError(f"component scale must be positive, got {self.scale}")
        if not 0 <= self.weight <= 1:
            raise ParameterError(f"component weight must be in [0,1], got {self.weight}")


@dataclass
class TargetSpec:
    kind: str
    dim: int
    components: list = field(default_factory=list)
    alpha_tgt: float = None
    payload: object = None  # co_relaxation carries its energy model here

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown target kind {self.kind!r}")
        if self.kind in _MIXTURE_KINDS:
            if not self.components:
                raise ParameterError("mixture targets need at least one component")
            w = sum(c.weight for c in self.components)
            if abs(w - 1.0) > 1e-9:
                raise ParameterError(f"component weights must sum to 1, got {w}")
            for c in self.components:
                if len(c.center) != self.dim:
                    raise ParameterError("component center dimension mismatch")
        if self.kind in ("stable_location_mixture", "product_stable"):
            if self.alpha_tgt is None or not 1.0 < self.alpha_tgt <= 2.0:
                raise ParameterError(
                    f"stable targets need alpha_tgt in (1, 2], got {self.alpha_tgt}")
        if self.kind == "co_relaxation" and self.payload is None:
            raise ParameterError("co_relaxation target needs a payload")

    # -- JSON round-trip for experiment configs -----------------------------
    def to_json(self):
        if self.kind == "co_relaxation":
            return {"kind": self.kind, "dim": self.dim, "payload": self.payload.to_json()}
        return {"kind": self.kind, "dim": self.dim, "alpha_tgt": self.alpha_tgt,
                "components": [{"weight": c.weight, "center": list(map(float, c.center)),
                                "scale": c.scale} for c in self.components]}

    @staticmethod
    def from_json(obj):
        if obj["kind"] == "co_relaxation":
            from . import combopt
            return TargetSpec("co_relaxation", obj["dim"],
                              payload=combopt.relaxation_from_json(obj["payload"]))
        comps = [Component(c["weight"], np.asarray(c["center"], float), c["scale"])
                 for c in obj["components"]]
        return TargetSpec(obj["kind"], obj["dim"], comps, obj.get("alpha_tgt"))


@dataclass
class ScoreOracle:
    score: object
    dim: int
    log_density: object = None
    exact_sampler: object = None


def _check_finite(x):
    if np.isnan(x).any():
        raise ParameterError("NaN input to target evaluation")


def _component_terms(spec: TargetSpec, x):
    """Per-component log-density (n, k) and score (k, n, d)."""
    n, d = x.shape
    k = len(spec.components)
    logf = np.empty((n, k))
    scores = np.empty((k, n, d))
    for i, c in enumerate(spec.components):
        z = x - c.center
        if spec.kind == "gaussian_mixture":
            var = 2.0 * c.scale ** 2
            r2 = np.sum(z * z, axis=1)
            logf[:, i] = -r2 / (2 * var) - 0.5 * d * np.log(2 * np.pi * var)
            scores[i] = -z / var
        elif spec.kind == "cauchy_mixture":
            r2 = np.sum(z * z, axis=1)
            q = c.scale ** 2 + r2
            logf[:, i] = (special.gammaln((d + 1) / 2.0)
                          - (d + 1) / 2.0 * np.log(np.pi) + np.log(c.scale)
                          - (d + 1) / 2.0 * np.log(q))
            scores[i] = -(d + 1) * z / q[:, None]
        elif spec.kind == "stable_location_mixture":
            prof = stable.radial_profile(spec.alpha_tgt, d)
            r = np.linalg.norm(z, axis=1) / c.scale
            logf[:, i] = prof.logpdf(r) - d * np.log(c.scale)
            psi = prof.dlogpdf(r) / c.scale
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[:, None] > 0, z / (r[:, None] * c.scale), 0.0)
            scores[i] = psi[:, None] * unit
        elif spec.kind == "product_stable":
            prof = stable.radial_profile(spec.alpha_tgt, 1)
            zz = z / c.scale
            logf[:, i] = np.sum(prof.logpdf(np.abs(zz)), axis=1) - d * np.log(c.scale)
            scores[i] = np.sign(zz) * prof.dlogpdf(np.abs(zz)) / c.scale
        else:
            raise ParameterError(f"no component terms for kind {spec.kind!r}")
    return logf, scores


def mixture_score(spec: TargetSpec, x):
    """Oracle score of the mixture: responsibility-weighted component scores,
    evaluated in log space so underflowing components never poison the sum."""
    if spec.kind == "co_relaxation":
        return spec.payload.score(x)
    xs = np.atleast_2d(np.asarray(x, float))
    _check_finite(xs)
    logf, scores = _component_terms(spec, xs)
    logw = np.log([c.weight for c in spec.components])
    li = logf + logw[None, :]
    li -= li.max(axis=1, keepdims=True)
    resp = np.exp(li)
    resp /= resp.sum(axis=1, keepdims=True)
    out = np.einsum("nk,knd->nd", resp, scores)
    return out[0] if np.asarray(x).ndim == 1 else out


def log_density(spec: TargetSpec, x):
    """Unnormalized log-density (exact shape; additive constants untracked).

    Available for gaussian/cauchy mixtures, stable mixtures (isotropic form
    limited to d <= 4 by quadrature, product form in any d), and relaxation
    targets.  Raises CapabilityError otherwise so density-based baselines can
    surface "sampler unavailable for this target".
    """
    if spec.kind == "co_relaxation":
        return spec.payload.log_density(x)
    if spec.kind == "stable_location_mixture" and spec.dim > 4:
        raise CapabilityError(
            f"log_density of an isotropic stable target needs dim <= 4, got {spec.dim}")
    xs = np.atleast_2d(np.asarray(x, float))
    _check_finite(xs)
    logf, _ = _component_terms(spec, xs)
    logw = np.log([c.weight for c in spec.components])
    out = special.logsumexp(logf + logw[None, :], axis=1)
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def exact_sample(spec: TargetSpec, n, rng):
    """Ground-truth draws: categorical component choice, then exact component
    sampling through the stable-law transforms."""
    return exact_sample_with_labels(spec, n, rng)[0]


def exact_sample_with_labels(spec: TargetSpec, n, rng):
    """exact_sample plus the drawn component index of every row."""
    if spec.kind == "co_relaxation":
        raise CapabilityError("relaxation targets have no exact sampler")
    g = as_generator(rng)
    if n == 0:
        return np.empty((0, spec.dim)), np.empty(0, dtype=int)
    w = np.array([c.weight for c in spec.components])
    idx = g.choice(len(w), size=n, p=w)
    out = np.empty((n, spec.dim))
    for i, c in enumerate(spec.components):
        m = idx == i
        ni = int(m.sum())
        if ni == 0:
            continue
        if spec.kind == "gaussian_mixture":
            draw = stable.sample_sas_isotropic(2.0, c.scale, spec.dim, ni, g)
        elif spec.kind == "cauchy_mixture":
            z = g.standard_normal((ni, spec.dim))
            denom = np.abs(g.standard_normal(ni))
            draw = c.scale * z / denom[:, None]
        elif spec.kind == "stable_location_mixture":
            draw = stable.sample_sas_isotropic(spec.alpha_tgt, c.scale, spec.dim, ni, g)
        elif spec.kind == "product_stable":
            cols = [stable.sample_sas_1d(spec.alpha_tgt, c.scale, ni, g)
                    for _ in range(spec.dim)]
            draw = np.stack(cols, axis=1)
        out[m] = draw + c.center
    return out, idx


def has_log_density(spec: TargetSpec) -> bool:
    try:
        log_density(spec, np.zeros(spec.dim))
        return True
    except CapabilityError:
        return False


def make_oracle(spec: TargetSpec) -> ScoreOracle:
    logd = (lambda x: log_density(spec, x)) if has_log_density(spec) else None
    sampler = None if spec.kind == "co_relaxation" \
        else (lambda n, rng: exact_sample(spec, n, rng))
    return ScoreOracle(score=lambda x: mixture_score(spec, x), dim=spec.dim,
                       log_density=logd, exact_sampler=sampler)


# -- convenience constructors used throughout tests and recipes --------------

def gaussian_target(center, scale=1.0 / np.sqrt(2.0)):
    """Single Gaussian N(center, 2 scale^2 I); default scale gives unit variance."""
    center = np.atleast_1d(np.asarray(center, float))
    return TargetSpec("gaussian_mixture", len(center),
                      [Component(1.0, center, scale)])


def stable_mixture(alpha, centers, weights, scales=None, form="isotropic"):
    centers = [np.atleast_1d(np.asarray(c, float)) for c in centers]
    dim = len(centers[0])
    scales = scales or [1.0] * len(centers)
    comps = [Component(w, c, s) for w, c, s in zip(weights, centers, scales)]
    kind = "stable_location_mixture" if form == "isotropic" else "product_stable"
    if alpha == 2.0:
        kind = "gaussian_mixture"
    return TargetSpec(kind, dim, comps, alpha_tgt=None if alpha == 2.0 else alpha)
