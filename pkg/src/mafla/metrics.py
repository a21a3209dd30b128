"""Sampling-quality metrics: exact 1-D Wasserstein-1, sliced multivariate W1,
tail-quantile errors, and two-sample distribution tests.

Heavy-tail handling: quantiles use type-7 interpolation on finite values;
non-finite samples are counted and dropped rather than poisoning the metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats

from .errors import ParameterError
from .rng import RngStream

_STATISTICS = ("norm_radial", "per_coordinate_mean")


@dataclass
class MetricReport:
    w1: float
    q95_err: float
    q99_err: float
    n_samples: int
    n_reference: int
    statistic: str
    seed: int
    n_nonfinite: int = 0

    def as_row(self):
        return asdict(self)


def _finite_rows(a):
    a = np.atleast_2d(np.asarray(a, float))
    m = np.isfinite(a).all(axis=1)
    return a[m], int((~m).sum())


def w1_1d(a, b) -> float:
    """Exact Wasserstein-1 between two empirical 1-D distributions
    (L1 distance of quantile functions; handles unequal sample sizes)."""
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("w1_1d of an empty sample")
    return float(stats.wasserstein_distance(a, b))


def sliced_w1(A, B, n_proj=256, seed=0) -> float:
    """Mean 1-D W1 over seeded uniform-sphere projections; exact in d = 1."""
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    if A.shape[1] != B.shape[1]:
        raise ParameterError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if n_proj < 1:
        raise ParameterError("n_proj must be >= 1")
    d = A.shape[1]
    if d == 1:
        return w1_1d(A, B)
    g = RngStream(seed, 771).generator()
    total = 0.0
    for _ in range(n_proj):
        u = g.standard_normal(d)
        u /= np.linalg.norm(u)
        total += w1_1d(A @ u, B @ u)
    return total / n_proj


def quantile_error(samples, reference, beta, statistic="norm_radial") -> float:
    """|q_beta(stat(samples)) - q_beta(stat(reference))|.

    norm_radial: Euclidean norm after centering both sets at the reference
    mean (translation consistent).  per_coordinate_mean: mean over coordinates
    of the marginal quantile errors.
    """
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    if statistic not in _STATISTICS:
        raise ParameterError(f"unknown statistic {statistic!r}")
    s, _ = _finite_rows(samples)
    r, _ = _finite_rows(reference)
    if s.size == 0 or r.size == 0:
        raise ParameterError("quantile_error of an empty sample")
    if statistic == "norm_radial":
        center = r.mean(axis=0)
        qs = np.quantile(np.linalg.norm(s - center, axis=1), beta)
        qr = np.quantile(np.linalg.norm(r - center, axis=1), beta)
        return float(abs(qs - qr))
    errs = [abs(np.quantile(s[:, j], beta) - np.quantile(r[:, j], beta))
            for j in range(s.shape[1])]
    return float(np.mean(errs))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov p-value (1-D)."""
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    return float(stats.ks_2samp(a, b).pvalue)


def ks_statistic(a, b):
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    return float(stats.ks_2samp(a, b).statistic)


def report(samples, reference, seed=0, statistic="norm_radial", n_proj=256,
           betas=(0.95, 0.99)) -> MetricReport:
    """Full metric bundle for a sampler output against ground truth."""
    s, bad = _finite_rows(samples)
    r, _ = _finite_rows(reference)
    if s.size == 0:
        raise ParameterError("report of an empty or fully divergent sample")
    w1 = sliced_w1(s, r, n_proj=n_proj, seed=seed)
    q95 = quantile_error(s, r, betas[0], statistic)
    q99 = quantile_error(s, r, betas[1], statistic)
    return MetricReport(w1=w1, q95_err=q95, q99_err=q99, n_samples=s.shape[0],
                        n_reference=r.shape[0], statistic=statistic, seed=seed,
                        n_nonfinite=bad)


METRICS_CSV_COLUMNS = ["experiment_id", "sampler", "alpha_tgt", "alpha_prop",
                       "tau", "dim", "seed", "w1", "q95_err", "q99_err",
                       "acceptance_rate"]


def write_metrics_csv(path, rows):
    """Rows are dicts keyed by METRICS_CSV_COLUMNS; floats via repr for
    byte-stable reruns."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in METRICS_CSV_COLUMNS])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v
