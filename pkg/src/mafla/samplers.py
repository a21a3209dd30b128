"""The sampler family: unadjusted Langevin chains (ULA, FULA), density-based
Metropolis baselines (MALA, stable random-walk MH), and the score-based
adjusted fractional chain in parallel and sequential form.

Noise convention: the standard stable draw at alpha = 2 is N(0, 2), so the
Gaussian samplers use proposal covariance 2 tau I.  That keeps the degeneracy
ladder exact: the adjusted chain with unit acceptance is bit-identical to the
unadjusted fractional chain, and the fractional chain at alpha = 2 is
bit-identical to ULA under shared streams.  Each run derives two substreams
from its RngStream, one for noise and one for acceptance uniforms, so
adjusted and unadjusted runs consume identical noise sequences.

Divergence policy: a particle whose update is non-finite keeps its previous
state and is frozen for the rest of the run; the count is reported rather
than aborting the batch (heavy-tailed noise makes rare overflow possible).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import stable
from .errors import CapabilityError, ParameterError
from .rng import RngStream
from .proposal import DriftConfig

_NOISE_SUBSTREAM = 0
_ACCEPT_SUBSTREAM = 1


@dataclass
class ChainState:
    particles: np.ndarray
    step_index: int = 0
    accept_count: np.ndarray = None
    frozen: np.ndarray = None

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, float)).copy()
        n = self.particles.shape[0]
        if self.accept_count is None:
            self.accept_count = np.zeros(n, dtype=int)
        if self.frozen is None:
            self.frozen = np.zeros(n, dtype=bool)


@dataclass
class RunResult:
    final_particles: np.ndarray
    acceptance_rate: np.ndarray
    n_steps: int
    trajectory: np.ndarray = None        # (T_kept, N, d), thinned
    accept_trace: np.ndarray = None      # per-step accepted fraction (adjusted)
    diverged: int = 0
    wall_time: float = 0.0

    def samples(self, burn_in_frac=0.2):
        """Pooled post-burn-in samples from the stored trajectory."""
        if self.trajectory is None:
            raise ParameterError("run stored no trajectory")
        t0 = int(burn_in_frac * self.trajectory.shape[0])
        kept = self.trajectory[t0:]
        return kept.reshape(-1, kept.shape[-1])


def _require_stream(rng):
    if not isinstance(rng, RngStream):
        raise ParameterError("samplers require an RngStream for reproducible substreams")
    return rng


def _freeze_update(x, x_new, frozen):
    """Apply the frozen-particle policy; returns (next_x, frozen)."""
    bad = ~np.isfinite(x_new).all(axis=1)
    newly = bad & ~frozen
    frozen = frozen | bad
    keep = frozen[:, None]
    return np.where(keep, x, x_new), frozen, int(newly.sum())


def _stable_noise(alpha, n, d, g):
    return stable.sample_sas_isotropic(alpha, 1.0, d, n, g)


# --- single steps -------------------------------------------------------------

def step_fula(state: ChainState, target_score, cfg: DriftConfig, g_noise,
              noise=None) -> ChainState:
    """x <- x + tau c_alpha s(x) + tau^(1/alpha) xi for every live particle."""
    x = state.particles
    n, d = x.shape
    b = cfg.c_alpha * np.asarray(target_score(x), float)
    xi = _stable_noise(cfg.alpha, n, d, g_noise) if noise is None else noise
    x_new = x + cfg.tau * b + cfg.noise_scale * xi
    nxt, frozen, newly = _freeze_update(x, x_new, state.frozen)
    st = ChainState(nxt, state.step_index + 1, state.accept_count + 1, frozen)
    st._newly_frozen = newly
    return st


def step_ula(state: ChainState, target_score, tau, g_noise, noise=None) -> ChainState:
    """Gaussian baseline; exactly the alpha = 2 fractional step (covariance 2 tau I)."""
    return step_fula(state, target_score, DriftConfig(2.0, tau), g_noise, noise=noise)


def _gauss_logq(b_to, b_from, drift_from, tau):
    r = b_to - b_from - tau * drift_from
    return -np.sum(r * r, axis=1) / (4.0 * tau)


def step_mala(state: ChainState, target_score, target_logp, tau, g_noise,
              g_accept) -> ChainState:
    """Langevin proposal N(x + tau s(x), 2 tau I) with the exact ratio test."""
    if target_logp is None:
        raise CapabilityError("MALA needs a target log-density")
    x = state.particles
    n, d = x.shape
    sx = np.asarray(target_score(x), float)
    xi = _stable_noise(2.0, n, d, g_noise)
    xp = x + tau * sx + np.sqrt(tau) * xi
    sxp = np.asarray(target_score(xp), float)
    log_ratio = (np.asarray(target_logp(xp), float) - np.asarray(target_logp(x), float)
                 + _gauss_logq(x, xp, sxp, tau) - _gauss_logq(xp, x, sx, tau))
    u = g_accept.uniform(size=n)
    ok = (np.log(u) < log_ratio) & np.isfinite(xp).all(axis=1) & ~state.frozen
    nxt = np.where(ok[:, None], xp, x)
    return ChainState(nxt, state.step_index + 1,
                      state.accept_count + ok.astype(int), state.frozen.copy())


def step_frw_mh(state: ChainState, target_logp, alpha, step_scale, g_noise,
                g_accept) -> ChainState:
    """Symmetric stable random-walk proposal; the ratio reduces to
    exp(log p(x') - log p(x))."""
    if target_logp is None:
        raise CapabilityError("stable random-walk MH needs a target log-density")
    x = state.particles
    n, d = x.shape
    xp = x + step_scale * _stable_noise(alpha, n, d, g_noise)
    log_ratio = np.asarray(target_logp(xp), float) - np.asarray(target_logp(x), float)
    u = g_accept.uniform(size=n)
    ok = (np.log(u) < log_ratio) & np.isfinite(xp).all(axis=1) & ~state.frozen
    nxt = np.where(ok[:, None], xp, x)
    return ChainState(nxt, state.step_index + 1,
                      state.accept_count + ok.astype(int), state.frozen.copy())


# --- full runs ----------------------------------------------------------------

def _collect(trajectory, x, t, thin, store):
    if store and (t + 1) % thin == 0:
        trajectory.append(x.copy())


def run_fula(init, target_score, cfg: DriftConfig, n_steps, rng: RngStream,
             store_trajectory=True, thin=1) -> RunResult:
    _require_stream(rng)
    g_noise = rng.child(_NOISE_SUBSTREAM).generator()
    t0 = time.perf_counter()
    state = ChainState(init)
    traj, diverged = [], 0
    for t in range(n_steps):
        state = step_fula(state, target_score, cfg, g_noise)
        diverged += state._newly_frozen
        _collect(traj, state.particles, t, thin, store_trajectory)
    return RunResult(state.particles, np.ones(state.particles.shape[0]),
                     n_steps, np.array(traj) if store_trajectory else None,
                     None, diverged, time.perf_counter() - t0)


def run_ula(init, target_score, tau, n_steps, rng: RngStream,
            store_trajectory=True, thin=1) -> RunResult:
    return run_fula(init, target_score, DriftConfig(2.0, tau), n_steps, rng,
                    store_trajectory=store_trajectory, thin=thin)


def run_mala(init, target_score, target_logp, tau, n_steps, rng: RngStream,
             store_trajectory=True, thin=1) -> RunResult:
    _require_stream(rng)
    g_noise = rng.child(_NOISE_SUBSTREAM).generator()
    g_accept = rng.child(_ACCEPT_SUBSTREAM).generator()
    t0 = time.perf_counter()
    state = ChainState(init)
    traj, trace = [], []
    for t in range(n_steps):
        prev = state.accept_count.copy()
        state = step_mala(state, target_score, target_logp, tau, g_noise, g_accept)
        trace.append(float((state.accept_count - prev).mean()))
        _collect(traj, state.particles, t, thin, store_trajectory)
    rate = state.accept_count / max(n_steps, 1)
    return RunResult(state.particles, rate, n_steps,
                     np.array(traj) if store_trajectory else None,
                     np.array(trace), 0, time.perf_counter() - t0)


def run_frw_mh(init, target_logp, alpha, step_scale, n_steps, rng: RngStream,
               store_trajectory=True, thin=1) -> RunResult:
    _require_stream(rng)
    g_noise = rng.child(_NOISE_SUBSTREAM).generator()
    g_accept = rng.child(_ACCEPT_SUBSTREAM).generator()
    t0 = time.perf_counter()
    state = ChainState(init)
    traj, trace = [], []
    for t in range(n_steps):
        prev = state.accept_count.copy()
        state = step_frw_mh(state, target_logp, alpha, step_scale, g_noise, g_accept)
        trace.append(float((state.accept_count - prev).mean()))
        _collect(traj, state.particles, t, thin, store_trajectory)
    rate = state.accept_count / max(n_steps, 1)
    return RunResult(state.particles, rate, n_steps,
                     np.array(traj) if store_trajectory else None,
                     np.array(trace), 0, time.perf_counter() - t0)


def run_mafla_parallel(init, target_score, accept, cfg: DriftConfig, n_steps,
                       rng: RngStream, store_trajectory=True, thin=1) -> RunResult:
    """Batched adjusted fractional chain: batched drift, batched stable noise,
    batched acceptance probabilities, per-particle uniform, accept or hold."""
    _require_stream(rng)
    g_noise = rng.child(_NOISE_SUBSTREAM).generator()
    g_accept = rng.child(_ACCEPT_SUBSTREAM).generator()
    t0 = time.perf_counter()
    state = ChainState(init)
    n, d = state.particles.shape
    traj, trace, diverged = [], [], 0
    for t in range(n_steps):
        x = state.particles
        b = cfg.c_alpha * np.asarray(target_score(x), float)
        xi = _stable_noise(cfg.alpha, n, d, g_noise)
        xp = x + cfg.tau * b + cfg.noise_scale * xi
        finite = np.isfinite(xp).all(axis=1)
        newly = (~finite) & ~state.frozen
        diverged += int(newly.sum())
        frozen = state.frozen | ~finite
        a = np.zeros(n)
        if finite.any():
            a[finite] = np.asarray(accept.prob(xp[finite], x[finite]), float)
        u = g_accept.uniform(size=n)
        ok = (u < a) & finite & ~state.frozen
        state = ChainState(np.where(ok[:, None], xp, x), state.step_index + 1,
                           state.accept_count + ok.astype(int), frozen)
        trace.append(float(ok.mean()))
        _collect(traj, state.particles, t, thin, store_trajectory)
    rate = state.accept_count / max(n_steps, 1)
    return RunResult(state.particles, rate, n_steps,
                     np.array(traj) if store_trajectory else None,
                     np.array(trace), diverged, time.perf_counter() - t0)


def run_mafla_sequential(x0, target_score, accept, cfg: DriftConfig, n_steps,
                         rng: RngStream, store_trajectory=True, thin=1) -> RunResult:
    """Single chain; per-step semantics identical to the parallel run with N = 1."""
    x0 = np.asarray(x0, float)
    if x0.ndim != 1:
        raise ParameterError("sequential run takes a single d-vector start")
    return run_mafla_parallel(x0[None, :], target_score, accept, cfg, n_steps, rng,
                              store_trajectory=store_trajectory, thin=thin)


# --- serialization -------------------------------------------------------------

def run_result_to_csv(result: RunResult, path):
    """Long-format trajectory dump: step, particle, coordinate, value."""
    if result.trajectory is None:
        raise ParameterError("no trajectory stored")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "particle", "coordinate", "value"])
        T, N, D = result.trajectory.shape
        for t in range(T):
            for i in range(N):
                for k in range(D):
                    w.writerow([t, i, k, repr(float(result.trajectory[t, i, k]))])


def run_result_summary(result: RunResult) -> dict:
    return {
        "n_steps": int(result.n_steps),
        "n_particles": int(result.final_particles.shape[0]),
        "acceptance_rate_mean": float(np.mean(result.acceptance_rate)),
        "acceptance_rate_per_particle": [float(a) for a in result.acceptance_rate],
        "diverged": int(result.diverged),
        "wall_time": float(result.wall_time),
    }


def write_summary(result: RunResult, path):
    with open(path, "w") as fh:
        json.dump(run_result_summary(result), fh, indent=1, sort_keys=True)
