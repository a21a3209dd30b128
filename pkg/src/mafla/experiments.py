"""Experiment harness: strict JSON configs, desk-scale recipes for each study,
and deterministic CSV/JSON artifact output.

Every run derives all randomness from (seed, fixed stream ids), so rerunning a
config with the same seeds yields byte-identical CSVs; the manifest carries
the only timestamp.  Floats are serialized with repr for byte stability.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np
import scipy

from . import __version__, combopt, metrics, nets, proposal, riesz, samplers, sbm, stable, targets
from .errors import CapabilityError, ParameterError
from .rng import RngStream

EXPERIMENTS = ("mixture2d", "alpha_grid", "tau_sweep", "dim_sweep",
               "riesz_ablation", "lambda_ablation", "maxcut", "vertex_cover",
               "validate")

_SAMPLERS = ("ula", "fula", "mala", "frw_mh", "mafla")

# fixed stream ids so every artifact is a pure function of (config, seed)
_S_INIT, _S_CHAIN, _S_TRAIN, _S_REF, _S_SUB = 200, 100, 300, 400, 500


class ConfigError(ParameterError):
    pass


# --- strict config validation -------------------------------------------------

def _expect(obj, path, allowed):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _need(obj, path, key, typ):
    if key not in obj:
        raise ConfigError(f"{path}: missing required key '{key}'")
    v = obj[key]
    if typ is float and isinstance(v, int):
        v = float(v)
    if not isinstance(v, typ):
        raise ConfigError(f"{path}.{key}: expected {typ}, got {type(v).__name__}")
    return v


def _opt(obj, key, default):
    return obj.get(key, default)


def validate_config(cfg: dict) -> dict:
    """Schema-check a config dict; raises ConfigError with the offending path."""
    top_keys = {"experiment", "output_dir", "seeds", "n_particles", "n_steps",
                "burn_in_frac", "target", "samplers", "drift", "sbm", "metrics",
                "grid", "graphs", "riesz", "init_scale", "store_trajectory"}
    _expect(cfg, "config", top_keys)
    exp = _need(cfg, "config", "experiment", str)
    if exp not in EXPERIMENTS:
        raise ConfigError(f"config.experiment: unknown experiment {exp!r}")
    _need(cfg, "config", "output_dir", str)
    if exp == "validate":
        return cfg
    seeds = _need(cfg, "config", "seeds", list)
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("config.seeds: need a nonempty list of ints")
    for key in ("n_particles", "n_steps"):
        if exp not in ("riesz_ablation", "lambda_ablation") or key in cfg:
            v = _need(cfg, "config", key, int)
            if v < 1:
                raise ConfigError(f"config.{key}: must be >= 1")
    if "samplers" in cfg:
        for s in cfg["samplers"]:
            if s not in _SAMPLERS:
                raise ConfigError(f"config.samplers: unknown sampler {s!r}")
    if "drift" in cfg:
        _expect(cfg["drift"], "config.drift", {"alpha", "tau"})
        a = _need(cfg["drift"], "config.drift", "alpha", (int, float))
        if not 1.0 < a <= 2.0:
            raise ConfigError("config.drift.alpha: must lie in (1, 2]")
        t = _need(cfg["drift"], "config.drift", "tau", (int, float))
        if t <= 0:
            raise ConfigError("config.drift.tau: must be positive")
    if "sbm" in cfg:
        _expect(cfg["sbm"], "config.sbm",
                {"lambda_alpha", "lambda_entropy", "epochs", "batch_size", "lr",
                 "eta_schedule"})
    if "metrics" in cfg:
        _expect(cfg["metrics"], "config.metrics",
                {"n_reference", "n_projections", "statistic", "max_samples",
                 "quantile_betas"})
    if "target" in cfg:
        t = cfg["target"]
        _expect(t, "config.target",
                {"kind", "dim", "components", "alpha_tgt", "payload"})
        try:
            targets.TargetSpec.from_json(t)
        except (ParameterError, KeyError) as e:
            raise ConfigError(f"config.target: {e}") from e
    if exp in ("maxcut", "vertex_cover"):
        g = _need(cfg, "config", "graphs", dict)
        _expect(g, "config.graphs",
                {"families", "n", "n_graphs", "ba_m", "er_p", "temperature",
                 "penalty", "allow_large", "small_optimum_check"})
        n = _need(g, "config.graphs", "n", int)
        if n > 256 and not g.get("allow_large", False):
            raise ConfigError("config.graphs.n: n > 256 requires allow_large=true")
    if exp in ("alpha_grid", "tau_sweep", "dim_sweep", "riesz_ablation",
               "lambda_ablation"):
        grid = _need(cfg, "config", "grid", dict)
        _expect(grid, "config.grid",
                {"alpha_tgt_list", "alpha_prop_list", "tau_list", "dim_list",
                 "K_list", "h_list", "lambda_alpha_list", "budget_steps",
                 "adjusted", "sbm_epochs"})
    return cfg


# --- deterministic CSV writing --------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump({"columns": list(columns)}, fh, sort_keys=True)


def _write_manifest(outdir, cfg, extra=None):
    blob = json.dumps(cfg, sort_keys=True).encode()
    manifest = {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "seeds": cfg.get("seeds", []),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


# --- shared chain driver ---------------------------------------------------------

@dataclass
class RunSetup:
    spec: targets.TargetSpec
    drift: proposal.DriftConfig
    sbm_cfg: sbm.SBMConfig
    n_particles: int
    n_steps: int
    burn_in_frac: float = 0.2
    init_scale: float = 1.0
    store_trajectory: bool = True


def _sbm_config(cfg_block) -> sbm.SBMConfig:
    b = cfg_block or {}
    return sbm.SBMConfig(
        lambda_alpha=_opt(b, "lambda_alpha", 1.0),
        lambda_entropy=_opt(b, "lambda_entropy", 0.01),
        epochs=_opt(b, "epochs", 300),
        batch_size=_opt(b, "batch_size", 128),
        lr=_opt(b, "lr", 1e-3),
        eta_schedule=_opt(b, "eta_schedule", None))


def train_mafla_acceptance(setup: RunSetup, seed, outdir=None, tag=""):
    """Fit the acceptance net for a setup; returns (AcceptanceNet, trace)."""
    net = nets.default_acceptance_net(setup.spec.dim, RngStream(seed, _S_TRAIN, (1,)))
    accept, trace = sbm.train_acceptance(net, setup.spec, setup.drift,
                                         setup.sbm_cfg, RngStream(seed, _S_TRAIN, (2,)))
    if outdir:
        nets.save_checkpoint(os.path.join(outdir, f"acceptance_{tag}seed{seed}.ckpt"),
                             accept.net, {"seed": seed})
        write_csv(os.path.join(outdir, f"loss_trace_{tag}seed{seed}.csv"),
                  ["epoch", "eta", "loss_l2", "loss_alpha", "entropy", "combined"],
                  trace)
    return accept, trace


def run_one_sampler(name, setup: RunSetup, seed, accept=None):
    """Run one named sampler; shared init stream keeps comparisons paired."""
    oracle = targets.make_oracle(setup.spec)
    init = (RngStream(seed, _S_INIT).generator()
            .standard_normal((setup.n_particles, setup.spec.dim)) * setup.init_scale)
    chain_rng = RngStream(seed, _S_CHAIN)
    if name == "ula":
        return samplers.run_ula(init, oracle.score, setup.drift.tau, setup.n_steps,
                                chain_rng, store_trajectory=setup.store_trajectory)
    if name == "fula":
        return samplers.run_fula(init, oracle.score, setup.drift, setup.n_steps,
                                 chain_rng, store_trajectory=setup.store_trajectory)
    if name == "mala":
        if oracle.log_density is None:
            raise CapabilityError("sampler unavailable for this target: MALA "
                                  "needs a log-density")
        return samplers.run_mala(init, oracle.score, oracle.log_density,
                                 setup.drift.tau, setup.n_steps, chain_rng,
                                 store_trajectory=setup.store_trajectory)
    if name == "frw_mh":
        if oracle.log_density is None:
            raise CapabilityError("sampler unavailable for this target: "
                                  "stable random-walk MH needs a log-density")
        return samplers.run_frw_mh(init, oracle.log_density, setup.drift.alpha,
                                   setup.drift.noise_scale, setup.n_steps, chain_rng,
                                   store_trajectory=setup.store_trajectory)
    if name == "mafla":
        if accept is None:
            raise ParameterError("mafla requires a trained acceptance model")
        return samplers.run_mafla_parallel(init, oracle.score, accept, setup.drift,
                                           setup.n_steps, chain_rng,
                                           store_trajectory=setup.store_trajectory)
    raise ConfigError(f"unknown sampler {name!r}")


def _metric_row(experiment_id, name, setup: RunSetup, seed, run, mcfg):
    oracle = targets.make_oracle(setup.spec)
    ref = oracle.exact_sampler(int(mcfg.get("n_reference", 20000)),
                               RngStream(seed, _S_REF))
    pooled = run.samples(setup.burn_in_frac) if run.trajectory is not None \
        else run.final_particles
    cap = int(mcfg.get("max_samples", 50000))
    if pooled.shape[0] > cap:
        idx = RngStream(seed, _S_SUB).generator().choice(pooled.shape[0], cap,
                                                         replace=False)
        pooled = pooled[idx]
    rep = metrics.report(pooled, ref, seed=seed,
                         statistic=mcfg.get("statistic", "norm_radial"),
                         n_proj=int(mcfg.get("n_projections", 64)),
                         betas=tuple(mcfg.get("quantile_betas", (0.95, 0.99))))
    return {
        "experiment_id": experiment_id, "sampler": name,
        "alpha_tgt": setup.spec.alpha_tgt if setup.spec.alpha_tgt is not None else 2.0,
        "alpha_prop": setup.drift.alpha, "tau": setup.drift.tau,
        "dim": setup.spec.dim, "seed": seed, "w1": rep.w1,
        "q95_err": rep.q95_err, "q99_err": rep.q99_err,
        "acceptance_rate": float(np.mean(run.acceptance_rate)),
    }


def run_comparison(experiment_id, setup: RunSetup, sampler_names, seeds, mcfg,
                   outdir=None, tag=""):
    """Train (once per seed) and run each sampler; return metric rows."""
    rows = []
    for seed in seeds:
        accept = None
        if "mafla" in sampler_names:
            accept, _ = train_mafla_acceptance(setup, seed, outdir, tag)
        for name in sampler_names:
            run = run_one_sampler(name, setup, seed, accept=accept)
            rows.append(_metric_row(experiment_id, name, setup, seed, run, mcfg))
    return rows


# --- individual experiments -------------------------------------------------------

def _exp_mixture2d(cfg, outdir):
    spec = targets.TargetSpec.from_json(cfg["target"]) if "target" in cfg else \
        targets.stable_mixture(1.95, [[-3.0, 0.0], [3.0, 0.0]], [0.2, 0.8])
    d = cfg.get("drift", {})
    setup = RunSetup(spec, proposal.DriftConfig(d.get("alpha", 1.95), d.get("tau", 0.05)),
                     _sbm_config(cfg.get("sbm")), cfg["n_particles"], cfg["n_steps"],
                     cfg.get("burn_in_frac", 0.2), cfg.get("init_scale", 1.0))
    names = cfg.get("samplers", ["fula", "mafla"])
    mcfg = cfg.get("metrics", {})
    rows = run_comparison("mixture2d", setup, names, cfg["seeds"], mcfg, outdir)
    write_csv(os.path.join(outdir, "metrics.csv"), metrics.METRICS_CSV_COLUMNS, rows)

    # Weight recovery: nearest-center assignment of post-burn-in samples
    centers = np.array([c.center for c in spec.components])
    wrows, srows = [], []
    for seed in cfg["seeds"]:
        accept = None
        if "mafla" in names:
            accept, _ = train_mafla_acceptance(setup, seed)
        for name in names:
            run = run_one_sampler(name, setup, seed, accept=accept)
            pooled = run.samples(setup.burn_in_frac)
            dist = np.linalg.norm(pooled[:, None, :] - centers[None], axis=2)
            lab = dist.argmin(axis=1)
            wrow = {"experiment_id": "mixture2d", "sampler": name, "seed": seed}
            for k in range(len(centers)):
                wrow[f"weight_{k}"] = float(np.mean(lab == k))
            wrows.append(wrow)
            for i, xrow in enumerate(run.final_particles):
                srows.append({"sampler": name, "seed": seed, "particle": i,
                              **{f"x{j}": float(v) for j, v in enumerate(xrow)}})
    wcols = ["experiment_id", "sampler", "seed"] + \
        [f"weight_{k}" for k in range(len(centers))]
    write_csv(os.path.join(outdir, "weights.csv"), wcols, wrows)
    scols = ["sampler", "seed", "particle"] + [f"x{j}" for j in range(spec.dim)]
    write_csv(os.path.join(outdir, "samples.csv"), scols, srows)
    return 0


def _exp_alpha_grid(cfg, outdir):
    grid = cfg["grid"]
    tgt_list = grid.get("alpha_tgt_list", [1.2, 1.5, 1.8])
    prop_list = grid.get("alpha_prop_list", [1.2, 1.5, 1.8, 2.0])
    d = cfg.get("drift", {})
    tau = d.get("tau", 0.05)
    mcfg = cfg.get("metrics", {})
    names = cfg.get("samplers", ["fula", "mafla"])
    rows = []
    for a_tgt in tgt_list:
        spec = targets.stable_mixture(a_tgt, [[1.0, 2.0, 3.0, 4.0]], [1.0])
        for a_prop in prop_list:
            setup = RunSetup(spec, proposal.DriftConfig(a_prop, tau),
                             _sbm_config(cfg.get("sbm")), cfg["n_particles"],
                             cfg["n_steps"], cfg.get("burn_in_frac", 0.2),
                             cfg.get("init_scale", 1.0))
            rows += run_comparison(f"alpha_grid[{a_tgt}x{a_prop}]", setup, names,
                                   cfg["seeds"], mcfg)
    write_csv(os.path.join(outdir, "alpha_grid.csv"), metrics.METRICS_CSV_COLUMNS, rows)
    return 0


def _exp_tau_sweep(cfg, outdir):
    grid = cfg["grid"]
    tau_list = grid.get("tau_list", list(np.geomspace(1e-3, 1.0, 7)))
    d = cfg.get("drift", {})
    alpha = d.get("alpha", 1.5)
    spec = targets.TargetSpec.from_json(cfg["target"]) if "target" in cfg else \
        targets.stable_mixture(alpha, [[2.0] * 4, [-2.0] * 4], [0.5, 0.5])
    names = cfg.get("samplers", ["fula", "mafla"])
    mcfg = cfg.get("metrics", {})
    rows = []
    for tau in tau_list:
        setup = RunSetup(spec, proposal.DriftConfig(alpha, float(tau)),
                         _sbm_config(cfg.get("sbm")), cfg["n_particles"],
                         cfg["n_steps"], cfg.get("burn_in_frac", 0.2),
                         cfg.get("init_scale", 1.0))
        rows += run_comparison(f"tau_sweep[{tau:.6g}]", setup, names, cfg["seeds"], mcfg)
    write_csv(os.path.join(outdir, "tau_sweep.csv"), metrics.METRICS_CSV_COLUMNS, rows)
    return 0


def _exp_dim_sweep(cfg, outdir):
    grid = cfg["grid"]
    dim_list = grid.get("dim_list", [8, 12, 16, 20, 24, 28, 32])
    d = cfg.get("drift", {})
    alpha = d.get("alpha", 1.9)
    tau = d.get("tau", 0.05)
    names = cfg.get("samplers", ["fula", "mafla"])
    mcfg = cfg.get("metrics", {})
    rows = []
    for dim in dim_list:
        spec = targets.stable_mixture(alpha, [np.ones(dim), -np.ones(dim)],
                                      [0.6, 0.4], form="product")
        setup = RunSetup(spec, proposal.DriftConfig(alpha, tau),
                         _sbm_config(cfg.get("sbm")), cfg["n_particles"],
                         cfg["n_steps"], cfg.get("burn_in_frac", 0.2),
                         cfg.get("init_scale", 1.0))
        rows += run_comparison(f"dim_sweep[{dim}]", setup, names, cfg["seeds"], mcfg)
    write_csv(os.path.join(outdir, "dim_sweep.csv"), metrics.METRICS_CSV_COLUMNS, rows)
    return 0


def _exp_riesz_ablation(cfg, outdir, adjusted_default=False):
    grid = cfg["grid"]
    spec = targets.TargetSpec.from_json(cfg["target"]) if "target" in cfg else \
        targets.stable_mixture(1.5, [[5.0]], [1.0])
    mcfg = {
        "n_particles": cfg.get("n_particles", 256),
        "n_steps": cfg.get("n_steps", 2000),
        "seeds": cfg["seeds"],
        "tau": cfg.get("drift", {}).get("tau", 0.05),
        "budget_steps": grid.get("budget_steps", 100_000_000),
        "adjusted": grid.get("adjusted", adjusted_default),
        "burn_in_frac": cfg.get("burn_in_frac", 0.2),
        "sbm_epochs": grid.get("sbm_epochs", 150),
    }
    rows, completed = riesz.ablation_grid(
        spec,
        grid.get("alpha_tgt_list", [1.2, 1.5, 1.8]),
        grid.get("K_list", [0, 1, 3, 5]),
        grid.get("h_list", [1e-3, 1e-2, 3e-2, 1e-1]),
        grid.get("lambda_alpha_list", [0.0]),
        mcfg, out_csv=os.path.join(outdir, "ablation.csv"))
    return 0 if completed else 1


def _exp_lambda_ablation(cfg, outdir):
    cfg = dict(cfg)
    grid = dict(cfg.get("grid", {}))
    grid.setdefault("h_list", [1e-2])
    grid.setdefault("lambda_alpha_list", [0.0, 0.5, 1.0, 2.0])
    grid.setdefault("K_list", [0, 1])
    grid.setdefault("adjusted", True)
    cfg["grid"] = grid
    return _exp_riesz_ablation(cfg, outdir, adjusted_default=True)


def _decode_best_cut(run: samplers.RunResult, graph, stride=50):
    best = int(np.max(combopt.cut_value(combopt.sign_decode(run.final_particles),
                                        graph)))
    if run.trajectory is not None:
        for t in range(0, run.trajectory.shape[0], stride):
            cuts = combopt.cut_value(combopt.sign_decode(run.trajectory[t]), graph)
            best = max(best, int(np.max(cuts)))
    return best


def _exp_maxcut(cfg, outdir):
    g = cfg["graphs"]
    families = g.get("families", ["ba", "er"])
    n = g.get("n", 64)
    n_graphs = g.get("n_graphs", 5)
    temperature = g.get("temperature", 0.5)
    d = cfg.get("drift", {})
    drift_cfg = proposal.DriftConfig(d.get("alpha", 1.5), d.get("tau", 0.05))
    names = cfg.get("samplers", ["ula", "fula", "mala", "mafla"])
    rows = []
    for family in families:
        for gi in range(n_graphs):
            graph = (combopt.gen_ba(n, g.get("ba_m", 2), RngStream(900 + gi, 1))
                     if family == "ba"
                     else combopt.gen_er(n, g.get("er_p", 0.1), RngStream(900 + gi, 2)))
            tgt = combopt.MaxCutTarget(graph, temperature)
            spec = targets.TargetSpec("co_relaxation", graph.n, payload=tgt)
            setup = RunSetup(spec, drift_cfg, _sbm_config(cfg.get("sbm")),
                             cfg["n_particles"], cfg["n_steps"],
                             cfg.get("burn_in_frac", 0.2), cfg.get("init_scale", 1.0))
            for seed in cfg["seeds"]:
                accept = None
                if "mafla" in names:
                    accept, _ = train_mafla_acceptance(setup, seed + 37 * gi)
                for name in names:
                    run = run_one_sampler(name, setup, seed + 37 * gi, accept=accept)
                    e = combopt.maxcut_energy(run.final_particles, tgt)
                    cuts = combopt.cut_value(combopt.sign_decode(run.final_particles),
                                             graph)
                    rows.append({
                        "experiment_id": "maxcut", "family": family, "n": n,
                        "graph_seed": gi, "sampler": name, "seed": seed,
                        "energy_mean": float(np.mean(e)), "energy_std": float(np.std(e)),
                        "cut_mean": float(np.mean(cuts)), "cut_std": float(np.std(cuts)),
                        "cut_best": _decode_best_cut(run, graph),
                        "acceptance_rate": float(np.mean(run.acceptance_rate)),
                    })
    cols = ["experiment_id", "family", "n", "graph_seed", "sampler", "seed",
            "energy_mean", "energy_std", "cut_mean", "cut_std", "cut_best",
            "acceptance_rate"]
    write_csv(os.path.join(outdir, "maxcut.csv"), cols, rows)
    return 0


def _exp_vertex_cover(cfg, outdir):
    g = cfg["graphs"]
    n = g.get("n", 64)
    n_graphs = g.get("n_graphs", 5)
    temperature = g.get("temperature", 0.5)
    penalty = g.get("penalty", 2.0)
    d = cfg.get("drift", {})
    drift_cfg = proposal.DriftConfig(d.get("alpha", 1.5), d.get("tau", 0.05))
    names = cfg.get("samplers", ["ula", "fula", "mala", "mafla"])
    rows = []
    for gi in range(n_graphs):
        graph = combopt.gen_er_exact_edges(n, int(round(2.5 * n)), RngStream(910 + gi, 3))
        tgt = combopt.VCTarget(graph, penalty, temperature)
        spec = targets.TargetSpec("co_relaxation", graph.n, payload=tgt)
        setup = RunSetup(spec, drift_cfg, _sbm_config(cfg.get("sbm")),
                         cfg["n_particles"], cfg["n_steps"],
                         cfg.get("burn_in_frac", 0.2), cfg.get("init_scale", 1.0))
        for seed in cfg["seeds"]:
            accept = None
            if "mafla" in names:
                accept, _ = train_mafla_acceptance(setup, seed + 37 * gi)
            for name in names:
                run = run_one_sampler(name, setup, seed + 37 * gi, accept=accept)
                e = combopt.vc_energy(run.final_particles, tgt)
                pre = [combopt.cover_metrics((u > 0).astype(int), graph)
                       for u in run.final_particles]
                covers = np.array([combopt.greedy_decode_vc(u, graph).sum()
                                   for u in run.final_particles])
                # hard feasibility assertion on every decoded cover
                for u in run.final_particles:
                    x = combopt.greedy_decode_vc(u, graph)
                    i, j = graph.edge_list[:, 0], graph.edge_list[:, 1]
                    assert np.all((x[i] == 1) | (x[j] == 1)), "infeasible cover"
                rows.append({
                    "experiment_id": "vertex_cover", "family": "er", "n": n,
                    "graph_seed": gi, "sampler": name, "seed": seed,
                    "energy_mean": float(np.mean(e)), "energy_std": float(np.std(e)),
                    "cover_mean": float(np.mean(covers)),
                    "cover_std": float(np.std(covers)),
                    "cover_best": int(np.min(covers)),
                    "uncovered_mean": float(np.mean([m[2] for m in pre])),
                    "uncovered_std": float(np.std([m[2] for m in pre])),
                    "acceptance_rate": float(np.mean(run.acceptance_rate)),
                })
    cols = ["experiment_id", "family", "n", "graph_seed", "sampler", "seed",
            "energy_mean", "energy_std", "cover_mean", "cover_std", "cover_best",
            "uncovered_mean", "uncovered_std", "acceptance_rate"]
    write_csv(os.path.join(outdir, "vertex_cover.csv"), cols, rows)
    return 0


def _exp_validate(cfg, outdir):
    """Fast invariant suite: ECF targets, gradient spot checks, the
    detailed-balance oracle, and the sampler degeneracy ladder."""
    checks = {}
    s = stable.sample_sas_1d(1.5, 1.0, 10 ** 5, RngStream(1))
    checks["ecf_1d"] = bool(stable.ecf_check(s, np.linspace(-3, 3, 13), 1.5).max() < 0.02)

    spec = targets.gaussian_target([0.25, -0.5])
    x0 = np.array([0.3, 0.7])
    fd = np.array([(targets.log_density(spec, x0 + 1e-6 * e)
                    - targets.log_density(spec, x0 - 1e-6 * e)) / 2e-6
                   for e in np.eye(2)])
    checks["score_fd"] = bool(
        np.abs(targets.mixture_score(spec, x0) - fd).max() < 1e-4)

    tau = 0.1
    dcfg = proposal.DriftConfig(2.0, tau)
    score = lambda x: targets.mixture_score(spec, x)
    logp = lambda x: targets.log_density(spec, x)
    barker = sbm.BarkerAcceptance(logp, score, tau, -np.eye(2))
    jvp = proposal.make_jvp(score, "analytic", dcfg, hessian=-np.eye(2))
    pair = proposal.propose(np.zeros((16, 2)), score, dcfg, RngStream(2))
    res = sbm.residual(pair.x, pair.x_prime, barker, score,
                       proposal.proposal_scores(pair, dcfg, jvp))
    checks["barker_residual"] = bool(np.mean(np.sum(res ** 2, axis=1)) < 1e-10)

    init = RngStream(3).generator().standard_normal((8, 2))
    cfg17 = proposal.DriftConfig(1.7, 0.05)
    r1 = samplers.run_fula(init, score, cfg17, 20, RngStream(4))
    r2 = samplers.run_mafla_parallel(init, score, sbm.ConstantAcceptance(1.0),
                                     cfg17, 20, RngStream(4))
    checks["ladder_mafla_fula"] = bool(np.array_equal(r1.trajectory, r2.trajectory))
    r3 = samplers.run_fula(init, score, proposal.DriftConfig(2.0, 0.05), 20,
                           RngStream(5))
    r4 = samplers.run_ula(init, score, 0.05, 20, RngStream(5))
    checks["ladder_fula_ula"] = bool(np.array_equal(r3.trajectory, r4.trajectory))

    t = riesz.riesz_coeffs(0.0, 3)
    checks["riesz_identity"] = bool(
        abs(t.g(0) - 1.0) < 1e-14 and np.abs(t.coeffs).sum() == 1.0)

    with open(os.path.join(outdir, "validate.json"), "w") as fh:
        json.dump(checks, fh, indent=1, sort_keys=True)
    return 0 if all(checks.values()) else 1


_RUNNERS = {
    "mixture2d": _exp_mixture2d,
    "alpha_grid": _exp_alpha_grid,
    "tau_sweep": _exp_tau_sweep,
    "dim_sweep": _exp_dim_sweep,
    "riesz_ablation": _exp_riesz_ablation,
    "lambda_ablation": _exp_lambda_ablation,
    "maxcut": _exp_maxcut,
    "vertex_cover": _exp_vertex_cover,
    "validate": _exp_validate,
}


def run_experiment(cfg: dict) -> int:
    cfg = validate_config(cfg)
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    code = _RUNNERS[cfg["experiment"]](cfg, outdir)
    _write_manifest(outdir, cfg)
    return code


# --- recipes ------------------------------------------------------------------

def recipes() -> dict:
    """Built-in desk-scale config templates, one per study."""
    base_metrics = {"n_reference": 20000, "n_projections": 64, "max_samples": 50000}
    return {
        "mixture2d": {
            "experiment": "mixture2d", "output_dir": "out/mixture2d",
            "seeds": [0, 1, 2, 3, 4], "n_particles": 512, "n_steps": 2000,
            "burn_in_frac": 0.2,
            "target": targets.stable_mixture(
                1.95, [[-3.0, 0.0], [3.0, 0.0]], [0.2, 0.8]).to_json(),
            "samplers": ["fula", "mafla"],
            "drift": {"alpha": 1.95, "tau": 0.3},
            "sbm": {"lambda_alpha": 1.0, "lambda_entropy": 0.01, "epochs": 3000,
                    "batch_size": 256, "lr": 0.003},
            "metrics": base_metrics,
        },
        "alpha_grid": {
            "experiment": "alpha_grid", "output_dir": "out/alpha_grid",
            "seeds": [0, 1], "n_particles": 256, "n_steps": 1500,
            "samplers": ["fula", "mafla"],
            "drift": {"alpha": 1.5, "tau": 0.05},
            "grid": {"alpha_tgt_list": [1.2, 1.5, 1.8],
                     "alpha_prop_list": [1.2, 1.5, 1.8, 2.0]},
            "metrics": base_metrics,
        },
        "tau_sweep": {
            "experiment": "tau_sweep", "output_dir": "out/tau_sweep",
            "seeds": [0, 1, 2], "n_particles": 256, "n_steps": 1500,
            "samplers": ["fula", "mafla"],
            "drift": {"alpha": 1.5, "tau": 0.1},
            "sbm": {"lambda_alpha": 1.0, "lambda_entropy": 0.01, "epochs": 1200,
                    "batch_size": 256, "lr": 0.003},
            "grid": {"tau_list": [0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0]},
            "metrics": base_metrics,
        },
        "dim_sweep": {
            "experiment": "dim_sweep", "output_dir": "out/dim_sweep",
            "seeds": [0, 1, 2], "n_particles": 256, "n_steps": 1500,
            "samplers": ["fula", "mafla"],
            "drift": {"alpha": 1.9, "tau": 0.15},
            "sbm": {"lambda_alpha": 1.0, "lambda_entropy": 0.01, "epochs": 1200,
                    "batch_size": 256, "lr": 0.003},
            "grid": {"dim_list": [8, 12, 16, 20, 24, 28, 32]},
            "metrics": base_metrics,
        },
        "riesz_ablation": {
            "experiment": "riesz_ablation", "output_dir": "out/riesz_ablation",
            "seeds": [0], "n_particles": 256, "n_steps": 2000,
            "drift": {"alpha": 1.5, "tau": 0.05},
            "target": targets.stable_mixture(1.5, [[5.0]], [1.0]).to_json(),
            "grid": {"alpha_tgt_list": [1.2, 1.5, 1.8], "K_list": [0, 1, 3, 5],
                     "h_list": [0.001, 0.01, 0.03, 0.1],
                     "lambda_alpha_list": [0.0], "budget_steps": 100000000},
            "metrics": base_metrics,
        },
        "lambda_ablation": {
            "experiment": "lambda_ablation", "output_dir": "out/lambda_ablation",
            "seeds": [0], "n_particles": 256, "n_steps": 1500,
            "drift": {"alpha": 1.5, "tau": 0.05},
            "target": targets.stable_mixture(1.5, [[5.0]], [1.0]).to_json(),
            "grid": {"K_list": [0, 1], "h_list": [0.01],
                     "lambda_alpha_list": [0.0, 0.5, 1.0, 2.0],
                     "budget_steps": 100000000, "adjusted": True},
            "metrics": base_metrics,
        },
        "maxcut": {
            "experiment": "maxcut", "output_dir": "out/maxcut",
            "seeds": [0], "n_particles": 20, "n_steps": 2000,
            "samplers": ["ula", "fula", "mala", "mafla"],
            "drift": {"alpha": 1.5, "tau": 0.05},
            "graphs": {"families": ["ba", "er"], "n": 64, "n_graphs": 5,
                       "ba_m": 2, "er_p": 0.1, "temperature": 0.5},
            "sbm": {"epochs": 200},
        },
        "vertex_cover": {
            "experiment": "vertex_cover", "output_dir": "out/vertex_cover",
            "seeds": [0], "n_particles": 20, "n_steps": 2000,
            "samplers": ["ula", "fula", "mala", "mafla"],
            "drift": {"alpha": 1.5, "tau": 0.05},
            "graphs": {"families": ["er"], "n": 64, "n_graphs": 5,
                       "temperature": 0.5, "penalty": 2.0},
            "sbm": {"epochs": 200},
        },
        "validate": {
            "experiment": "validate", "output_dir": "out/validate",
        },
    }
