"""Heavy-tailed MCMC toolkit built around alpha-stable Langevin proposals,
score-based Metropolis corrections, and combinatorial-optimization targets."""

__version__ = "0.1.0"

from .rng import RngStream
from .errors import CapabilityError, NumericError, ParameterError

from . import autodiff, combopt, metrics, nets, proposal, riesz, samplers, sbm, stable, targets  # noqa: E402,F401

__all__ = ["RngStream", "CapabilityError", "NumericError", "ParameterError",
           "autodiff", "combopt", "metrics", "nets", "proposal", "riesz",
           "samplers", "sbm", "stable", "targets", "__version__"]
