"""Slice sampling over unnormalized log-densities on R^n.

Univariate slice updates with stepping-out and shrinkage, applied to
each coordinate in order within an iteration. Only a log-density up to
an additive constant is needed; -inf encodes zero density, so indicator
supports confine the chain exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, InputError, SamplerStallError

_MAX_SHRINK = 1000


@dataclass(frozen=True)
class UnnormalizedTarget:
    """Log-density up to an additive constant, -inf where it vanishes."""

    log_density: Callable[[np.ndarray], float]
    dimension: int


@dataclass(frozen=True)
class ChainConfig:
    n_samples: int
    initial_point: np.ndarray
    burn_in: int = 1000
    thinning: int = 5
    step_width: float | np.ndarray = 1.0
    max_step_out: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")
        if self.thinning < 1:
            raise ConfigError("thinning must be positive")
        if self.max_step_out < 1:
            raise ConfigError("max_step_out must be positive")
        x0 = np.asarray(self.initial_point, dtype=float).ravel().copy()
        if not np.all(np.isfinite(x0)):
            raise ConfigError("initial point must be finite")
        x0.flags.writeable = False
        object.__setattr__(self, "initial_point", x0)
        w = np.asarray(self.step_width, dtype=float)
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ConfigError("step widths must be positive and finite")


@dataclass
class ChainDiagnostics:
    """Bookkeeping for one chain run."""

    kept: int = 0
    target_evals: int = 0
    step_out_limit_hits: int = 0
    sweeps: int = 0

    def as_dict(self) -> dict:
        return {
            "kept": self.kept,
            "target_evals": self.target_evals,
            "step_out_limit_hits": self.step_out_limit_hits,
            "sweeps": self.sweeps,
        }


def run_chain(target: UnnormalizedTarget, config: ChainConfig) -> tuple[np.ndarray, ChainDiagnostics]:
    """Run the chain; returns kept draws (n_samples x n) and diagnostics.

    Deterministic for a fixed seed. Burn-in sweeps are discarded, then
    every thinning-th sweep is recorded.
    """
    n = target.dimension
    x = np.array(config.initial_point, dtype=float)
    if x.shape != (n,):
        raise InputError(f"initial point must have dimension {n}")
    w = np.broadcast_to(np.asarray(config.step_width, dtype=float), (n,))
    diag = ChainDiagnostics()
    logf = target.log_density

    log_px = logf(x)
    diag.target_evals += 1
    if not math.isfinite(log_px):
        raise InputError("initial point has vanishing target density")

    rng = np.random.default_rng(config.seed)
    out = np.empty((config.n_samples, n))
    kept = 0
    total_sweeps = config.burn_in + config.n_samples * config.thinning

    for sweep in range(total_sweeps):
        for d in range(n):
            u = rng.random()
            log_slice = log_px + (math.log(u) if u > 0.0 else -math.inf)
            r = rng.random()
            left = x[d] - r * w[d]
            right = x[d] + (1.0 - r) * w[d]
            xd = x[d]

            steps = config.max_step_out
            while steps > 0:
                x[d] = left
                diag.target_evals += 1
                if logf(x) <= log_slice:
                    break
                left -= w[d]
                steps -= 1
            else:
                diag.step_out_limit_hits += 1
            steps = config.max_step_out
            while steps > 0:
                x[d] = right
                diag.target_evals += 1
                if logf(x) <= log_slice:
                    break
                right += w[d]
                steps -= 1
            else:
                diag.step_out_limit_hits += 1

            for _ in range(_MAX_SHRINK):
                cand = left + rng.random() * (right - left)
                x[d] = cand
                diag.target_evals += 1
                log_cand = logf(x)
                if log_cand > log_slice:
                    log_px = log_cand
                    break
                if cand < xd:
                    left = cand
                elif cand > xd:
                    right = cand
                else:
                    raise SamplerStallError("slice shrank onto the current point")
            else:
                raise SamplerStallError(
                    f"no acceptable point after {_MAX_SHRINK} shrinkage steps"
                )
        diag.sweeps += 1
        if sweep >= config.burn_in and (sweep - config.burn_in + 1) % config.thinning == 0:
            out[kept] = x
            kept += 1
    diag.kept = kept
    return out, diag


def slice_sample(target: UnnormalizedTarget, config: ChainConfig) -> np.ndarray:
    """Kept draws only; see run_chain for diagnostics."""
    draws, _ = run_chain(target, config)
    return draws
