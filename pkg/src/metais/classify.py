"""Probabilistic classification built on the surrogate prediction.

At a point x the surrogate prediction is Gaussian with moments
(mu(x), sigma(x)), so the chance that the predicted performance is
non-positive, and the chance that its sign is still uncertain at a
given confidence multiplier, both have closed forms in the normal CDF.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, InputError

# Predictions with std below this fraction of the process std are
# treated as noiseless: classification falls back to the sign of the mean.
SIGMA_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class MarginSpec:
    """Confidence multiplier k bounding the margin |prediction| <= k sigma."""

    k: float = 1.959964  # central 95% band

    def __post_init__(self):
        if not self.k > 0.0:
            raise ConfigError(f"margin multiplier must be positive, got {self.k}")


def _sigma_floor(model) -> float:
    return SIGMA_FLOOR_REL * model.process_std


def prob_failure(model, x) -> float:
    """Probability that the prediction at x is <= 0.

    Noiseless points (std at or below the floor) classify
    deterministically: 1 if the mean is <= 0, else 0.
    """
    p = model.predict(x)
    if p.std <= _sigma_floor(model):
        return 1.0 if p.mean <= 0.0 else 0.0
    return float(ndtr(-p.mean / p.std))


def prob_failure_batch(model, X) -> np.ndarray:
    means, stds = model.predict_batch(X)
    floor = _sigma_floor(model)
    live = stds > floor
    out = np.where(means <= 0.0, 1.0, 0.0)
    out[live] = ndtr(-means[live] / stds[live])
    return out


def prob_in_margin(model, x, spec: MarginSpec = MarginSpec()) -> float:
    """Probability that x lies in the sign-uncertainty margin.

    Phi(k - mu/sigma) - Phi(-k - mu/sigma); 0 at noiseless points,
    which are confidently classified.
    """
    p = model.predict(x)
    if p.std <= _sigma_floor(model):
        return 0.0
    z = p.mean / p.std
    return float(ndtr(spec.k - z) - ndtr(-spec.k - z))


def prob_in_margin_batch(model, X, spec: MarginSpec = MarginSpec()) -> np.ndarray:
    means, stds = model.predict_batch(X)
    floor = _sigma_floor(model)
    live = stds > floor
    out = np.zeros(X.shape[0] if X.ndim == 2 else 1)
    z = means[live] / stds[live]
    out[live] = ndtr(spec.k - z) - ndtr(-spec.k - z)
    return out


def mean_sign_classify(model, x) -> str:
    """Deterministic surrogate classification: 'fail' iff the mean
    prediction is <= 0 (ties go to the failure side)."""
    return "fail" if model.predict(x).mean <= 0.0 else "safe"


def export_classification_grid(model, path, x1, x2, spec: MarginSpec = MarginSpec()) -> None:
    """Tabulate the classification over a 2-D grid as CSV.

    Rows iterate x2 fastest. Columns: x1, x2, mu, sigma, prob_failure,
    prob_in_margin. Only defined for two-dimensional models.
    """
    if model.dimension != 2:
        raise InputError("classification grid export needs a 2-D model")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    G1, G2 = np.meshgrid(x1, x2, indexing="ij")
    points = np.column_stack([G1.ravel(), G2.ravel()])
    means, stds = model.predict_batch(points)
    floor = _sigma_floor(model)
    live = stds > floor
    pf = np.where(means <= 0.0, 1.0, 0.0)
    pm = np.zeros_like(means)
    z = means[live] / stds[live]
    pf[live] = ndtr(-z)
    pm[live] = ndtr(spec.k - z) - ndtr(-spec.k - z)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "mu", "sigma", "prob_failure", "prob_in_margin"])
        for row in zip(points[:, 0], points[:, 1], means, stds, pf, pm):
            writer.writerow([repr(float(v)) for v in row])
