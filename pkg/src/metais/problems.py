"""Limit-state problems posed in standard normal space.

A problem is a scalar performance function g over R^n; failure is the
event g(x) <= 0. All benchmark problems take independent standard
Gaussian inputs, so the input density is the joint standard normal.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError

LOG_2PI = math.log(2.0 * math.pi)


class LimitState:
    """Performance function with an evaluation counter.

    The counter is the true model budget: it increases by one per
    evaluated point and may be bumped from concurrent threads. The
    function itself must be deterministic.
    """

    def __init__(
        self,
        name: str,
        dimension: int,
        fn: Callable[[np.ndarray], float],
        batch_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        if dimension < 1:
            raise InputError(f"dimension must be positive, got {dimension}")
        self.name = name
        self.dimension = int(dimension)
        self._fn = fn
        self._batch_fn = batch_fn
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    @property
    def raw_fn(self) -> Callable[[np.ndarray], float]:
        """The underlying function; calls bypass the budget counter."""
        return self._fn

    @property
    def raw_batch_fn(self) -> Callable[[np.ndarray], np.ndarray] | None:
        return self._batch_fn

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise InputError(
                f"{self.name}: expected dimension {self.dimension}, got {x.shape[-1]}"
            )
        if not np.all(np.isfinite(x)):
            raise InputError(f"{self.name}: non-finite coordinate in input")
        return x

    def evaluate(self, x) -> float:
        """Evaluate g at one point and count one model call."""
        x = self._check(np.atleast_1d(x))
        if x.ndim != 1:
            raise InputError(f"{self.name}: evaluate expects a single point")
        value = float(self._fn(x))
        with self._lock:
            self._count += 1
        return value

    def evaluate_batch(self, X) -> np.ndarray:
        """Evaluate g at the rows of X; counts one call per row."""
        X = self._check(np.atleast_2d(X))
        if self._batch_fn is not None:
            values = np.asarray(self._batch_fn(X), dtype=float)
        else:
            values = np.array([float(self._fn(row)) for row in X])
        with self._lock:
            self._count += X.shape[0]
        return values


@dataclass(frozen=True)
class StandardGaussianSpace:
    """Joint standard normal input space of a given dimension."""

    dimension: int

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise InputError(
                f"expected dimension {self.dimension}, got {x.shape[-1]}"
            )
        return x

    def log_density(self, x) -> float:
        """log phi_n(x) = -n/2 log(2 pi) - ||x||^2 / 2."""
        x = self._check(x)
        return float(-0.5 * self.dimension * LOG_2PI - 0.5 * np.dot(x, x))

    def log_density_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(self._check(X))
        return -0.5 * self.dimension * LOG_2PI - 0.5 * (X * X).sum(axis=1)

    def density(self, x) -> float:
        return math.exp(self.log_density(x))


@dataclass(frozen=True)
class OracleReference:
    """A recorded brute-force reference for a benchmark failure probability."""

    pf: float
    cov: float
    n_samples: int
    seed: int

    @property
    def std_error(self) -> float:
        return self.pf * self.cov


# One-time 10^7-sample crude Monte Carlo references, regenerable with
# scripts/compute_oracles.py. The parabola value agrees with a 1-D
# quadrature of E[Phi(0.5 (t-0.1)^2 - 5)] (3.0163e-3) within one
# standard error.
ORACLE_PF: dict[str, OracleReference] = {
    "parabola2d": OracleReference(pf=3.0029e-03, cov=0.005762, n_samples=10_000_000, seed=20260809),
    "quad20": OracleReference(pf=1.2880e-04, cov=0.027862, n_samples=10_000_000, seed=20260810),
}


def make_parabola2d(b: float = 5.0, kappa: float = 0.5, e: float = 0.1) -> LimitState:
    """Concave parabolic limit state g(x1, x2) = b - x2 - kappa (x1 - e)^2."""

    def fn(x):
        return b - x[1] - kappa * (x[0] - e) ** 2

    def batch_fn(X):
        return b - X[:, 1] - kappa * (X[:, 0] - e) ** 2

    return LimitState("parabola2d", 2, fn, batch_fn)


def make_linear(beta: float = 3.0, dimension: int = 2) -> LimitState:
    """Affine limit state g(u) = beta - u1; exact pf is Phi(-beta)."""

    def fn(x):
        return beta - x[0]

    def batch_fn(X):
        return beta - X[:, 0]

    return LimitState("linear", dimension, fn, batch_fn)


def make_quad20(b: float = 4.0, gamma: float = 0.5) -> LimitState:
    """20-dimensional smooth limit state, linear drift plus radial quadratic.

    g(u) = b - sum(u)/sqrt(n) - gamma/n (||u||^2 - n). With the default
    constants the failure probability is 1.288e-4 (see ORACLE_PF), a
    cheap stand-in for expensive high-dimensional models.
    """
    n = 20

    def fn(x):
        return b - x.sum() / math.sqrt(n) - gamma / n * (np.dot(x, x) - n)

    def batch_fn(X):
        return b - X.sum(axis=1) / math.sqrt(n) - gamma / n * ((X * X).sum(axis=1) - n)

    return LimitState("quad20", n, fn, batch_fn)


_REGISTRY: dict[str, Callable[..., LimitState]] = {
    "parabola2d": make_parabola2d,
    "linear": make_linear,
    "quad20": make_quad20,
}


def register_problem(name: str, factory: Callable[..., LimitState]) -> None:
    """Register a custom limit-state factory under a selectable name."""
    _REGISTRY[name] = factory


def make_problem(name: str, **params) -> LimitState:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise InputError(
            f"unknown problem {name!r}; known: {sorted(_REGISTRY)}"
        ) from None
    return factory(**params)


def benchmark_catalog() -> list[LimitState]:
    """Fresh instances of all built-in benchmark problems."""
    return [make_parabola2d(), make_linear(), make_quad20()]
