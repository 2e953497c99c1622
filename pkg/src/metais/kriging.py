"""Gaussian-process (kriging) surrogate of the performance function.

The surrogate models g as a sample path of a GP with a linear-regression
mean on a small functional basis and a stationary anisotropic
squared-exponential correlation. Fitting profiles the Gaussian
likelihood: for fixed length-scales the regression coefficients and the
process variance have closed forms, and the length-scales are found by
a deterministic multi-start simplex search over a box in log-space.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import (
    ConditioningError,
    ConfigError,
    FitFailure,
    IdentifiabilityError,
    InputError,
)
from .problems import LimitState

DEFAULT_MIN_SEPARATION = 1e-8
# Nugget ladder. The base value is small enough that the predictive std
# at a design point stays below 1e-6 of the process std (it scales like
# sqrt(nugget)); escalation trades that sharpness for factorizability.
NUGGET_START = 1e-13
NUGGET_MAX = 1e-6

_TINY_VARIANCE = 1e-300
_BATCH_ELEMENT_BUDGET = 5_000_000


def correlation(dx, lengths) -> float:
    """Squared-exponential correlation exp(-sum((dx_k / l_k)^2)).

    dx is the coordinate-wise absolute difference |x - x'|; equals 1
    iff dx = 0.
    """
    dx = np.asarray(dx, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths <= 0.0) or not np.all(np.isfinite(lengths)):
        raise ConfigError("length-scales must be positive and finite")
    z = dx / lengths
    return float(np.exp(-np.dot(z, z)))


@dataclass(frozen=True)
class DesignOfExperiments:
    """Paired design points (m x n) and performance observations (m)."""

    points: np.ndarray
    values: np.ndarray
    min_separation: float = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        values = np.asarray(self.values, dtype=float).ravel()
        if points.shape[0] < 2:
            raise InputError("a design needs at least 2 points")
        if values.shape[0] != points.shape[0]:
            raise InputError("points and values length mismatch")
        if not np.all(np.isfinite(points)):
            raise InputError("non-finite design point")
        if not np.all(np.isfinite(values)):
            raise InputError("non-finite observation")
        if _min_pairwise_distance(points) < self.min_separation:
            raise InputError(
                f"two design points closer than min separation {self.min_separation:g}"
            )
        points = points.copy()
        values = values.copy()
        points.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def _min_pairwise_distance(points: np.ndarray) -> float:
    m = points.shape[0]
    if m < 2:
        return math.inf
    d2 = _sq_distances(points, points, np.ones(points.shape[1]))
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def _sq_distances(A: np.ndarray, B: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    d = (A[:, None, :] - B[None, :, :]) / lengths
    return np.einsum("ijk,ijk->ij", d, d)


class RegressionBasis:
    """Ordered basis functions f_1..f_p for the GP mean.

    Each function must accept an (m, n) array of row points and return
    an (m,) array of values.
    """

    def __init__(self, functions: Sequence[Callable[[np.ndarray], np.ndarray]], name: str = ""):
        if len(functions) < 1:
            raise ConfigError("basis needs at least one function")
        self.functions = tuple(functions)
        self.name = name or f"basis[p={len(functions)}]"

    @property
    def size(self) -> int:
        return len(self.functions)

    def design_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([np.asarray(f(X), dtype=float) for f in self.functions])

    def at(self, x: np.ndarray) -> np.ndarray:
        return self.design_matrix(np.asarray(x, dtype=float)[None, :])[0]


def constant_basis() -> RegressionBasis:
    """Ordinary-kriging basis: a single constant function."""
    return RegressionBasis([lambda X: np.ones(X.shape[0])], name="constant")


def linear_basis(dimension: int) -> RegressionBasis:
    """Constant plus all coordinates (p = n + 1)."""
    fns: list[Callable[[np.ndarray], np.ndarray]] = [lambda X: np.ones(X.shape[0])]
    for j in range(dimension):
        fns.append(lambda X, j=j: X[:, j])
    return RegressionBasis(fns, name="linear")


@dataclass(frozen=True)
class Prediction:
    """Gaussian predictive moments at one query point."""

    mean: float
    std: float


class FitGivenLengths(NamedTuple):
    beta: np.ndarray
    process_variance: float
    neg_log_likelihood: float


@dataclass(frozen=True)
class _SolveCache:
    chol: np.ndarray       # lower Cholesky factor of R + nugget I
    r_inv: np.ndarray      # explicit (R + nugget I)^-1, for fast queries
    gamma: np.ndarray      # (R + nugget I)^-1 (y - F beta)
    ft_rinv: np.ndarray    # F^T (R + nugget I)^-1
    s_inv: np.ndarray      # (F^T R^-1 F)^-1


@dataclass(frozen=True)
class _Factorization:
    lengths: np.ndarray
    nugget: float
    beta: np.ndarray
    process_variance: float
    neg_log_likelihood: float
    cache: _SolveCache


def _factorize(
    points: np.ndarray,
    values: np.ndarray,
    F: np.ndarray,
    lengths: np.ndarray,
    nugget_start: float = NUGGET_START,
    nugget_max: float = NUGGET_MAX,
) -> _Factorization:
    m = points.shape[0]
    R0 = np.exp(-_sq_distances(points, points, lengths))
    eye = np.eye(m)
    nugget = nugget_start
    L = None
    while True:
        try:
            L = np.linalg.cholesky(R0 + nugget * eye)
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
            if nugget > nugget_max * (1.0 + 1e-12):
                raise ConditioningError(
                    f"correlation matrix not factorizable up to nugget {nugget_max:g}"
                ) from None
    li_y = solve_triangular(L, values, lower=True, check_finite=False)
    li_f = solve_triangular(L, F, lower=True, check_finite=False)
    S = li_f.T @ li_f
    try:
        s_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError:
        raise ConditioningError("regression normal matrix is singular") from None
    beta = s_inv @ (li_f.T @ li_y)
    resid_white = li_y - li_f @ beta
    s2 = float(resid_white @ resid_white) / m
    s2 = max(s2, 0.0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    nll = 0.5 * m * math.log(max(s2, _TINY_VARIANCE)) + 0.5 * log_det

    resid = values - F @ beta
    z = solve_triangular(L, resid, lower=True, check_finite=False)
    gamma = solve_triangular(L.T, z, lower=False, check_finite=False)
    r_inv = cho_solve((L, True), eye, check_finite=False)
    cache = _SolveCache(chol=L, r_inv=r_inv, gamma=gamma, ft_rinv=F.T @ r_inv, s_inv=s_inv)
    return _Factorization(
        lengths=lengths.copy(),
        nugget=nugget,
        beta=beta,
        process_variance=s2,
        neg_log_likelihood=nll,
        cache=cache,
    )


def _check_basis(basis: RegressionBasis, m: int) -> None:
    if basis.size > m - 1:
        raise IdentifiabilityError(
            f"basis size {basis.size} too large for {m} design points"
        )


def fit_given_lengths(
    doe: DesignOfExperiments,
    basis: RegressionBasis,
    lengths,
) -> FitGivenLengths:
    """Closed-form GLS coefficients, process variance and profiled
    negative log-likelihood (up to an additive constant) at fixed
    length-scales."""
    lengths = _check_lengths(lengths, doe.dimension)
    _check_basis(basis, doe.size)
    F = basis.design_matrix(doe.points)
    fact = _factorize(doe.points, doe.values, F, lengths)
    return FitGivenLengths(fact.beta, fact.process_variance, fact.neg_log_likelihood)


def _check_lengths(lengths, dimension: int) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim == 0:
        lengths = np.full(dimension, float(lengths))
    if lengths.shape != (dimension,):
        raise ConfigError(f"expected {dimension} length-scales")
    if np.any(lengths <= 0.0) or not np.all(np.isfinite(lengths)):
        raise ConfigError("length-scales must be positive and finite")
    return lengths


def default_length_bounds(points: np.ndarray) -> np.ndarray:
    """Scale-free box [1e-2 L, 10 L] from the per-coordinate range L."""
    span = points.max(axis=0) - points.min(axis=0)
    span = np.where(span > 0.0, span, 1.0)
    return np.column_stack([1e-2 * span, 10.0 * span])


# Deterministic start lattice along the diagonal of the log-space box.
_PROBE_FRACTIONS = np.linspace(0.05, 0.95, 11)
_N_SIMPLEX_STARTS = 3


@dataclass(frozen=True)
class KrigingModel:
    """Fitted GP surrogate; immutable, safe to share across threads."""

    doe: DesignOfExperiments
    basis: RegressionBasis
    lengths: np.ndarray
    process_variance: float
    beta: np.ndarray
    nugget: float
    neg_log_likelihood: float
    length_bounds: np.ndarray
    cache: _SolveCache = field(repr=False)

    def __post_init__(self):
        for name in ("lengths", "beta", "length_bounds"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dimension(self) -> int:
        return self.doe.dimension

    @property
    def process_std(self) -> float:
        return math.sqrt(self.process_variance)

    def predict(self, x) -> Prediction:
        """Predictive mean and std at one point (std clamped at 0)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise InputError(f"expected a point of dimension {self.dimension}")
        if not np.all(np.isfinite(x)):
            raise InputError("non-finite query point")
        c = self.cache
        z = (x - self.doe.points) / self.lengths
        r = np.exp(-np.einsum("ij,ij->i", z, z))
        f = self.basis.at(x)
        mean = float(f @ self.beta + r @ c.gamma)
        w = c.r_inv @ r
        u = c.ft_rinv @ r - f
        var = self.process_variance * (1.0 - float(r @ w) + float(u @ (c.s_inv @ u)))
        return Prediction(mean=mean, std=math.sqrt(max(var, 0.0)))

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized predict over rows of X; returns (means, stds)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise InputError(f"expected points of dimension {self.dimension}")
        c = self.cache
        m = self.doe.size
        chunk = max(1, _BATCH_ELEMENT_BUDGET // (m * self.dimension))
        means = np.empty(X.shape[0])
        variances = np.empty(X.shape[0])
        for lo in range(0, X.shape[0], chunk):
            B = X[lo:lo + chunk]
            r = np.exp(-_sq_distances(B, self.doe.points, self.lengths))
            Fq = self.basis.design_matrix(B)
            means[lo:lo + chunk] = Fq @ self.beta + r @ c.gamma
            rw = np.einsum("ij,ij->i", r, r @ c.r_inv)
            U = r @ c.ft_rinv.T - Fq
            q = np.einsum("ij,ij->i", U, U @ c.s_inv)
            variances[lo:lo + chunk] = self.process_variance * (1.0 - rw + q)
        return means, np.sqrt(np.clip(variances, 0.0, None))


def fit(
    doe: DesignOfExperiments,
    basis: RegressionBasis | None = None,
    bounds=None,
) -> KrigingModel:
    """Fit the surrogate: profile-likelihood search for the length-scales
    over a box, then closed-form coefficients and variance.

    The search is a fixed diagonal probe lattice followed by bounded
    Nelder-Mead from the best starts; it is deterministic, and the
    returned likelihood is the best over every candidate probed.
    """
    basis = basis if basis is not None else constant_basis()
    _check_basis(basis, doe.size)
    F = basis.design_matrix(doe.points)
    if bounds is None:
        bounds = default_length_bounds(doe.points)
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (doe.dimension, 2):
        raise ConfigError(f"bounds must have shape ({doe.dimension}, 2)")
    if np.any(bounds <= 0.0) or np.any(bounds[:, 0] > bounds[:, 1]):
        raise ConfigError("bounds must be positive with lower <= upper")

    log_lo = np.log(bounds[:, 0])
    log_hi = np.log(bounds[:, 1])
    best: dict = {"nll": math.inf, "fact": None}

    def objective(log_l: np.ndarray) -> float:
        log_l = np.clip(log_l, log_lo, log_hi)
        try:
            fact = _factorize(doe.points, doe.values, F, np.exp(log_l))
        except ConditioningError:
            return math.inf
        if fact.neg_log_likelihood < best["nll"]:
            best["nll"] = fact.neg_log_likelihood
            best["fact"] = fact
        return fact.neg_log_likelihood

    probes = [log_lo + f * (log_hi - log_lo) for f in _PROBE_FRACTIONS]
    probe_vals = np.array([objective(p) for p in probes])

    if not np.all(log_hi == log_lo):
        order = np.argsort(probe_vals)
        starts = [probes[i] for i in order[:_N_SIMPLEX_STARTS] if np.isfinite(probe_vals[i])]
        n = doe.dimension
        for start in starts:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                minimize(
                    objective,
                    start,
                    method="Nelder-Mead",
                    bounds=list(zip(log_lo, log_hi)),
                    options={
                        "maxiter": 200 + 80 * n,
                        "maxfev": 200 + 80 * n,
                        "xatol": 1e-2,
                        "fatol": 1e-4,
                    },
                )

    if best["fact"] is None:
        raise FitFailure("no candidate length-scale was factorizable")
    fact = best["fact"]
    return KrigingModel(
        doe=doe,
        basis=basis,
        lengths=fact.lengths,
        process_variance=fact.process_variance,
        beta=fact.beta,
        nugget=fact.nugget,
        neg_log_likelihood=fact.neg_log_likelihood,
        length_bounds=bounds,
        cache=fact.cache,
    )


def add_points(model: KrigingModel, new_points, new_values) -> KrigingModel:
    """Full refit on the union design.

    New points closer than the design's min separation (to the existing
    design or to an earlier accepted newcomer) are dropped with a
    warning; if nothing survives the original model is returned.
    """
    new_points = np.atleast_2d(np.asarray(new_points, dtype=float))
    new_values = np.asarray(new_values, dtype=float).ravel()
    if new_points.shape[0] == 0:
        return fit(model.doe, model.basis, model.length_bounds)
    if new_points.shape[1] != model.dimension:
        raise InputError(f"expected points of dimension {model.dimension}")
    if new_points.shape[0] != new_values.shape[0]:
        raise InputError("points and values length mismatch")

    doe = model.doe
    kept_p: list[np.ndarray] = []
    kept_v: list[float] = []
    existing = doe.points
    for p, v in zip(new_points, new_values):
        against = existing if not kept_p else np.vstack([existing, kept_p])
        if np.sqrt(((against - p) ** 2).sum(axis=1)).min() < doe.min_separation:
            continue
        kept_p.append(p)
        kept_v.append(float(v))
    dropped = new_points.shape[0] - len(kept_p)
    if dropped:
        warnings.warn(
            f"dropped {dropped} of {new_points.shape[0]} new points within "
            f"min separation {doe.min_separation:g}",
            stacklevel=2,
        )
    if not kept_p:
        return model
    union = DesignOfExperiments(
        points=np.vstack([doe.points, kept_p]),
        values=np.concatenate([doe.values, kept_v]),
        min_separation=doe.min_separation,
    )
    return fit(union, model.basis, None)


class ExactSurrogate:
    """Zero-spread stand-in surrogate: mean equals the wrapped function.

    Exposes the same query surface as KrigingModel. The probabilistic
    classification collapses to the true failure indicator and the
    importance-sampling correction factor degenerates to exactly 1.
    """

    def __init__(self, fn, dimension: int, batch_fn=None, process_std: float = 1.0):
        self._fn = fn
        self._batch_fn = batch_fn
        self.dimension = int(dimension)
        self.process_std = float(process_std)
        self.process_variance = self.process_std ** 2

    @classmethod
    def from_limit_state(cls, ls: LimitState) -> "ExactSurrogate":
        """Wrap a limit state without spending its evaluation budget."""
        return cls(ls.raw_fn, ls.dimension, batch_fn=ls.raw_batch_fn)

    def predict(self, x) -> Prediction:
        x = np.asarray(x, dtype=float)
        return Prediction(mean=float(self._fn(x)), std=0.0)

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._batch_fn is not None:
            means = np.asarray(self._batch_fn(X), dtype=float)
        else:
            means = np.array([float(self._fn(row)) for row in X])
        return means, np.zeros(X.shape[0])


def doe_to_csv(doe: DesignOfExperiments, path) -> None:
    """Write the design as CSV: columns x1..xn then g, with a header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(doe.dimension)] + ["g"])
        for p, v in zip(doe.points, doe.values):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def doe_from_csv(path, min_separation: float = DEFAULT_MIN_SEPARATION) -> DesignOfExperiments:
    """Read a design written by doe_to_csv (header row required)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path}: expected a header row and data rows")
    header = rows[0]
    if len(header) < 2:
        raise InputError(f"{path}: expected n input columns plus one value column")
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise InputError(f"{path}: missing header row")
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    return DesignOfExperiments(
        points=data[:, :-1], values=data[:, -1], min_separation=min_separation
    )
