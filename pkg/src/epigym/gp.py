"""Gaussian-process surrogate: squared-exponential kernel, Cholesky fit, UCB score.

Targets are standardized (zero mean, unit scale) before fitting, so the
default hyperparameter grid can fix the signal variance at 1. Predictions are
de-standardized on the way out. All solves go through one Cholesky
factorization of K + noise*I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import DimMismatch, NotPositiveDefinite

#: relative jitter floor applied to the noise variance
JITTER_FLOOR = 1e-9

DEFAULT_LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)
DEFAULT_NOISE_GRID = (1e-6, 1e-4, 1e-2)


@dataclass(frozen=True)
class GPHyperparams:
    """Kernel hyperparameters; noise is clamped up to the jitter floor."""

    signal_variance: float
    length_scales: tuple[float, ...]
    noise_variance: float

    def __post_init__(self):
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if not self.length_scales or any(ls <= 0 for ls in self.length_scales):
            raise ValueError("length_scales must be positive")
        object.__setattr__(self, "length_scales", tuple(float(ls) for ls in self.length_scales))
        floor = JITTER_FLOOR * self.signal_variance
        if self.noise_variance < floor:
            object.__setattr__(self, "noise_variance", floor)

    @property
    def dims(self) -> int:
        return len(self.length_scales)


def default_hyper_grid(dims: int) -> list[GPHyperparams]:
    """Small deterministic grid: shared length scale, unit signal, three noise levels."""
    return [
        GPHyperparams(signal_variance=1.0, length_scales=(ls,) * dims, noise_variance=nv)
        for ls in DEFAULT_LENGTH_SCALE_GRID
        for nv in DEFAULT_NOISE_GRID
    ]


def default_hyperparams(dims: int) -> GPHyperparams:
    """Prior used before there is enough data to run the grid search."""
    return GPHyperparams(signal_variance=1.0, length_scales=(0.2,) * dims,
                         noise_variance=1e-4)


def kernel(x1, x2, hyper: GPHyperparams) -> float:
    """Squared-exponential covariance with per-dimension length scales."""
    a = np.asarray(x1, dtype=float)
    b = np.asarray(x2, dtype=float)
    if a.shape != b.shape or a.shape != (hyper.dims,):
        raise DimMismatch(f"expected two vectors of dim {hyper.dims}")
    z = (a - b) / np.asarray(hyper.length_scales)
    return hyper.signal_variance * math.exp(-0.5 * float(z @ z))


def kernel_matrix(x1: np.ndarray, x2: np.ndarray, hyper: GPHyperparams) -> np.ndarray:
    """Cross-covariance between two sets of rows."""
    a = np.atleast_2d(np.asarray(x1, dtype=float)) / hyper.length_scales
    b = np.atleast_2d(np.asarray(x2, dtype=float)) / hyper.length_scales
    if a.shape[1] != hyper.dims or b.shape[1] != hyper.dims:
        raise DimMismatch(f"rows must have dim {hyper.dims}")
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    return hyper.signal_variance * np.exp(-0.5 * np.maximum(sq, 0.0))


@dataclass
class GPPosterior:
    """Cholesky-form posterior over standardized targets."""

    training_inputs: np.ndarray
    training_targets: np.ndarray  # standardized
    cholesky_factor: np.ndarray  # lower triangular
    alpha_weights: np.ndarray
    hyper: GPHyperparams  # noise reflects any jitter escalation applied
    target_mean: float
    target_scale: float

    @property
    def n(self) -> int:
        return self.training_inputs.shape[0]


def _standardize(targets: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(targets))
    scale = float(np.std(targets)) if targets.size > 1 else 0.0
    if scale <= 0.0:
        scale = 1.0
    return (targets - mean) / scale, mean, scale


def _factorize(inputs: np.ndarray, hyper: GPHyperparams) -> tuple[np.ndarray, GPHyperparams]:
    """Cholesky of K + noise*I with one x10 jitter escalation before failing."""
    base = kernel_matrix(inputs, inputs, hyper)
    n = inputs.shape[0]
    noise = hyper.noise_variance
    for attempt in range(2):
        try:
            lower = cholesky(base + noise * np.eye(n), lower=True)
            return lower, replace(hyper, noise_variance=noise)
        except np.linalg.LinAlgError:
            if attempt == 0:
                noise *= 10.0
    raise NotPositiveDefinite(
        f"kernel matrix not positive definite (n={n}, noise={hyper.noise_variance:g})")


def gp_fit(inputs, targets, hyper: GPHyperparams) -> GPPosterior:
    """Standardize targets, factor K + noise*I, and precompute the solve weights."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] != y.shape[0] or x.shape[0] < 1:
        raise ValueError("inputs and targets must agree on n >= 1")
    if x.shape[1] != hyper.dims:
        raise DimMismatch(f"inputs have dim {x.shape[1]}, hyperparams expect {hyper.dims}")
    y_std, mean, scale = _standardize(y)
    lower, used = _factorize(x, hyper)
    alpha = cho_solve((lower, True), y_std)
    return GPPosterior(training_inputs=x, training_targets=y_std, cholesky_factor=lower,
                       alpha_weights=alpha, hyper=used, target_mean=mean, target_scale=scale)


def gp_predict_batch(post: GPPosterior, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (reward units) at each query row."""
    q = np.atleast_2d(np.asarray(xs, dtype=float))
    if q.shape[1] != post.hyper.dims:
        raise DimMismatch(f"query dim {q.shape[1]} != {post.hyper.dims}")
    k_star = kernel_matrix(post.training_inputs, q, post.hyper)  # n x m
    mean_std = k_star.T @ post.alpha_weights
    v = solve_triangular(post.cholesky_factor, k_star, lower=True)
    var_std = post.hyper.signal_variance - np.sum(v * v, axis=0)
    var_std = np.maximum(var_std, 0.0)
    mean = post.target_mean + post.target_scale * mean_std
    var = post.target_scale ** 2 * var_std
    return mean, var


def gp_predict(post: GPPosterior, x) -> tuple[float, float]:
    """Mean and variance at a single query point."""
    mean, var = gp_predict_batch(post, np.asarray(x, dtype=float)[None, :])
    return float(mean[0]), float(var[0])


def ucb_acquisition(post: GPPosterior, x, ucb_beta: float) -> float:
    """Upper confidence bound: mean + sqrt(ucb_beta * variance)."""
    mean, var = gp_predict(post, x)
    return mean + math.sqrt(ucb_beta * var)


def ucb_batch(post: GPPosterior, xs: np.ndarray, ucb_beta: float) -> np.ndarray:
    mean, var = gp_predict_batch(post, xs)
    return mean + np.sqrt(ucb_beta * var)


def log_marginal_likelihood(inputs, targets_std, hyper: GPHyperparams) -> float:
    """Log evidence of standardized targets under the GP prior."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets_std, dtype=float).ravel()
    lower, _ = _factorize(x, hyper)
    alpha = cho_solve((lower, True), y)
    n = y.shape[0]
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(lower))) - 0.5 * n * math.log(2 * math.pi))


def fit_hyperparams(inputs, targets, grid) -> GPHyperparams:
    """Grid-search the log marginal likelihood; earliest grid index wins ties.

    Grid points whose kernel matrix cannot be factorized are skipped; it is an
    error only if every point fails.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("hyperparameter grid is empty")
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] < 2:
        raise ValueError("need n >= 2 observations to select hyperparameters")
    y_std, _, _ = _standardize(y)
    best: GPHyperparams | None = None
    best_lml = -math.inf
    failures = 0
    for hyper in grid:
        try:
            lml = log_marginal_likelihood(x, y_std, hyper)
        except NotPositiveDefinite:
            failures += 1
            continue
        if lml > best_lml:
            best_lml = lml
            best = hyper
    if best is None:
        raise NotPositiveDefinite(f"all {failures} grid points failed to factorize")
    return best
