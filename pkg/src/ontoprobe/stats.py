"""Rank correlation and cross-sectional Granger causality.

Spearman's rho is the Pearson correlation of average ranks, with
significance from a seeded permutation test rather than the asymptotic
approximation. The Granger F-test compares a restricted autoregression
of y against one augmented with lagged x, over series ordered by
ascending popularity bucket. Both are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .errors import DegenerateInputError

# Permutations are processed in blocks so a large n_permutations request
# does not materialize one giant matrix.
_PERMUTATION_BLOCK = 65536


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n_permutations: int
    seed: int


@dataclass(frozen=True)
class GrangerResult:
    f_statistic: float
    p_value: float
    lag: int
    n_effective: int
    df: tuple[int, int]


def _as_series(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def spearman(x, y, n_permutations: int = 10000, seed: int = 0) -> CorrelationResult:
    """Spearman rank correlation with a two-sided permutation p-value.

    The p-value uses the add-one formula
    (1 + #{|rho_perm| >= |rho_obs|}) / (1 + n_permutations)
    over seeded permutations of y, so it can never be exactly zero.
    """
    xs = _as_series("x", x)
    ys = _as_series("y", y)
    if len(xs) != len(ys):
        raise ValueError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError("need at least 3 paired observations")
    if n_permutations < 1:
        raise ValueError("n_permutations must be positive")

    rx = scipy_stats.rankdata(xs, method="average")
    ry = scipy_stats.rankdata(ys, method="average")
    xc = rx - rx.mean()
    yc = ry - ry.mean()
    nx = float(np.sqrt(xc @ xc))
    ny = float(np.sqrt(yc @ yc))
    if nx == 0.0 or ny == 0.0:
        raise DegenerateInputError("constant series has no rank variance")
    rho = float((xc @ yc) / (nx * ny))

    # Ranking commutes with permutation, so permuting the centered ranks
    # of y is exactly a permutation test on the raw series.
    rng = np.random.default_rng(seed)
    threshold = abs(rho)
    exceed = 0
    remaining = n_permutations
    while remaining > 0:
        block = min(remaining, _PERMUTATION_BLOCK)
        perms = rng.permuted(np.tile(yc, (block, 1)), axis=1)
        rho_perm = perms @ xc / (nx * ny)
        exceed += int(np.count_nonzero(np.abs(rho_perm) >= threshold))
        remaining -= block
    p_value = (1 + exceed) / (1 + n_permutations)
    return CorrelationResult(rho, p_value, n_permutations, seed)


def _lag_design(series: np.ndarray, lag: int) -> np.ndarray:
    # column i holds the series lagged by i+1 steps, rows t = lag..n-1
    n = len(series)
    return np.column_stack([series[lag - i:n - i] for i in range(1, lag + 1)])


def _ols_rss(design: np.ndarray, target: np.ndarray, column_names: list[str]) -> float:
    if np.linalg.matrix_rank(design) < design.shape[1]:
        rank = 0
        collinear = []
        for j in range(design.shape[1]):
            r = np.linalg.matrix_rank(design[:, : j + 1])
            if r == rank:
                collinear.append(column_names[j])
            rank = r
        raise DegenerateInputError(f"rank-deficient design matrix; collinear columns: {', '.join(collinear)}")
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    residuals = target - design @ beta
    return float(residuals @ residuals)


def granger_f(x, y, lag: int = 3) -> GrangerResult:
    """F-test of whether lagged x improves least-squares prediction of y.

    Restricted model: y_t ~ 1 + y_{t-1..t-lag}. Unrestricted adds
    x_{t-1..t-lag}. F = ((RSS_r - RSS_u)/lag) / (RSS_u/(n_eff - 2*lag - 1))
    with n_eff = n - lag usable rows.
    """
    if lag < 1:
        raise ValueError("lag must be at least 1")
    xs = _as_series("x", x)
    ys = _as_series("y", y)
    if len(xs) != len(ys):
        raise ValueError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    n = len(ys)
    n_effective = n - lag
    df_den = n_effective - 2 * lag - 1
    if df_den < 1:
        raise ValueError(
            f"series too short for lag {lag}: need at least {3 * lag + 2} observations, got {n}"
        )
    if np.ptp(ys) == 0.0:
        raise DegenerateInputError("y is constant")

    target = ys[lag:]
    ones = np.ones((n_effective, 1))
    y_lags = _lag_design(ys, lag)
    x_lags = _lag_design(xs, lag)
    names_r = ["const"] + [f"y_lag{i}" for i in range(1, lag + 1)]
    names_u = names_r + [f"x_lag{i}" for i in range(1, lag + 1)]

    rss_r = _ols_rss(np.hstack([ones, y_lags]), target, names_r)
    rss_u = _ols_rss(np.hstack([ones, y_lags, x_lags]), target, names_u)
    if rss_u <= 0.0:
        raise DegenerateInputError("unrestricted model fits exactly; F-statistic undefined")
    f_statistic = (max(rss_r - rss_u, 0.0) / lag) / (rss_u / df_den)
    p_value = float(scipy_stats.f.sf(f_statistic, lag, df_den))
    return GrangerResult(f_statistic, p_value, lag, n_effective, (lag, df_den))
