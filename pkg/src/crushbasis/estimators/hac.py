"""Heteroskedasticity and autocorrelation consistent covariance."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DataValidationError


def default_lag(n_periods: int) -> int:
    """Newey-West rule of thumb ``floor(4 (T/100)^(2/9))``."""
    return int(math.floor(4 * (n_periods / 100.0) ** (2.0 / 9.0)))


def bartlett_weight(lag: int, max_lag: int) -> float:
    return 1.0 - lag / (max_lag + 1.0)


def _series_bounds(groups, n):
    if groups is None:
        return [(0, n)]
    g = np.asarray(groups)
    if len(g) != n:
        raise DataValidationError("groups must have one entry per observation")
    change = np.flatnonzero(g[1:] != g[:-1]) + 1
    starts = np.r_[0, change]
    ends = np.r_[change, n]
    seen = set()
    for s in starts:
        key = g[s].item() if hasattr(g[s], "item") else g[s]
        if key in seen:
            raise DataValidationError("observations must be contiguous within each group")
        seen.add(key)
    return list(zip(starts, ends))


def hac_meat(X, resid, lag: int, groups=None) -> np.ndarray:
    """Bartlett-weighted long-run covariance of the scores ``x_t e_t``.

    With ``groups`` the lagged cross products are formed only between rows
    of the same group, which must occupy contiguous, time-ordered blocks.
    """
    X = np.asarray(X, dtype=float)
    resid = np.asarray(resid, dtype=float).ravel()
    n = X.shape[0]
    if lag < 0:
        raise DataValidationError("lag must be non-negative")
    bounds = _series_bounds(groups, n)
    longest = max(e - s for s, e in bounds)
    if lag >= longest:
        raise DataValidationError(f"lag {lag} must be smaller than the series length {longest}")
    scores = X * resid[:, None]
    S = scores.T @ scores
    for ell in range(1, lag + 1):
        w = bartlett_weight(ell, lag)
        G = np.zeros_like(S)
        for s, e in bounds:
            if e - s > ell:
                G += scores[s + ell:e].T @ scores[s:e - ell]
        S += w * (G + G.T)
    return S


def newey_west_cov(X, resid, lag: int | None = None, groups=None, xtx_inv=None) -> np.ndarray:
    """Newey-West sandwich ``(X'X)^-1 S (X'X)^-1`` without small-sample scaling.

    ``lag=None`` uses :func:`default_lag` on the longest series. Lag 0
    reproduces the White (HC0) covariance.
    """
    X = np.asarray(X, dtype=float)
    if lag is None:
        longest = max(e - s for s, e in _series_bounds(groups, X.shape[0]))
        lag = default_lag(longest)
    if xtx_inv is None:
        xtx_inv = np.linalg.inv(X.T @ X)
    S = hac_meat(X, resid, lag, groups)
    cov = xtx_inv @ S @ xtx_inv
    return (cov + cov.T) / 2


def white_cov(X, resid, xtx_inv=None) -> np.ndarray:
    """Heteroskedasticity-robust HC0 covariance."""
    X = np.asarray(X, dtype=float)
    resid = np.asarray(resid, dtype=float).ravel()
    if xtx_inv is None:
        xtx_inv = np.linalg.inv(X.T @ X)
    scores = X * resid[:, None]
    meat = scores.T @ scores
    cov = xtx_inv @ meat @ xtx_inv
    return (cov + cov.T) / 2


def cluster_cov(X, resid, clusters, xtx_inv=None, n_params=None) -> np.ndarray:
    """Cluster-robust covariance with the usual finite-sample factor.

    The factor is ``G/(G-1) * (n-1)/(n-k)`` where ``k`` defaults to the
    number of columns of ``X``.
    """
    X = np.asarray(X, dtype=float)
    resid = np.asarray(resid, dtype=float).ravel()
    n, k = X.shape
    k = k if n_params is None else n_params
    if xtx_inv is None:
        xtx_inv = np.linalg.inv(X.T @ X)
    codes, uniq = _factorize(clusters)
    G = len(uniq)
    if G < 2:
        raise DataValidationError("cluster-robust covariance needs at least two clusters")
    scores = np.zeros((G, X.shape[1]))
    np.add.at(scores, codes, X * resid[:, None])
    meat = scores.T @ scores
    factor = G / (G - 1) * (n - 1) / (n - k)
    cov = factor * xtx_inv @ meat @ xtx_inv
    return (cov + cov.T) / 2


def _factorize(values):
    uniq, codes = np.unique(np.asarray(values), return_inverse=True)
    return codes.ravel(), uniq
