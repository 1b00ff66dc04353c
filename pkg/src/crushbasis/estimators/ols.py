"""Least squares through a pivoted QR decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from ..errors import DataValidationError, SingularDesignError

RANK_TOL = 1e-10


@dataclass
class OLSFit:
    coef: np.ndarray
    resid: np.ndarray
    cov: np.ndarray
    xtx_inv: np.ndarray
    labels: list
    n_obs: int

    @property
    def dof_resid(self) -> int:
        return self.n_obs - len(self.coef)

    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def _as_design(X, labels):
    if isinstance(X, pd.DataFrame):
        labels = list(X.columns) if labels is None else list(labels)
        X = X.to_numpy(dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if labels is None:
        labels = [f"x{i}" for i in range(X.shape[1])]
    if len(labels) != X.shape[1]:
        raise DataValidationError("one label per design column is required")
    return X, list(labels)


def ols(X, y, labels=None) -> OLSFit:
    """Ordinary least squares.

    ``X`` may be an array or a DataFrame (column names become labels).
    Rank is judged from the pivoted R factor; columns found dependent are
    reported by label in :class:`SingularDesignError`. The covariance is
    the conventional ``s^2 (X'X)^-1`` with ``s^2 = RSS / (n - k)``.
    """
    X, labels = _as_design(X, labels)
    y = np.asarray(y, dtype=float).ravel()
    n, k = X.shape
    if len(y) != n:
        raise DataValidationError("X and y have different numbers of rows")
    if n <= k:
        raise DataValidationError(f"need more observations than regressors (n={n}, k={k})")

    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int((diag > RANK_TOL * scale).sum())
    if rank < k:
        raise SingularDesignError([labels[j] for j in sorted(piv[rank:])])

    coef_p = scipy.linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(k)
    coef[piv] = coef_p
    resid = y - X @ coef
    r_inv = scipy.linalg.solve_triangular(R, np.eye(k))
    xtx_inv_p = r_inv @ r_inv.T
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_p
    s2 = resid @ resid / (n - k)
    return OLSFit(coef, resid, s2 * xtx_inv, xtx_inv, labels, n)
