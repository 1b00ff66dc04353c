"""Brute-force reference solutions shared by the estimator tests."""

import itertools

import numpy as np


def simplex_grid(n: int, step: float = 0.01) -> np.ndarray:
    """All points of the probability simplex in R^n on a lattice of ``step``."""
    k = int(round(1 / step))
    if n == 1:
        return np.ones((1, 1))
    axes = np.meshgrid(*[np.arange(k + 1)] * (n - 1), indexing="ij")
    head = np.stack([a.ravel() for a in axes], axis=1)
    head = head[head.sum(axis=1) <= k]
    return np.column_stack([head, k - head.sum(axis=1)]) / k


def unit_objective(W: np.ndarray, Y: np.ndarray, ybar: np.ndarray, zeta: float) -> np.ndarray:
    """Unit-weight objective with the best intercept, for each row of ``W``.

    ``sum_t (w0 + w . Y[:, t] - ybar_t)^2 + zeta^2 T ||w||^2`` minimised
    over ``w0`` in closed form (w0 = mean of the fitted gap).
    """
    fitted = W @ Y  # (points, T)
    gap = ybar[None, :] - fitted
    w0 = gap.mean(axis=1, keepdims=True)
    return ((w0 - gap) ** 2).sum(axis=1) + zeta**2 * Y.shape[1] * (W**2).sum(axis=1)


def kkt_enumeration(A: np.ndarray, b: np.ndarray, eta: float) -> tuple[np.ndarray, float]:
    """Exact minimiser of ``||Ax - b||^2 + eta ||x||^2`` on the simplex.

    Tries every support, solves the equality-constrained stationarity
    system by a dense solve and keeps the best feasible candidate.
    """
    n = A.shape[1]
    best_x, best_f = None, np.inf
    for size in range(1, n + 1):
        for S in itertools.combinations(range(n), size):
            S = list(S)
            k = len(S)
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = 2 * (A[:, S].T @ A[:, S] + eta * np.eye(k))
            M[:k, k] = 1
            M[k, :k] = 1
            rhs = np.r_[2 * A[:, S].T @ b, 1.0]
            try:
                sol = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                continue
            if (sol[:k] < -1e-12).any():
                continue
            x = np.zeros(n)
            x[S] = np.clip(sol[:k], 0, None)
            x /= x.sum()
            r = A @ x - b
            f = r @ r + eta * x @ x
            if f < best_f:
                best_x, best_f = x, f
    return best_x, best_f
