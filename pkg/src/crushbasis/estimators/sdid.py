"""Synthetic difference-in-differences.

Unit weights align the control units with the treated pre-period path;
time weights align the pre-period control outcomes with their post-period
means. Both live on the probability simplex and are found with a
Frank-Wolfe method (exact line search, away steps, active-set correction).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..data import DidDataset
from ..errors import ConvergenceError, DataValidationError
from .results import EstimateResult

logger = logging.getLogger(__name__)

MAX_ITER = 10_000
GAP_TOL = 1e-10
PLACEBO_REPS = 200


@dataclass
class SimplexSolution:
    x: np.ndarray
    objective: float
    gap: float
    iterations: int


def _objective(A, b, eta, x):
    r = A @ x - b
    return float(r @ r + eta * x @ x)


def _face_minimiser(A_S: np.ndarray, b: np.ndarray, eta: float) -> np.ndarray:
    """Minimiser of the objective on the affine hull of a face (sum to one).

    Writes x = 1/k + Q u with Q an orthonormal basis of the zero-sum
    subspace and solves the stacked least-squares problem for u, so the
    constraint holds exactly whatever the scale of ``A_S``.
    """
    k = A_S.shape[1]
    x0 = np.full(k, 1.0 / k)
    if k == 1:
        return x0
    Q = np.linalg.qr(np.ones((k, 1)), mode="complete")[0][:, 1:]
    M = np.vstack([A_S, np.sqrt(eta) * np.eye(k)]) if eta > 0 else A_S
    c = np.r_[b, np.zeros(k)] if eta > 0 else b
    u = np.linalg.lstsq(M @ Q, c - M @ x0, rcond=None)[0]
    return x0 + Q @ u


def _correct_on_support(A, b, eta, x):
    """Active-set correction: move towards the face minimiser, dropping
    coordinates that hit zero, until the minimiser is feasible."""
    f_old = _objective(A, b, eta, x)
    y = x.copy()
    for _ in range(A.shape[1]):
        S = np.flatnonzero(y > 0)
        z = _face_minimiser(A[:, S], b, eta)
        d = z - y[S]
        neg = d < 0
        if not neg.any() or (z >= 0).all():
            y[S] = np.maximum(z, 0.0)
            break
        ratios = y[S][neg] / -d[neg]
        t = min(1.0, float(ratios.min()))
        y[S] = y[S] + t * d
        if t < 1.0:
            y[S[neg][np.argmin(ratios)]] = 0.0
        np.maximum(y, 0.0, out=y)
        if t >= 1.0:
            break
    total = y.sum()
    if not total > 0:
        return x, False
    y /= total
    return (y, True) if _objective(A, b, eta, y) <= f_old else (x, False)


def frank_wolfe_simplex(
    A: np.ndarray,
    b: np.ndarray,
    eta: float = 0.0,
    x0: np.ndarray | None = None,
    max_iter: int = MAX_ITER,
    tol: float = GAP_TOL,
) -> SimplexSolution:
    """Minimise ``||A x - b||^2 + eta ||x||^2`` over the probability simplex.

    Each iteration takes a Frank-Wolfe or away step with exact line search,
    then an active-set correction that minimises over the current support.
    The correction never raises the objective and removes the zig-zagging
    of plain Frank-Wolfe when the optimum lies inside a face. The loop
    stops once the duality gap drops below ``tol * max(1, f(x0))``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    if n == 0:
        raise DataValidationError("simplex problem with no coordinates")
    x = np.full(n, 1.0 / n) if x0 is None else np.asarray(x0, dtype=float).copy()
    threshold = tol * max(1.0, _objective(A, b, eta, x))
    gap = np.inf
    for it in range(max_iter):
        r = A @ x - b
        g = 2.0 * (A.T @ r + eta * x)
        gx = float(g @ x)
        s = int(np.argmin(g))
        gap = gx - float(g[s])
        if gap <= threshold:
            break
        support = np.flatnonzero(x > 0)
        v = int(support[np.argmax(g[support])])
        away_gap = float(g[v]) - gx
        if gap >= away_gap:
            d = -x.copy()
            d[s] += 1.0
            step_max = 1.0
            away = False
        else:
            d = x.copy()
            d[v] -= 1.0
            step_max = x[v] / (1.0 - x[v])
            away = True
        Ad = A @ d
        num = -float(r @ Ad + eta * (x @ d))
        den = float(Ad @ Ad + eta * (d @ d))
        step = step_max if den <= 0 else min(step_max, max(num / den, 0.0))
        x = x + step * d
        if away and step == step_max:
            x[v] = 0.0
        np.maximum(x, 0.0, out=x)
        x, _ = _correct_on_support(A, b, eta, x)
    else:
        raise ConvergenceError(f"Frank-Wolfe did not converge in {max_iter} iterations", gap)
    x = np.maximum(x, 0.0)
    x /= x.sum()
    return SimplexSolution(x, _objective(A, b, eta, x), float(max(gap, 0.0)), it)


@dataclass
class SdidWeights:
    unit_weights: np.ndarray
    time_weights: np.ndarray
    unit_intercept: float = 0.0
    time_intercept: float = 0.0
    zeta: float = 0.0

    @classmethod
    def uniform(cls, n_control: int, n_pre: int) -> "SdidWeights":
        return cls(np.full(n_control, 1.0 / n_control), np.full(n_pre, 1.0 / n_pre))


TIME_RIDGE = 1e-6


def noise_level(Y_control_pre: np.ndarray) -> float:
    """Standard deviation of first differences of control pre-period outcomes."""
    diffs = np.diff(np.asarray(Y_control_pre, dtype=float), axis=1)
    if diffs.size < 2:
        return 0.0
    return float(np.std(diffs, ddof=1))


def default_zeta(n_treated: int, n_post: int, Y_control_pre: np.ndarray) -> float:
    """Unit-weight regularisation ``(N_tr T_post)^(1/4) * sigma``."""
    return float((n_treated * n_post) ** 0.25 * noise_level(Y_control_pre))


def sdid_weights(
    Y_control_pre: np.ndarray,
    y_treated_pre_mean: np.ndarray,
    Y_control_post_mean: np.ndarray,
    zeta: float,
) -> SdidWeights:
    """Unit and time weights.

    Unit weights minimise, over an intercept and the simplex,
    ``sum_t (w0 + w . Y[:, t] - ybar_t)^2 + zeta^2 T_pre ||w||^2``.
    Time weights match each control unit's pre-period path to its
    post-period mean. That problem has no penalty of its own and its
    minimiser is not unique once there are fewer control units than
    pre-periods, so a vanishing ridge ``(1e-6 sigma)^2 N_co`` picks one;
    ``sigma`` is the noise level, or the root mean square of the centred
    design when the series have no noise.
    """
    Y = np.asarray(Y_control_pre, dtype=float)
    ybar = np.asarray(y_treated_pre_mean, dtype=float)
    post_mean = np.asarray(Y_control_post_mean, dtype=float)
    n_co, t_pre = Y.shape
    if n_co < 1 or t_pre < 2:
        raise DataValidationError("need at least one control unit and two pre-periods")
    if ybar.shape != (t_pre,) or post_mean.shape != (n_co,):
        raise DataValidationError("weight inputs have inconsistent shapes")

    # intercepts are profiled out by centring
    A_unit = (Y - Y.mean(axis=1, keepdims=True)).T
    b_unit = ybar - ybar.mean()
    unit = frank_wolfe_simplex(A_unit, b_unit, eta=zeta**2 * t_pre)
    omega = unit.x
    omega0 = float(np.mean(ybar - omega @ Y))

    A_time = Y - Y.mean(axis=0, keepdims=True)
    b_time = post_mean - post_mean.mean()
    scale = noise_level(Y) ** 2 or float(np.mean(A_time**2))
    time = frank_wolfe_simplex(A_time, b_time, eta=TIME_RIDGE**2 * scale * n_co)
    lam = time.x
    lam0 = float(np.mean(post_mean - Y @ lam))
    return SdidWeights(omega, lam, omega0, lam0, float(zeta))


@dataclass
class SdidPanel:
    """Balanced outcome matrix, units by periods."""

    Y: np.ndarray
    treated: np.ndarray
    post: np.ndarray
    units: list
    periods: list


def panel_matrix(data: DidDataset) -> SdidPanel:
    """Pivot event rows into a balanced units-by-relative-days matrix.

    Gaps are forward-filled within the pre window and within the post
    window separately. Units with no data in one window are dropped first;
    relative days still missing for some unit (leading gaps) are then
    dropped, and finally any unit that remains incomplete.
    """
    df = data.frame
    wide = df.pivot(index="unit_id", columns="relative_day", values="basis").sort_index(axis=1)
    pre_cols = [c for c in wide.columns if c < 0]
    post_cols = [c for c in wide.columns if c > 0]
    wide = pd.concat([wide[pre_cols].ffill(axis=1), wide[post_cols].ffill(axis=1)], axis=1)
    empty = wide[pre_cols].isna().all(axis=1) | wide[post_cols].isna().all(axis=1)
    if empty.any():
        logger.warning("sdid: dropping %d units without pre or post data", int(empty.sum()))
        wide = wide[~empty]
    full = wide.notna().all(axis=0)
    lead = []
    for cols in (pre_cols, post_cols):
        for c in cols:
            if full[c]:
                break
            lead.append(c)
    wide = wide.drop(columns=lead)
    complete = wide.notna().all(axis=1)
    if (~complete).any():
        logger.warning("sdid: dropping %d incomplete units", int((~complete).sum()))
    wide = wide[complete]
    treat = df.groupby("unit_id")["treatment"].first().reindex(wide.index)
    cols = list(wide.columns)
    return SdidPanel(
        wide.to_numpy(dtype=float),
        treat.to_numpy(dtype=int) == 1,
        np.array([c > 0 for c in cols]),
        list(wide.index),
        cols,
    )


@dataclass
class SdidFit:
    att: float
    weights: SdidWeights
    n_treated: int
    n_control: int
    n_pre: int
    n_post: int


def sdid_estimate(
    Y: np.ndarray,
    treated: np.ndarray,
    post: np.ndarray,
    zeta: float | None = None,
    weights: SdidWeights | None = None,
) -> SdidFit:
    """Weighted double difference for a balanced block design."""
    Y = np.asarray(Y, dtype=float)
    treated = np.asarray(treated, dtype=bool)
    post = np.asarray(post, dtype=bool)
    n_tr, n_co = int(treated.sum()), int((~treated).sum())
    if n_tr == 0 or n_co == 0:
        raise DataValidationError("sdid needs at least one treated and one control unit")
    if post.all() or not post.any():
        raise DataValidationError("sdid needs pre and post periods")
    Y_co, Y_tr = Y[~treated], Y[treated]
    Y_co_pre, Y_co_post = Y_co[:, ~post], Y_co[:, post]
    Y_tr_pre, Y_tr_post = Y_tr[:, ~post], Y_tr[:, post]
    if weights is None:
        if zeta is None:
            zeta = default_zeta(n_tr, int(post.sum()), Y_co_pre)
        weights = sdid_weights(Y_co_pre, Y_tr_pre.mean(axis=0), Y_co_post.mean(axis=1), zeta)
    omega, lam = weights.unit_weights, weights.time_weights
    treated_diff = Y_tr_post.mean() - Y_tr_pre.mean(axis=0) @ lam
    control_diff = omega @ Y_co_post.mean(axis=1) - omega @ Y_co_pre @ lam
    return SdidFit(
        float(treated_diff - control_diff), weights, n_tr, n_co, int((~post).sum()), int(post.sum())
    )


def placebo_se(
    Y_control: np.ndarray,
    post: np.ndarray,
    n_treated: int,
    zeta: float | None = None,
    reps: int = PLACEBO_REPS,
    seed: int = 0,
) -> float:
    """Placebo standard error from pseudo-treatments drawn among controls.

    Returns NaN when there are not more controls than treated units.
    """
    n_co = Y_control.shape[0]
    if n_co <= n_treated:
        logger.warning("sdid placebo: %d controls cannot host %d pseudo-treated units", n_co, n_treated)
        return float("nan")
    rng = np.random.default_rng(seed)
    estimates = np.empty(reps)
    for r in range(reps):
        pseudo = np.zeros(n_co, dtype=bool)
        pseudo[rng.permutation(n_co)[:n_treated]] = True
        estimates[r] = sdid_estimate(Y_control, pseudo, post, zeta).att
    return float(np.std(estimates, ddof=0))


def sdid_fit(data: DidDataset | SdidPanel, zeta: float | None = None, weights: SdidWeights | None = None) -> SdidFit:
    panel = data if isinstance(data, SdidPanel) else panel_matrix(data)
    return sdid_estimate(panel.Y, panel.treated, panel.post, zeta, weights)


def sdid_att(
    data: DidDataset | SdidPanel,
    zeta: float | None = None,
    weights: SdidWeights | None = None,
    placebo_reps: int = PLACEBO_REPS,
    seed: int = 0,
    label: str = "sdid",
) -> EstimateResult:
    """SDID average treatment effect on the treated with a placebo standard error.

    ``zeta=None`` picks the default regularisation (recomputed inside each
    placebo draw). Passing ``weights`` fixes both weight vectors. Set
    ``placebo_reps=0`` to skip the standard error.
    """
    panel = data if isinstance(data, SdidPanel) else panel_matrix(data)
    fit = sdid_estimate(panel.Y, panel.treated, panel.post, zeta, weights)
    se = float("nan")
    if placebo_reps > 0:
        se = placebo_se(panel.Y[~panel.treated], panel.post, fit.n_treated, zeta, placebo_reps, seed)
    return EstimateResult(label, fit.att, se, int(panel.Y.size))
