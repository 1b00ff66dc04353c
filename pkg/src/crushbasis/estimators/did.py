"""Two-way difference-in-differences with unit fixed effects."""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from ..data import DidDataset
from ..errors import DataValidationError
from .hac import cluster_cov
from .ols import ols
from .results import EstimateResult

logger = logging.getLogger(__name__)

# post, interaction and the absorbed intercept
_N_PARAMS = 3


def _usable_rows(df: pd.DataFrame) -> pd.DataFrame:
    regimes = df.groupby("unit_id")["post"].nunique()
    single = regimes.index[regimes < 2]
    if len(single):
        logger.warning("did_fe: dropping %d units observed in only one period regime", len(single))
        df = df[~df["unit_id"].isin(single)]
    if df["treatment"].nunique() < 2 or df["post"].nunique() < 2:
        raise DataValidationError("did_fe needs treated and control units in both periods")
    return df


def did_fe(data: DidDataset, method: str = "within", label: str = "did_fe") -> EstimateResult:
    """Treatment x post interaction with unit fixed effects and no time effects.

    ``method`` is ``"within"`` (demean by unit) or ``"dummies"`` (one
    indicator per unit). Both give the same coefficient and the same
    unit-clustered standard error. The treatment main effect is absorbed by
    the unit effects.
    """
    df = _usable_rows(data.frame)
    y = df["basis"].to_numpy(dtype=float)
    post = df["post"].to_numpy(dtype=float)
    inter = post * df["treatment"].to_numpy(dtype=float)
    units = df["unit_id"].to_numpy()

    if method == "within":
        frame = pd.DataFrame({"y": y, "post": post, "treat_post": inter, "unit": units})
        demeaned = frame[["y", "post", "treat_post"]] - frame.groupby("unit")[["y", "post", "treat_post"]].transform("mean")
        X = demeaned[["post", "treat_post"]].to_numpy()
        fit = ols(X, demeaned["y"].to_numpy(), labels=["post", "treat_post"])
        cov = cluster_cov(X, fit.resid, units, fit.xtx_inv, n_params=_N_PARAMS)
        idx = 1
    elif method == "dummies":
        dummies = pd.get_dummies(pd.Series(units), dtype=float)
        X = np.column_stack([post, inter, dummies.to_numpy()])
        labels = ["post", "treat_post", *[f"unit[{u}]" for u in dummies.columns]]
        fit = ols(X, y, labels=labels)
        cov = cluster_cov(X, fit.resid, units, fit.xtx_inv, n_params=_N_PARAMS)
        idx = 1
    else:
        raise ValueError(f"unknown method {method!r}")
    return EstimateResult(label, float(fit.coef[idx]), float(np.sqrt(cov[idx, idx])), len(y))


def cell_means(data: DidDataset) -> pd.DataFrame:
    """Mean basis by treatment group and period regime (2x2 table)."""
    df = data.frame
    means = df.groupby(["treatment", "post"])["basis"].mean()
    return means.unstack("post").rename(index={0: "control", 1: "treated"}, columns={0: "pre", 1: "post"})
