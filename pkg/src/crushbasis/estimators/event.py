"""Monthly near-versus-far interaction regression around existing plants."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import stats

from ..data import PanelDataset
from ..errors import DataValidationError
from .hac import default_lag, newey_west_cov
from .ols import ols
from .results import Z_95

logger = logging.getLogger(__name__)

EVENT_COLUMNS = ["month", "label", "coefficient", "se", "t", "p", "ci_lo", "ci_hi", "n", "significant_5pct"]


@dataclass
class EventCoefficients:
    """Monthly interaction coefficients for one band.

    ``table`` has one row per identified month; months without both near
    and far observations are listed in ``unidentified``.
    """

    label: str
    table: pd.DataFrame
    unidentified: list = field(default_factory=list)
    n_obs: int = 0
    lag: int = 0

    @property
    def beta(self) -> pd.Series:
        return self.table.set_index("month")["coefficient"]

    def to_csv_frame(self) -> pd.DataFrame:
        out = self.table.copy()
        out["month"] = out["month"].astype(str)
        return out.loc[:, EVENT_COLUMNS]


def _sorted_frame(data: PanelDataset) -> pd.DataFrame:
    df = data.frame
    missing = {"group_id", "month", "proximity", "basis"} - set(df.columns)
    if missing:
        raise DataValidationError(f"panel dataset missing columns {sorted(missing)}")
    if df.duplicated(["group_id", "month", "proximity"]).any():
        raise DataValidationError("panel dataset has duplicate (plant, month, proximity) rows")
    return df.sort_values(["group_id", "proximity", "month"], kind="mergesort").reset_index(drop=True)


def event_design(df: pd.DataFrame):
    """Interaction and month columns plus the identified months.

    Returns ``(X, labels, identified, unidentified, rows)`` where ``rows``
    selects the usable rows of ``df``. The first month is the reference
    for the month effects; plant effects are left to the caller.
    """
    near = df["proximity"] == "near"
    far_months = set(df.loc[~near, "month"])
    near_months = set(df.loc[near, "month"])
    if not far_months:
        raise DataValidationError("panel has no far (control) rows")
    identified = sorted(near_months & far_months)
    unidentified = sorted(near_months - far_months)
    rows = ~(near & df["month"].isin(unidentified))
    sub = df.loc[rows]
    months = sorted(set(sub["month"]))
    month_codes = {m: i for i, m in enumerate(months)}
    m_idx = sub["month"].map(month_codes).to_numpy()
    n = len(sub)
    M = np.zeros((n, len(months)))
    M[np.arange(n), m_idx] = 1.0
    id_codes = {m: i for i, m in enumerate(identified)}
    D = np.zeros((n, len(identified)))
    is_near = (sub["proximity"] == "near").to_numpy()
    d_idx = sub["month"].map(lambda m: id_codes.get(m, -1)).to_numpy()
    sel = is_near & (d_idx >= 0)
    D[np.flatnonzero(sel), d_idx[sel]] = 1.0
    X = np.column_stack([D, M[:, 1:]])
    labels = [f"D[{m}]" for m in identified] + [f"month[{m}]" for m in months[1:]]
    return X, labels, identified, unidentified, rows.to_numpy()


def panel_event_regression(data: PanelDataset, lag: int | None = None, label: str | None = None) -> EventCoefficients:
    """Estimate one near-band interaction per month with plant and month effects.

    Plant effects are swept out by demeaning within plant; the month
    effects enter as dummies with the first month dropped. Standard errors
    are Newey-West with lags taken within each (plant, proximity) series.
    ``lag=None`` uses the rule-of-thumb lag for the number of months.
    """
    df = _sorted_frame(data)
    X, labels, identified, unidentified, rows = event_design(df)
    if unidentified:
        logger.warning("%d months have near rows but no far rows; their effects are not identified", len(unidentified))
    sub = df.loc[rows].reset_index(drop=True)
    y = sub["basis"].to_numpy(dtype=float)
    groups = sub["group_id"].to_numpy()
    Xd = X - pd.DataFrame(X).groupby(groups).transform("mean").to_numpy()
    yd = y - pd.Series(y).groupby(groups).transform("mean").to_numpy()
    fit = ols(Xd, yd, labels=labels)

    series = (sub["group_id"].astype(str) + "|" + sub["proximity"].astype(str)).to_numpy()
    n_months = sub["month"].nunique()
    if lag is None:
        longest = pd.Series(series).value_counts().max()
        lag = int(min(default_lag(n_months), longest - 1))
    cov = newey_west_cov(Xd, fit.resid, lag, groups=series, xtx_inv=fit.xtx_inv)

    k = len(identified)
    beta = fit.coef[:k]
    se = np.sqrt(np.clip(np.diag(cov)[:k], 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.nan)
    p = 2 * stats.norm.sf(np.abs(t))
    name = label if label is not None else (str(data.band) if data.band is not None else "event")
    table = pd.DataFrame(
        {
            "month": identified,
            "label": name,
            "coefficient": beta,
            "se": se,
            "t": t,
            "p": p,
            "ci_lo": beta - Z_95 * se,
            "ci_hi": beta + Z_95 * se,
            "n": len(y),
            "significant_5pct": p < 0.05,
        }
    )
    return EventCoefficients(name, table, unidentified, len(y), lag)


def yearly_average_effects(coeffs):
    """Average monthly effects by calendar year.

    For a single :class:`EventCoefficients` returns a Series indexed by
    year. For a mapping ``band -> EventCoefficients`` returns a year-by-band
    frame with a ``mean_over_bands`` column and a ``mean_over_years`` row,
    both re-averaged from the cells.
    """
    if isinstance(coeffs, EventCoefficients):
        b = coeffs.beta
        years = [m.year for m in b.index]
        return b.groupby(years).mean().rename_axis("year")
    if not isinstance(coeffs, Mapping):
        raise TypeError("expected EventCoefficients or a mapping of them")
    cells = pd.DataFrame({str(k): yearly_average_effects(v) for k, v in coeffs.items()})
    cells = cells.sort_index()
    cells.index = cells.index.astype(str)
    out = cells.copy()
    out["mean_over_bands"] = cells.mean(axis=1)
    out.loc["mean_over_years"] = list(cells.mean(axis=0)) + [np.nan]
    out.index.name = "year"
    return out
