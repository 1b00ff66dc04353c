"""Basis construction, cleaning, aggregation and event-window alignment.

Frames are long format throughout. Prices and basis are cents per bushel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import pandas as pd

from .errors import DataValidationError
from .geo import Band, BandAssignment, Role

logger = logging.getLogger(__name__)

WINDOW_DAYS = 30


@dataclass
class PricePanel:
    """Daily cash prices per elevator over an expected calendar.

    ``frame`` has columns ``date, elevator_id, cash_cents`` and is sorted by
    elevator then date.
    """

    frame: pd.DataFrame
    calendar: pd.DatetimeIndex

    def __post_init__(self):
        self.calendar = pd.DatetimeIndex(self.calendar).sort_values().unique()
        df = self.frame.loc[:, ["date", "elevator_id", "cash_cents"]].copy()
        df["date"] = pd.to_datetime(df["date"])
        df["elevator_id"] = df["elevator_id"].astype(str)
        df = df.sort_values(["elevator_id", "date"], kind="mergesort").reset_index(drop=True)
        if df.duplicated(["elevator_id", "date"]).any():
            raise DataValidationError("duplicate (elevator, date) cash observations")
        if len(df) and not df["date"].isin(self.calendar).all():
            raise DataValidationError("cash observation dates must lie on the calendar")
        self.frame = df

    @property
    def elevator_ids(self) -> list[str]:
        return list(pd.unique(self.frame["elevator_id"]))

    def completeness(self) -> pd.Series:
        """Share of calendar dates with an observation, per elevator."""
        if len(self.calendar) == 0:
            raise DataValidationError("empty calendar")
        return self.frame.groupby("elevator_id", sort=True)["date"].nunique() / len(self.calendar)


@dataclass
class BasisPanel:
    """Basis per elevator and period.

    ``frame`` columns are ``period, elevator_id, basis``; ``period`` holds
    timestamps for daily panels and monthly ``Period`` values otherwise.
    """

    frame: pd.DataFrame
    frequency: str = "daily"

    def __post_init__(self):
        if self.frequency not in ("daily", "monthly"):
            raise DataValidationError(f"unknown frequency {self.frequency!r}")

    def to_csv_frame(self) -> pd.DataFrame:
        out = self.frame.loc[:, ["period", "elevator_id", "basis"]].copy()
        if self.frequency == "daily":
            out["period"] = out["period"].dt.strftime("%Y-%m-%d")
        else:
            out["period"] = out["period"].astype(str)
        return out


@dataclass
class DidDataset:
    """Event-window rows for the difference-in-differences estimators.

    Columns: ``unit_id, event_id, elevator_id, relative_day, treatment,
    post, basis``. ``dropped`` counts elevators removed for lacking data in
    one of the two windows.
    """

    frame: pd.DataFrame
    dropped: int = 0

    def __post_init__(self):
        rd = self.frame["relative_day"]
        if (rd == 0).any():
            raise DataValidationError("relative day 0 is not part of an event window")
        if not ((self.frame["post"] == 1) == (rd >= 1)).all():
            raise DataValidationError("post flag must equal relative_day >= 1")

    @property
    def balanced(self) -> bool:
        days = self.frame.groupby("unit_id")["relative_day"].apply(frozenset)
        return days.nunique() <= 1

    @property
    def units(self) -> list[str]:
        return list(pd.unique(self.frame["unit_id"]))

    def without_event(self, event_id: str) -> "DidDataset":
        keep = self.frame["event_id"] != event_id
        return DidDataset(self.frame.loc[keep].reset_index(drop=True), self.dropped)


@dataclass
class PanelDataset:
    """Monthly mean basis per (plant, month, proximity).

    Columns: ``group_id, month, proximity, basis, n_elevators`` with
    ``proximity`` either ``"near"`` or ``"far"``.
    """

    frame: pd.DataFrame
    band: Band | None = None
    missing_cells: list = field(default_factory=list)


def _check_quotes(quotes: pd.DataFrame) -> pd.DataFrame:
    missing = {"date", "contract_id", "settlement_cents", "volume"} - set(quotes.columns)
    if missing:
        raise DataValidationError(f"futures quotes missing columns {sorted(missing)}")
    q = quotes.copy()
    q["date"] = pd.to_datetime(q["date"])
    q["contract_id"] = q["contract_id"].astype(str)
    if (q["volume"] < 0).any():
        raise DataValidationError("futures volume must be non-negative")
    if (q["settlement_cents"] <= 0).any():
        raise DataValidationError("futures settlement must be positive")
    return q


def select_active_futures(quotes: pd.DataFrame) -> pd.Series:
    """Settlement of the highest-volume contract on each date.

    Volume ties go to the smallest ``contract_id``, which for standard
    contract codes is the earliest expiry. Dates without quotes are absent.
    """
    q = _check_quotes(quotes)
    q = q.sort_values(["date", "volume", "contract_id"], ascending=[True, False, True], kind="mergesort")
    active = q.drop_duplicates("date", keep="first")
    return pd.Series(active["settlement_cents"].to_numpy(), index=pd.DatetimeIndex(active["date"]), name="futures")


def compute_basis(cash: PricePanel, futures: pd.Series) -> BasisPanel:
    """Daily basis, cash minus active futures; cells without futures are dropped."""
    fut = pd.Series(futures.to_numpy(dtype=float), index=pd.DatetimeIndex(futures.index))
    df = cash.frame
    settle = df["date"].map(fut)
    keep = settle.notna().to_numpy()
    out = pd.DataFrame(
        {
            "period": df["date"].to_numpy()[keep],
            "elevator_id": df["elevator_id"].to_numpy()[keep],
            "basis": df["cash_cents"].to_numpy()[keep] - settle.to_numpy()[keep],
        }
    )
    return BasisPanel(out, "daily")


def filter_completeness(panel: PricePanel, threshold: float = 0.85) -> PricePanel:
    """Keep elevators observed on at least ``threshold`` of the calendar."""
    if not 0 < threshold <= 1:
        raise DataValidationError(f"threshold must lie in (0, 1], got {threshold}")
    share = panel.completeness()
    keep = share.index[share >= threshold]
    return PricePanel(panel.frame[panel.frame["elevator_id"].isin(keep)], panel.calendar)


def top_n_by_completeness(panel: PricePanel, n: int) -> PricePanel:
    """Keep the ``n`` most complete elevators (ties by elevator id)."""
    share = panel.completeness().rename("share").reset_index()
    share = share.sort_values(["share", "elevator_id"], ascending=[False, True], kind="mergesort")
    keep = share["elevator_id"].head(n)
    return PricePanel(panel.frame[panel.frame["elevator_id"].isin(keep)], panel.calendar)


def impute_forward(series) -> pd.Series:
    """Fill gaps with the last observed value and drop leading gaps.

    Accepts any sequence or Series where ``None``/NaN marks a missing value.
    The returned Series keeps the positions (index) of the input.
    """
    s = pd.Series(series, dtype=float) if not isinstance(series, pd.Series) else series.astype(float)
    return s.ffill().dropna()


def impute_panel(panel: PricePanel) -> PricePanel:
    """Forward-fill every elevator across the calendar from its first observation."""
    if panel.frame.empty:
        return panel
    wide = panel.frame.pivot(index="date", columns="elevator_id", values="cash_cents")
    wide = wide.reindex(panel.calendar).ffill()
    wide.index.name = "date"
    long = wide.stack().rename("cash_cents").reset_index()
    return PricePanel(long, panel.calendar)


def aggregate_monthly(basis: BasisPanel) -> BasisPanel:
    """Arithmetic mean of daily basis per elevator and calendar month."""
    if basis.frequency != "daily":
        raise DataValidationError("aggregate_monthly expects a daily panel")
    df = basis.frame
    month = pd.DatetimeIndex(df["period"]).to_period("M")
    out = (
        df.assign(month=month)
        .groupby(["elevator_id", "month"], sort=True)["basis"]
        .mean()
        .reset_index()
        .rename(columns={"month": "period"})
    )
    return BasisPanel(out.loc[:, ["period", "elevator_id", "basis"]], "monthly")


def event_window_dates(start_month) -> tuple[pd.DatetimeIndex, pd.DatetimeIndex]:
    """Calendar dates of the pre and post windows around ``start_month``.

    Pre covers the 30 days ending the day before the month starts; post the
    30 days starting the day after the month ends.
    """
    month = pd.Period(start_month, freq="M")
    first = month.start_time.normalize()
    last = month.end_time.normalize()
    pre = pd.date_range(end=first - pd.Timedelta(days=1), periods=WINDOW_DAYS, freq="D")
    post = pd.date_range(start=last + pd.Timedelta(days=1), periods=WINDOW_DAYS, freq="D")
    return pre, post


def build_event_window(
    basis: BasisPanel,
    start_month,
    assignments: Iterable[BandAssignment],
    event_id: str | None = None,
) -> DidDataset:
    """Align daily basis on relative days -30..-1 and 1..30 around a start month.

    Treated assignments get ``treatment = 1``, control assignments 0 and
    excluded ones are ignored. Elevators without any observation in the pre
    or the post window are dropped and counted.
    """
    if basis.frequency != "daily":
        raise DataValidationError("event windows need a daily panel")
    pre, post = event_window_dates(start_month)
    rel = {d: -(WINDOW_DAYS - i) for i, d in enumerate(pre)}
    rel.update({d: i + 1 for i, d in enumerate(post)})

    roles = {}
    for a in assignments:
        if a.role is Role.EXCLUDED:
            continue
        roles[a.elevator_id] = (1 if a.role is Role.TREATED else 0, a.plant_id)
    eid = event_id if event_id is not None else str(pd.Period(start_month, freq="M"))

    df = basis.frame
    df = df[df["elevator_id"].isin(roles.keys())]
    df = df[df["period"].isin(rel.keys())]
    rows = pd.DataFrame(
        {
            "event_id": eid,
            "elevator_id": df["elevator_id"].to_numpy(),
            "relative_day": df["period"].map(rel).to_numpy(dtype=int),
            "basis": df["basis"].to_numpy(dtype=float),
        }
    )
    rows["unit_id"] = eid + "/" + rows["elevator_id"]
    rows["treatment"] = rows["elevator_id"].map(lambda e: roles[e][0]).astype(int)
    rows["post"] = (rows["relative_day"] >= 1).astype(int)

    has_pre = rows.loc[rows["post"] == 0, "elevator_id"].unique()
    has_post = rows.loc[rows["post"] == 1, "elevator_id"].unique()
    ok = set(has_pre) & set(has_post)
    dropped = len(roles) - len(ok)
    if dropped:
        logger.warning("event %s: dropped %d elevators lacking pre or post data", eid, dropped)
    rows = rows[rows["elevator_id"].isin(ok)]
    rows = rows.sort_values(["unit_id", "relative_day"], kind="mergesort").reset_index(drop=True)
    cols = ["unit_id", "event_id", "elevator_id", "relative_day", "treatment", "post", "basis"]
    return DidDataset(rows.loc[:, cols], dropped)


def pool_event_windows(datasets: Sequence[DidDataset]) -> DidDataset:
    """Stack event windows from several plants on the shared relative-day grid."""
    frames = [d.frame for d in datasets]
    if not frames:
        raise DataValidationError("nothing to pool")
    return DidDataset(pd.concat(frames, ignore_index=True), sum(d.dropped for d in datasets))


def build_panel_dataset(
    basis: BasisPanel, assignments: Iterable[BandAssignment], band: Band
) -> PanelDataset:
    """Monthly near/far mean basis per anchor plant.

    Near rows average the plant's elevators treated in ``band``; far rows
    average the plant's control elevators. Cells with no elevator observed
    are left out and recorded in ``missing_cells``.
    """
    if basis.frequency != "monthly":
        raise DataValidationError("build_panel_dataset expects a monthly panel")
    prox = {}
    for a in assignments:
        if a.role is Role.TREATED and a.band == band:
            prox[a.elevator_id] = (a.plant_id, "near")
        elif a.role is Role.CONTROL:
            prox[a.elevator_id] = (a.plant_id, "far")
    df = basis.frame[basis.frame["elevator_id"].isin(prox.keys())]
    df = df.assign(
        group_id=df["elevator_id"].map(lambda e: prox[e][0]),
        proximity=df["elevator_id"].map(lambda e: prox[e][1]),
    )
    out = (
        df.groupby(["group_id", "period", "proximity"], sort=True)["basis"]
        .agg(["mean", "size"])
        .reset_index()
        .rename(columns={"period": "month", "mean": "basis", "size": "n_elevators"})
    )
    missing = []
    if len(out):
        months = pd.period_range(out["month"].min(), out["month"].max(), freq="M")
        groups = {(g, s) for g, s in zip(out["group_id"], out["proximity"])}
        present = set(zip(out["group_id"], out["month"], out["proximity"]))
        for g, s in sorted(groups):
            for m in months:
                if (g, m, s) not in present:
                    missing.append((g, m, s))
        if missing:
            logger.info("panel %s: %d empty (plant, month, proximity) cells", band, len(missing))
    return PanelDataset(out, band, missing)


def read_cash(path) -> pd.DataFrame:
    """Read ``date,elevator_id,cash_cents``."""
    df = pd.read_csv(path, dtype={"elevator_id": str}, float_precision="round_trip")
    missing = {"date", "elevator_id", "cash_cents"} - set(df.columns)
    if missing:
        raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d")
    return df


def read_futures(path) -> pd.DataFrame:
    """Read ``date,contract_id,settlement_cents,volume``."""
    df = pd.read_csv(path, dtype={"contract_id": str}, float_precision="round_trip")
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d")
    return _check_quotes(df)


def prepare_daily_basis(
    cash: pd.DataFrame,
    quotes: pd.DataFrame,
    completeness: float = 0.85,
    top_n: int | None = None,
) -> tuple[BasisPanel, dict]:
    """Run the cleaning chain from raw cash and futures to a daily basis panel.

    The calendar is the set of dates with at least one futures quote. Steps:
    active futures, completeness filter, optional top-N filter, forward
    imputation, basis. Returns the panel and a small summary dict.
    """
    futures = select_active_futures(quotes)
    calendar = futures.index
    cash = cash.copy()
    cash["date"] = pd.to_datetime(cash["date"])
    on_cal = cash["date"].isin(calendar)
    off_calendar = int((~on_cal).sum())
    if off_calendar:
        logger.warning("dropping %d cash rows on dates without futures quotes", off_calendar)
    panel = PricePanel(cash[on_cal], calendar)
    n_in = len(panel.elevator_ids)
    panel = filter_completeness(panel, completeness)
    if top_n is not None:
        panel = top_n_by_completeness(panel, top_n)
    n_kept = len(panel.elevator_ids)
    panel = impute_panel(panel)
    basis = compute_basis(panel, futures)
    info = {
        "calendar_days": len(calendar),
        "elevators_in": n_in,
        "elevators_kept": n_kept,
        "cash_rows_off_calendar": off_calendar,
    }
    return basis, info


def reconstruct_cash(basis: BasisPanel, futures: pd.Series) -> pd.Series:
    """Inverse of :func:`compute_basis` for daily panels: basis + futures."""
    return basis.frame["basis"].to_numpy() + basis.frame["period"].map(futures).to_numpy(dtype=float)
