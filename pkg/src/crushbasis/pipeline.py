"""End-to-end analyses producing table- and figure-shaped frames."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from . import data as D
from .errors import CrushBasisError, DataValidationError
from .estimators import did_fe, panel_event_regression, results_frame, sdid_att, yearly_average_effects
from .estimators.event import EVENT_COLUMNS, EventCoefficients
from .geo import (
    BANDS,
    Band,
    BandAssignment,
    Elevator,
    Plant,
    Role,
    assign_bands,
    control_for_new_plant,
    treated_for_new_plant,
)

logger = logging.getLogger(__name__)

NEAR_RADIUS = Band(0, 100)


def _months_apart(a: pd.Period, b: pd.Period) -> int:
    return abs((a - b).n)


def new_plant_assignments(
    plant: Plant, plants: Sequence[Plant], elevators: Sequence[Elevator], band: Band
) -> list[BandAssignment]:
    """Treated elevators in ``band`` of ``plant`` plus its same-state controls.

    New plants starting within a month of ``plant`` also contaminate the
    control pool.
    """
    existing = [p for p in plants if not p.is_new]
    overlapping = [
        q for q in plants if q.is_new and q.id != plant.id and _months_apart(q.start_month, plant.start_month) <= 1
    ]
    treated = treated_for_new_plant(plant, elevators, band)
    control = control_for_new_plant(plant, existing, elevators, band, overlapping)
    return [BandAssignment(e.id, Role.TREATED, band, plant.id, np.nan) for e in treated] + [
        BandAssignment(e.id, Role.CONTROL, None, plant.id, np.nan) for e in control
    ]


@dataclass
class NewPlantReport:
    table2: pd.DataFrame
    results: pd.DataFrame
    table3: pd.DataFrame
    figure5: pd.DataFrame
    figure6: pd.DataFrame
    windows: dict = field(default_factory=dict)


def _mean_or_nan(s: pd.Series) -> float:
    return float(s.mean()) if len(s) else np.nan


def new_plant_analysis(
    plants: Sequence[Plant],
    elevators: Sequence[Elevator],
    basis: D.BasisPanel,
    bands: Sequence[Band] = BANDS,
    zeta: float | None = None,
    placebo_reps: int = 200,
    seed: int = 0,
    exclude: Sequence[str] = (),
) -> NewPlantReport:
    """DiD and SDID around every new plant, per plant and pooled.

    The pooled sample is also re-estimated without each plant listed in
    ``exclude``.
    """
    new = sorted((p for p in plants if p.is_new), key=lambda p: p.id)
    if not new:
        raise DataValidationError("plants file lists no new plants")
    unknown = set(exclude) - {p.id for p in new}
    if unknown:
        raise DataValidationError(f"--exclude-plant ids are not new plants: {sorted(unknown)}")

    windows: dict[tuple[str, Band], D.DidDataset] = {}
    table2 = []
    for plant in new:
        for band in bands:
            assigned = new_plant_assignments(plant, plants, elevators, band)
            windows[(plant.id, band)] = D.build_event_window(basis, plant.start_month, assigned, plant.id)
        # the 100-mile summary: every treated band against the pooled control ring
        combined = new_plant_assignments(plant, plants, elevators, NEAR_RADIUS)
        summary = D.build_event_window(basis, plant.start_month, combined, plant.id).frame
        cell = {
            (t, p): _mean_or_nan(summary.loc[(summary["treatment"] == t) & (summary["post"] == p), "basis"])
            for t in (0, 1)
            for p in (0, 1)
        }
        table2.append(
            {
                "plant": plant.id,
                "start_month": str(plant.start_month),
                "pre_control": cell[(0, 0)],
                "post_control": cell[(0, 1)],
                "change_control": cell[(0, 1)] - cell[(0, 0)],
                "pre_treated": cell[(1, 0)],
                "post_treated": cell[(1, 1)],
                "change_treated": cell[(1, 1)] - cell[(1, 0)],
            }
        )

    samples: dict[str, list[str]] = {"pooled": [p.id for p in new]}
    for pid in exclude:
        samples[f"pooled_without_{pid}"] = [p.id for p in new if p.id != pid]
    for p in new:
        samples[p.id] = [p.id]

    results = []
    table3 = {}
    fig5 = []
    fig6 = []
    for sample, ids in samples.items():
        row = {}
        for band in bands:
            parts = [windows[(pid, band)] for pid in ids if len(windows[(pid, band)].frame)]
            if not parts:
                logger.warning("%s %s: no elevators in the event windows", sample, band)
                row[band.name] = np.nan
                continue
            dd = D.pool_event_windows(parts)
            tag = f"{sample}|{band.name}"
            try:
                did = did_fe(dd, label=f"did|{tag}")
                results.append(did)
                if sample == "pooled":
                    lo, hi = did.ci95
                    fig6.append(
                        {
                            "band": band.name,
                            "estimate": did.coefficient,
                            "ci_lo": lo,
                            "ci_hi": hi,
                            "significant_5pct": did.significant_5pct,
                        }
                    )
            except CrushBasisError as exc:
                logger.warning("did %s skipped: %s", tag, exc)
            try:
                sd = sdid_att(dd, zeta=zeta, placebo_reps=placebo_reps, seed=seed, label=f"sdid|{tag}")
                results.append(sd)
                row[band.name] = sd.coefficient
            except CrushBasisError as exc:
                logger.warning("sdid %s skipped: %s", tag, exc)
                row[band.name] = np.nan
            if sample == "pooled":
                means = dd.frame.groupby(["relative_day", "treatment"])["basis"].mean().reset_index()
                for r in means.itertuples(index=False):
                    fig5.append(
                        {
                            "band": band.name,
                            "relative_day": int(r.relative_day),
                            "group": "treated" if r.treatment == 1 else "control",
                            "basis": r.basis,
                        }
                    )
        table3[sample] = row

    t3 = pd.DataFrame.from_dict(table3, orient="index", columns=[b.name for b in bands])
    t3.index.name = "sample"
    return NewPlantReport(
        pd.DataFrame(table2),
        results_frame(results),
        t3.reset_index(),
        pd.DataFrame(fig5, columns=["band", "relative_day", "group", "basis"]),
        pd.DataFrame(fig6, columns=["band", "estimate", "ci_lo", "ci_hi", "significant_5pct"]),
        windows,
    )


@dataclass
class ExistingPlantReport:
    monthly: D.BasisPanel
    assignments: list
    coefficients: dict
    table4: pd.DataFrame
    figure7: pd.DataFrame
    unidentified: pd.DataFrame
    panels: dict = field(default_factory=dict)

    def event_frame(self) -> pd.DataFrame:
        frames = [ec.to_csv_frame() for ec in self.coefficients.values()]
        if not frames:
            return pd.DataFrame(columns=EVENT_COLUMNS)
        return pd.concat(frames, ignore_index=True)

    def assignments_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "elevator_id": [a.elevator_id for a in self.assignments],
                "role": [a.role.value for a in self.assignments],
                "band": [a.band.name if a.band else "" for a in self.assignments],
                "plant_id": [a.plant_id for a in self.assignments],
                "distance_mi": [a.distance_mi for a in self.assignments],
            }
        )


def existing_plant_analysis(
    plants: Sequence[Plant],
    elevators: Sequence[Elevator],
    basis: D.BasisPanel,
    bands: Sequence[Band] = BANDS,
    lag: int | None = None,
) -> ExistingPlantReport:
    """One monthly interaction regression per band against the distant group."""
    monthly = D.aggregate_monthly(basis) if basis.frequency == "daily" else basis
    assignments = assign_bands(elevators, plants, anchor_filter=lambda p: not p.is_new)
    coefficients: dict[str, EventCoefficients] = {}
    panels = {}
    unident = []
    for band in bands:
        panel = D.build_panel_dataset(monthly, assignments, band)
        panels[band.name] = panel
        if not (panel.frame["proximity"] == "near").any():
            logger.warning("%s: no near elevators; band skipped", band)
            continue
        try:
            ec = panel_event_regression(panel, lag=lag, label=band.name)
        except CrushBasisError as exc:
            logger.warning("%s: estimation failed: %s", band, exc)
            continue
        coefficients[band.name] = ec
        unident.extend({"band": band.name, "month": str(m)} for m in ec.unidentified)
    table4 = yearly_average_effects(coefficients) if coefficients else pd.DataFrame()

    group = {}
    for a in assignments:
        if a.role is Role.TREATED:
            group[a.elevator_id] = a.band.name
        elif a.role is Role.CONTROL:
            group[a.elevator_id] = "distant"
    mf = monthly.frame[monthly.frame["elevator_id"].isin(group.keys())]
    fig7 = (
        mf.assign(group=mf["elevator_id"].map(group))
        .groupby(["period", "group"], sort=True)["basis"]
        .mean()
        .reset_index()
        .rename(columns={"period": "month"})
    )
    fig7["month"] = fig7["month"].astype(str)
    return ExistingPlantReport(
        monthly,
        assignments,
        coefficients,
        table4,
        fig7,
        pd.DataFrame(unident, columns=["band", "month"]),
        panels,
    )
