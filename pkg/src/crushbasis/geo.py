"""Great-circle distances and distance-band assignment around plants."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import DataValidationError, NoValidControlError

EARTH_RADIUS_MI = 3958.8


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise DataValidationError(f"coordinates out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class Plant:
    """A crush plant.

    ``start_month`` is the month the plant began buying soybeans and is set
    only for new plants. ``state`` is optional in the CSV but required when
    the plant takes part in same-state control construction.
    """

    id: str
    location: GeoPoint
    capacity_kbu_day: float
    status: str = "existing"
    start_month: pd.Period | None = None
    state: str | None = None

    def __post_init__(self):
        if not self.capacity_kbu_day > 0:
            raise DataValidationError(f"plant {self.id}: capacity must be positive")
        if self.status not in ("existing", "new"):
            raise DataValidationError(f"plant {self.id}: unknown status {self.status!r}")
        if (self.start_month is None) == (self.status == "new"):
            raise DataValidationError(
                f"plant {self.id}: start_month is required for new plants and only for them"
            )
        if self.start_month is not None and not isinstance(self.start_month, pd.Period):
            object.__setattr__(self, "start_month", pd.Period(self.start_month, freq="M"))

    @property
    def is_new(self) -> bool:
        return self.status == "new"


@dataclass(frozen=True)
class Elevator:
    id: str
    location: GeoPoint
    state: str


@dataclass(frozen=True, order=True)
class Band:
    """Half-open distance interval ``[lo, hi)`` in statute miles."""

    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise DataValidationError(f"band needs 0 <= lo < hi, got [{self.lo}, {self.hi})")

    @property
    def name(self) -> str:
        return f"B{self.lo:g}_{self.hi:g}"

    @property
    def label(self) -> str:
        return f"{self.lo:g}-{self.hi:g} mi"

    def contains(self, distance_mi: float) -> bool:
        return self.lo <= distance_mi < self.hi

    def __str__(self) -> str:
        return self.name


B0_20 = Band(0, 20)
B20_40 = Band(20, 40)
B40_60 = Band(40, 60)
B60_80 = Band(60, 80)
B80_100 = Band(80, 100)
BANDS: tuple[Band, ...] = (B0_20, B20_40, B40_60, B60_80, B80_100)
CONTROL_RANGE = Band(100, 300)


def parse_band(text: str) -> Band:
    """Parse ``B20_40``, ``20-40`` or ``20_40`` into a :class:`Band`."""
    raw = text.strip().upper().removeprefix("B").replace("MI", "").strip()
    for sep in ("_", "-"):
        if sep in raw:
            lo, hi = raw.split(sep, 1)
            try:
                return Band(float(lo), float(hi))
            except ValueError:
                break
    raise DataValidationError(f"cannot parse distance band {text!r}")


class Role(enum.Enum):
    TREATED = "treated"
    CONTROL = "control"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class BandAssignment:
    """Role of one elevator relative to its anchor plant.

    ``band`` is set only for treated elevators. ``plant_id`` is the anchor
    (nearest) plant for every role.
    """

    elevator_id: str
    role: Role
    band: Band | None
    plant_id: str
    distance_mi: float


def haversine_miles(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in statute miles."""
    for p in (a, b):
        if not (-90.0 <= p.lat <= 90.0) or not (-180.0 <= p.lon <= 180.0):
            raise DataValidationError(f"coordinates out of range: ({p.lat}, {p.lon})")
    return float(
        distance_matrix(np.array([[a.lat, a.lon]]), np.array([[b.lat, b.lon]]))[0, 0]
    )


def distance_matrix(origins: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Pairwise haversine distances (miles) between ``(lat, lon)`` rows."""
    o = np.radians(np.asarray(origins, dtype=float))[:, None, :]
    t = np.radians(np.asarray(targets, dtype=float))[None, :, :]
    dlat = t[..., 0] - o[..., 0]
    dlon = t[..., 1] - o[..., 1]
    h = np.sin(dlat / 2) ** 2 + np.cos(o[..., 0]) * np.cos(t[..., 0]) * np.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_MI * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _coords(items) -> np.ndarray:
    return np.array([[x.location.lat, x.location.lon] for x in items], dtype=float).reshape(-1, 2)


def assign_bands(
    elevators: Sequence[Elevator],
    plants: Sequence[Plant],
    anchor_filter: Callable[[Plant], bool] | None = None,
    bands: Sequence[Band] = BANDS,
    control_range: Band = CONTROL_RANGE,
) -> list[BandAssignment]:
    """Assign each elevator a role relative to its nearest anchor plant.

    Ties in distance go to the lexicographically smallest plant id. Elevators
    beyond every band and outside ``control_range`` are excluded.
    """
    anchors = [p for p in plants if anchor_filter is None or anchor_filter(p)]
    if not anchors:
        raise DataValidationError("no anchor plants left after filtering")
    anchors.sort(key=lambda p: p.id)
    if not elevators:
        return []
    dist = distance_matrix(_coords(elevators), _coords(anchors))
    # argmin returns the first minimum, which is the smallest id after sorting
    nearest = dist.argmin(axis=1)
    out = []
    for i, elev in enumerate(elevators):
        d = float(dist[i, nearest[i]])
        plant_id = anchors[nearest[i]].id
        band = next((b for b in bands if b.contains(d)), None)
        if band is not None:
            role = Role.TREATED
        elif control_range.contains(d):
            role = Role.CONTROL
        else:
            role = Role.EXCLUDED
        out.append(BandAssignment(elev.id, role, band, plant_id, d))
    return out


def control_for_new_plant(
    new_plant: Plant,
    existing_plants: Iterable[Plant],
    elevators: Sequence[Elevator],
    band: Band,
    other_new_plants: Iterable[Plant] = (),
    contamination_mi: float = 100.0,
) -> list[Elevator]:
    """Control elevators for one new plant and distance band.

    Returns elevators lying in ``band`` around any existing plant in the new
    plant's state, minus elevators within ``contamination_mi`` of the new
    plant or of any plant in ``other_new_plants``.
    """
    if new_plant.state is None:
        raise DataValidationError(f"new plant {new_plant.id} has no state")
    same_state = [p for p in existing_plants if p.state == new_plant.state and not p.is_new]
    if not same_state:
        raise NoValidControlError(
            f"no valid control: no existing plant in state {new_plant.state} "
            f"for new plant {new_plant.id}"
        )
    if not elevators:
        return []
    coords = _coords(elevators)
    to_existing = distance_matrix(coords, _coords(same_state))
    in_band = ((to_existing >= band.lo) & (to_existing < band.hi)).any(axis=1)
    new_plants = [new_plant, *other_new_plants]
    contaminated = (distance_matrix(coords, _coords(new_plants)) < contamination_mi).any(axis=1)
    keep = in_band & ~contaminated
    return [e for e, k in zip(elevators, keep) if k]


def treated_for_new_plant(new_plant: Plant, elevators: Sequence[Elevator], band: Band) -> list[Elevator]:
    """Elevators whose distance to ``new_plant`` falls in ``band``."""
    if not elevators:
        return []
    d = distance_matrix(_coords(elevators), _coords([new_plant]))[:, 0]
    return [e for e, di in zip(elevators, d) if band.contains(float(di))]


def read_plants(path) -> list[Plant]:
    """Read ``id,lat,lon,capacity_kbu_day,status,start_month[,state]``."""
    df = pd.read_csv(
        path, dtype={"id": str, "start_month": str, "state": str, "status": str}, float_precision="round_trip"
    )
    missing = {"id", "lat", "lon", "capacity_kbu_day", "status", "start_month"} - set(df.columns)
    if missing:
        raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
    plants = []
    for row in df.itertuples(index=False):
        start = row.start_month if isinstance(row.start_month, str) and row.start_month else None
        state = getattr(row, "state", None)
        state = state if isinstance(state, str) and state else None
        plants.append(
            Plant(
                id=row.id,
                location=GeoPoint(float(row.lat), float(row.lon)),
                capacity_kbu_day=float(row.capacity_kbu_day),
                status=row.status.strip(),
                start_month=pd.Period(start, freq="M") if start else None,
                state=state,
            )
        )
    ids = [p.id for p in plants]
    if len(set(ids)) != len(ids):
        raise DataValidationError(f"{path}: duplicate plant ids")
    return plants


def read_elevators(path) -> list[Elevator]:
    """Read ``id,lat,lon,state``."""
    df = pd.read_csv(path, dtype={"id": str, "state": str}, float_precision="round_trip")
    missing = {"id", "lat", "lon", "state"} - set(df.columns)
    if missing:
        raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
    if df["id"].duplicated().any():
        raise DataValidationError(f"{path}: duplicate elevator ids")
    return [
        Elevator(row.id, GeoPoint(float(row.lat), float(row.lon)), row.state)
        for row in df.itertuples(index=False)
    ]


def plants_frame(plants: Sequence[Plant]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "id": [p.id for p in plants],
            "lat": [p.location.lat for p in plants],
            "lon": [p.location.lon for p in plants],
            "capacity_kbu_day": [p.capacity_kbu_day for p in plants],
            "status": [p.status for p in plants],
            "start_month": [str(p.start_month) if p.start_month is not None else "" for p in plants],
            "state": [p.state or "" for p in plants],
        }
    )


def elevators_frame(elevators: Sequence[Elevator]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "id": [e.id for e in elevators],
            "lat": [e.location.lat for e in elevators],
            "lon": [e.location.lon for e in elevators],
            "state": [e.state for e in elevators],
        }
    )
