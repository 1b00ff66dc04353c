"""Synthetic elevator and futures data with known treatment effects.

The generated cash price is the active futures settlement plus a basis
built from a constant level, an optional summer-peaking seasonal term, a
distance-band effect around existing plants, an optional step effect
around a new plant and noise. Because every ingredient is known, the
true effects serve as oracles for the estimators.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd

from .data import WINDOW_DAYS, DidDataset
from .errors import DataValidationError
from .geo import BANDS, Band, Elevator, GeoPoint, Plant, distance_matrix, parse_band

STATE_CODES = ("IA", "IL", "NE", "KS", "ND", "MN", "SD", "MO", "IN", "OH")
SEASONAL_PEAK_DOY = 196  # mid-July


@dataclass
class NewPlantSpec:
    lat: float
    lon: float
    start_month: str
    tau: float
    radius_mi: float = 100.0


@dataclass
class Scenario:
    """Data-generating process description.

    ``effects`` maps each band to its basis premium in cents/bushel. The
    premium applies by distance to the nearest existing plant and is zero
    beyond the last band.
    """

    seed: int = 0
    lat_min: float = 38.0
    lat_max: float = 46.0
    lon_min: float = -100.0
    lon_max: float = -88.0
    n_plants: int = 6
    n_elevators: int = 300
    n_states: int = 1
    start_date: str = "2017-01-01"
    end_date: str = "2024-09-30"
    base_basis: float = -40.0
    seasonal_amplitude: float = 0.0
    noise_sd: float = 0.0
    noise_ar1: float = 0.0
    elevator_sd: float = 0.0
    missing_rate: float = 0.0
    futures_start: float = 1000.0
    futures_log_sd: float = 0.01
    futures_spread: float = 6.0
    effects: dict = field(default_factory=lambda: dict(zip(BANDS, (23.36, 20.94, 20.29, 13.19, 9.20))))
    new_plant: NewPlantSpec | None = None

    def __post_init__(self):
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise DataValidationError("region box is empty")
        if self.noise_sd < 0 or self.elevator_sd < 0:
            raise DataValidationError("noise standard deviations must be non-negative")
        if not -1 < self.noise_ar1 < 1:
            raise DataValidationError("noise_ar1 must lie in (-1, 1)")
        if not 0 <= self.missing_rate < 1:
            raise DataValidationError("missing_rate must lie in [0, 1)")
        if not 1 <= self.n_states <= len(STATE_CODES):
            raise DataValidationError(f"n_states must lie in [1, {len(STATE_CODES)}]")
        bands = sorted(self.effects)
        for lo, hi in zip(bands, bands[1:]):
            if lo.hi > hi.lo:
                raise DataValidationError("effect bands overlap")
        values = [self.effects[b] for b in bands]
        if any(b > a for a, b in zip(values, values[1:])):
            raise DataValidationError("effects must be nonincreasing in distance")
        if bands and bands[-1].hi > 100:
            raise DataValidationError("effects must vanish beyond 100 miles")

    def effect_at(self, distance_mi) -> np.ndarray:
        """Band premium for each distance (zero outside every band)."""
        d = np.asarray(distance_mi, dtype=float)
        out = np.zeros_like(d)
        for band, value in self.effects.items():
            out = np.where((d >= band.lo) & (d < band.hi), value, out)
        return out

    def calendar(self) -> pd.DatetimeIndex:
        return pd.bdate_range(self.start_date, self.end_date)

    def stream(self, *key: int) -> np.random.Generator:
        """Independent generator for a labelled sub-task."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, *key]))

    # flat key/value files -------------------------------------------------

    def to_config(self) -> str:
        lines = []
        for f in fields(self):
            if f.name in ("effects", "new_plant"):
                continue
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        for band in sorted(self.effects):
            lines.append(f"effect_{band.name} = {self.effects[band]}")
        if self.new_plant is not None:
            for f in fields(self.new_plant):
                lines.append(f"new_plant_{f.name} = {getattr(self.new_plant, f.name)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "Scenario":
        """Parse ``key = value`` lines; ``#`` starts a comment.

        ``effect_B<lo>_<hi>`` keys replace the whole effect profile and
        ``new_plant_*`` keys define the optional new plant.
        """
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.optionxform = str
        parser.read_string("[scenario]\n" + text)
        raw = dict(parser["scenario"])
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        effects = {}
        plant = {}
        for key, value in raw.items():
            if key.startswith("effect_"):
                effects[parse_band(key.removeprefix("effect_"))] = float(value)
            elif key.startswith("new_plant_"):
                plant[key.removeprefix("new_plant_")] = value
            elif key in types and key not in ("effects", "new_plant"):
                kind = types[key]
                if kind in ("int", int):
                    kwargs[key] = int(value)
                elif kind in ("float", float):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = value
            else:
                raise DataValidationError(f"unknown scenario key {key!r}")
        if effects:
            kwargs["effects"] = effects
        if plant:
            try:
                kwargs["new_plant"] = NewPlantSpec(
                    lat=float(plant["lat"]),
                    lon=float(plant["lon"]),
                    start_month=str(pd.Period(plant["start_month"], freq="M")),
                    tau=float(plant["tau"]),
                    radius_mi=float(plant.get("radius_mi", 100.0)),
                )
            except KeyError as exc:
                raise DataValidationError(f"new plant needs key new_plant_{exc.args[0]}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        return cls.from_config(Path(path).read_text())


def _state_for(scenario: Scenario, lon: float) -> str:
    width = (scenario.lon_max - scenario.lon_min) / scenario.n_states
    idx = min(int((lon - scenario.lon_min) // width), scenario.n_states - 1)
    return STATE_CODES[max(idx, 0)]


def generate_layout(scenario: Scenario) -> tuple[list[Plant], list[Elevator]]:
    """Uniform placement of existing plants and elevators inside the box.

    The optional new plant is appended to the plant list with id ``N1``.
    """
    if scenario.n_plants < 1 or scenario.n_elevators < 1:
        raise DataValidationError("need at least one plant and one elevator")
    rng = scenario.stream(0)
    s = scenario

    def points(n):
        return np.column_stack([rng.uniform(s.lat_min, s.lat_max, n), rng.uniform(s.lon_min, s.lon_max, n)])

    plant_xy = points(s.n_plants)
    capacity = np.round(rng.uniform(30, 300, s.n_plants))
    elev_xy = points(s.n_elevators)
    plants = [
        Plant(f"P{i + 1:02d}", GeoPoint(float(lat), float(lon)), float(cap), "existing", None, _state_for(s, lon))
        for i, ((lat, lon), cap) in enumerate(zip(plant_xy, capacity))
    ]
    if s.new_plant is not None:
        np_ = s.new_plant
        plants.append(
            Plant("N1", GeoPoint(np_.lat, np_.lon), 120.0, "new", pd.Period(np_.start_month, freq="M"), _state_for(s, np_.lon))
        )
    elevators = [
        Elevator(f"E{i + 1:04d}", GeoPoint(float(lat), float(lon)), _state_for(s, lon))
        for i, (lat, lon) in enumerate(elev_xy)
    ]
    return plants, elevators


def seasonal_term(scenario: Scenario, dates: pd.DatetimeIndex) -> np.ndarray:
    doy = np.asarray(dates.dayofyear, dtype=float)
    return scenario.seasonal_amplitude * np.cos(2 * np.pi * (doy - SEASONAL_PEAK_DOY) / 365.25)


def generate_futures(scenario: Scenario, dates: pd.DatetimeIndex) -> tuple[pd.DataFrame, np.ndarray]:
    """Two contracts per date with leadership alternating by calendar month.

    Returns the quotes frame and the active settlement per date.
    """
    rng = scenario.stream(1)
    steps = rng.normal(0.0, scenario.futures_log_sd, len(dates))
    steps[0] = 0.0
    near = scenario.futures_start * np.exp(np.cumsum(steps))
    far = near + scenario.futures_spread
    near_leads = (dates.month % 2) == 1
    hi, lo = 60_000, 25_000
    vol_near = np.where(near_leads, hi, lo)
    vol_far = np.where(near_leads, lo, hi)
    quotes = pd.DataFrame(
        {
            "date": np.repeat(dates.values, 2),
            "contract_id": np.tile(["C1", "C2"], len(dates)),
            "settlement_cents": np.column_stack([near, far]).ravel(),
            "volume": np.column_stack([vol_near, vol_far]).ravel(),
        }
    )
    return quotes, np.where(near_leads, near, far)


def true_basis(scenario: Scenario, plants, elevators, dates: pd.DatetimeIndex) -> np.ndarray:
    """Noise-free basis, elevators by dates."""
    existing = [p for p in plants if not p.is_new]
    new = [p for p in plants if p.is_new]
    exy = np.array([[e.location.lat, e.location.lon] for e in elevators])
    pxy = np.array([[p.location.lat, p.location.lon] for p in existing])
    nearest = distance_matrix(exy, pxy).min(axis=1)
    level = scenario.base_basis + scenario.effect_at(nearest)
    basis = level[:, None] + seasonal_term(scenario, dates)[None, :]
    if new and scenario.new_plant is not None:
        spec = scenario.new_plant
        d_new = distance_matrix(exy, np.array([[new[0].location.lat, new[0].location.lon]]))[:, 0]
        start = pd.Period(spec.start_month, freq="M").start_time
        on = np.asarray(dates >= start)
        basis = basis + spec.tau * np.outer(d_new < spec.radius_mi, on)
    return basis


def generate_basis_panel(scenario: Scenario, layout) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Daily cash prices and futures quotes for a layout.

    Cash is rounded nowhere; it equals active futures plus basis. Each
    elevator draws its noise and missingness from its own substream.
    """
    plants, elevators = layout
    dates = scenario.calendar()
    quotes, active = generate_futures(scenario, dates)
    basis = true_basis(scenario, plants, elevators, dates)
    n_days = len(dates)
    frames = []
    rho = scenario.noise_ar1
    innov_sd = scenario.noise_sd * np.sqrt(1 - rho**2)
    for i, elev in enumerate(elevators):
        rng = scenario.stream(2, i)
        offset = rng.normal(0.0, scenario.elevator_sd) if scenario.elevator_sd > 0 else 0.0
        if scenario.noise_sd > 0:
            eps = rng.normal(0.0, 1.0, n_days)
            noise = np.empty(n_days)
            noise[0] = scenario.noise_sd * eps[0]
            for t in range(1, n_days):
                noise[t] = rho * noise[t - 1] + innov_sd * eps[t]
        else:
            noise = np.zeros(n_days)
        cash = active + basis[i] + offset + noise
        keep = rng.uniform(size=n_days) >= scenario.missing_rate if scenario.missing_rate > 0 else np.ones(n_days, bool)
        frames.append(pd.DataFrame({"date": dates[keep], "elevator_id": elev.id, "cash_cents": cash[keep]}))
    cash = pd.concat(frames, ignore_index=True)
    return cash, quotes


@dataclass(frozen=True)
class OracleEntry:
    band: Band
    effect: float
    new_plant_att: float | None = None


def oracle_att(scenario: Scenario, band: Band) -> OracleEntry:
    """True band premium and, with a new plant, the true ATT inside its radius."""
    if band not in scenario.effects:
        raise DataValidationError(f"band {band} is not covered by the scenario effects")
    tau = None
    if scenario.new_plant is not None and band.hi <= scenario.new_plant.radius_mi:
        tau = scenario.new_plant.tau
    return OracleEntry(band, float(scenario.effects[band]), tau)


def oracle_frame(scenario: Scenario) -> pd.DataFrame:
    rows = []
    for band in sorted(scenario.effects):
        entry = oracle_att(scenario, band)
        rows.append(
            {
                "band": band.name,
                "effect": entry.effect,
                "new_plant_att": "" if entry.new_plant_att is None else entry.new_plant_att,
            }
        )
    return pd.DataFrame(rows, columns=["band", "effect", "new_plant_att"])


def generate_event_dataset(
    n_treated: int,
    n_control: int,
    tau: float,
    noise_sd: float = 0.0,
    seed: int = 0,
    unit_sd: float = 5.0,
    n_divergent: int = 0,
    divergent_slope: float = 0.0,
    common_sd: float = 2.0,
) -> DidDataset:
    """Balanced event window on relative days -30..-1, 1..30.

    Outcomes are unit level + common day shock + ``tau`` for treated units
    after the start + noise. The last ``n_divergent`` controls follow an
    extra linear trend of ``divergent_slope`` per day, breaking parallel
    trends for them only.
    """
    rng = np.random.default_rng(seed)
    days = np.r_[np.arange(-WINDOW_DAYS, 0), np.arange(1, WINDOW_DAYS + 1)]
    n = n_treated + n_control
    level = rng.normal(-40.0, unit_sd, n)
    common = np.cumsum(rng.normal(0.0, common_sd, len(days)))
    treated = np.r_[np.ones(n_treated, int), np.zeros(n_control, int)]
    post = (days > 0).astype(int)
    Y = level[:, None] + common[None, :] + tau * np.outer(treated, post)
    if n_divergent:
        Y[n - n_divergent:] += divergent_slope * days[None, :]
    if noise_sd > 0:
        Y = Y + rng.normal(0.0, noise_sd, Y.shape)
    unit = np.array([f"{'T' if t else 'C'}{i:04d}" for i, t in enumerate(treated)])
    frame = pd.DataFrame(
        {
            "unit_id": np.repeat(unit, len(days)),
            "event_id": "sim",
            "elevator_id": np.repeat(unit, len(days)),
            "relative_day": np.tile(days, n),
            "treatment": np.repeat(treated, len(days)),
            "post": np.tile(post, n),
            "basis": Y.ravel(),
        }
    )
    return DidDataset(frame)
