"""Monthly single-reservoir water-balance environment.

State transition for one month: evaporate from the start-of-month surface
area, apply the requested release clipped to the water available above the
dead pool, spill whatever would exceed next month's allowable storage, and
score the step as generated energy minus squared supply deficit minus a
penalty on outflow beyond the safe channel capacity.

Units: storage/volumes TAF, evaporation rates inches/month, elevations ft,
turbine flow cms, energy MWh (hourly) and GWh (monthly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Section, get_float, parse_blocks, require_section
from .errors import (
    ConfigInvalid,
    FlowExceedsTurbine,
    OutOfTable,
    StorageOutOfBounds,
)
from .hydrology import MONTH_NAMES, MONTHS_PER_YEAR

GRAVITY = 9.81            # m/s^2
WATER_DENSITY = 1000.0    # kg/m^3
FT_TO_M = 0.3048
HOURS_PER_MONTH = 720.0   # 30-day bridging month for rate <-> volume
CUBIC_M_PER_TAF = 1000.0 * 43560.0 * FT_TO_M**3
TAF_MONTH_TO_CMS = CUBIC_M_PER_TAF / (30.0 * 86400.0)


@dataclass(frozen=True)
class TurbineSpec:
    efficiency: float            # eta, dimensionless
    max_flow_cms: float          # turbine release capacity
    tailwater_elevation_ft: float


@dataclass
class ReservoirSpec:
    """Static physical and operational description of the reservoir."""

    capacity: float              # TAF
    min_storage: float           # TAF, dead pool
    bathymetry: np.ndarray       # (n, 3): storage TAF, elevation ft, area acres
    rule_curve: np.ndarray       # (12,) monthly maximum allowable storage, TAF
    evap_rates: np.ndarray       # (12,) monthly evaporation depth, inches
    demand: np.ndarray           # (12,) monthly target delivery, TAF
    turbine: TurbineSpec
    release_min: float           # TAF/month
    release_max: float           # TAF/month, safe channel capacity
    penalty_coefficient: float   # reward units per TAF of outflow beyond release_max

    def __post_init__(self) -> None:
        self.bathymetry = np.asarray(self.bathymetry, dtype=np.float64)
        self.rule_curve = np.asarray(self.rule_curve, dtype=np.float64)
        self.evap_rates = np.asarray(self.evap_rates, dtype=np.float64)
        self.demand = np.asarray(self.demand, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        if not self.min_storage < self.capacity:
            raise ConfigInvalid("min_storage must be below capacity")
        if self.bathymetry.ndim != 2 or self.bathymetry.shape[1] != 3 or self.bathymetry.shape[0] < 2:
            raise ConfigInvalid("bathymetry needs >= 2 rows of (storage, elevation, area)")
        for col, name in enumerate(("storage", "elevation", "area")):
            if np.any(np.diff(self.bathymetry[:, col]) <= 0):
                raise ConfigInvalid(f"bathymetry {name} column must be strictly increasing")
        if self.bathymetry[0, 0] > self.min_storage or self.bathymetry[-1, 0] < self.capacity:
            raise ConfigInvalid("bathymetry table must span [min_storage, capacity]")
        for arr, name in ((self.rule_curve, "rule_curve"), (self.evap_rates, "evaporation"),
                          (self.demand, "demand")):
            if arr.shape != (MONTHS_PER_YEAR,):
                raise ConfigInvalid(f"{name} must have 12 monthly values")
        if np.any(self.rule_curve <= self.min_storage) or np.any(self.rule_curve > self.capacity):
            raise ConfigInvalid("rule curve must satisfy min_storage < value <= capacity")
        if np.any(self.evap_rates < 0) or np.any(self.demand < 0):
            raise ConfigInvalid("evaporation rates and demands must be >= 0")
        if not 0.0 < self.turbine.efficiency <= 1.0:
            raise ConfigInvalid("turbine efficiency must be in (0, 1]")
        if self.turbine.max_flow_cms <= 0:
            raise ConfigInvalid("turbine capacity must be > 0")
        if not 0.0 <= self.release_min <= self.release_max:
            raise ConfigInvalid("need 0 <= release_min <= release_max")
        if self.penalty_coefficient < 0:
            raise ConfigInvalid("penalty coefficient must be >= 0")


@dataclass(frozen=True)
class EnvState:
    month_index: int   # 0..11, October = 0
    storage: float     # TAF
    step_count: int = 0


@dataclass(frozen=True)
class Observation:
    """Normalized 3-vector [d1, d2, c] the agents see."""

    d1: float
    d2: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.c], dtype=np.float64)


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    power_gwh: float
    deficit: float       # TAF
    spill: float         # TAF
    evaporation: float   # TAF
    release: float       # TAF
    done: bool


def encode_observation(state: EnvState, spec: ReservoirSpec) -> Observation:
    """Circular month encoding plus normalized storage, each in [0, 1]."""
    angle = 2.0 * math.pi * state.month_index / MONTHS_PER_YEAR
    d1 = (math.cos(angle) + 1.0) / 2.0
    d2 = (math.sin(angle) + 1.0) / 2.0
    c = (state.storage - spec.min_storage) / (spec.capacity - spec.min_storage)
    return Observation(d1, d2, c)


def interp_bathymetry(storage: float, spec: ReservoirSpec) -> tuple[float, float]:
    """(elevation ft, area acres) at `storage`, linear between table rows."""
    table = spec.bathymetry
    if storage < table[0, 0] or storage > table[-1, 0]:
        raise OutOfTable(
            f"storage {storage} TAF outside table span "
            f"[{table[0, 0]}, {table[-1, 0]}]"
        )
    elevation = float(np.interp(storage, table[:, 0], table[:, 1]))
    area = float(np.interp(storage, table[:, 0], table[:, 2]))
    return elevation, area


def evaporation_volume(state: EnvState, spec: ReservoirSpec) -> float:
    """Evaporated volume [TAF] from the start-of-month surface area."""
    _, area = interp_bathymetry(state.storage, spec)
    return spec.evap_rates[state.month_index] * area / 12.0 / 1000.0


def hydropower(head: float, turbine_flow: float, spec: ReservoirSpec) -> float:
    """Hourly energy production [MWh] at net head [m] and turbine flow [cms]."""
    if head < 0:
        raise ValueError("head must be >= 0")
    if turbine_flow < 0:
        raise ValueError("turbine flow must be >= 0")
    if turbine_flow > spec.turbine.max_flow_cms:
        raise FlowExceedsTurbine(
            f"turbine flow {turbine_flow} cms exceeds capacity {spec.turbine.max_flow_cms}"
        )
    return spec.turbine.efficiency * GRAVITY * WATER_DENSITY * head * turbine_flow * 1e-6


def reward(power: float, deficit: float, penalty: float) -> float:
    """Step reward: generated power [GWh] minus squared deficit [TAF] plus penalty."""
    if power < 0 or deficit < 0:
        raise ValueError("power and deficit must be >= 0")
    if penalty > 0:
        raise ValueError("penalty must be <= 0")
    return power - deficit * deficit + penalty


def step(state: EnvState, action: float, inflow: float, spec: ReservoirSpec) -> StepOutcome:
    """Advance the reservoir one month under a normalized release action.

    Infeasible requests are clipped, never rejected: evaporation and release
    are limited by the water available above the dead pool, and storage
    beyond next month's allowable maximum is spilled. Mass balance
    S' = S + Q - E - R - Spill closes exactly; the episode terminates after
    the 12th step.
    """
    if not 0.0 <= action <= 1.0:
        raise ValueError(f"action must be in [0, 1], got {action}")
    if inflow < 0:
        raise ValueError("inflow must be >= 0")
    i = state.month_index

    # The max/min guards pin the storage bounds exactly in floating point;
    # they shift mass-balance closure by at most a few ulps.
    headroom = max(0.0, state.storage + inflow - spec.min_storage)
    evap = min(evaporation_volume(state, spec), headroom)
    pre_release = state.storage + inflow - evap
    available = max(0.0, pre_release - spec.min_storage)

    requested = spec.release_min + action * (spec.release_max - spec.release_min)
    release = min(requested, available)

    after_release = max(pre_release - release, spec.min_storage)
    cap = spec.rule_curve[(i + 1) % MONTHS_PER_YEAR]
    next_storage = min(after_release, cap)
    spill = after_release - next_storage

    mean_storage = 0.5 * (state.storage + next_storage)
    elevation, _ = interp_bathymetry(mean_storage, spec)
    head_m = max(0.0, (elevation - spec.turbine.tailwater_elevation_ft) * FT_TO_M)
    turbine_flow = min(release * TAF_MONTH_TO_CMS, spec.turbine.max_flow_cms)
    power_gwh = hydropower(head_m, turbine_flow, spec) * HOURS_PER_MONTH / 1000.0

    deficit = max(0.0, spec.demand[i] - release)
    outflow = release + spill
    penalty = -spec.penalty_coefficient * max(0.0, outflow - spec.release_max)
    r = reward(power_gwh, deficit, penalty)

    next_state = EnvState(
        month_index=(i + 1) % MONTHS_PER_YEAR,
        storage=next_storage,
        step_count=state.step_count + 1,
    )
    return StepOutcome(
        next_state=next_state,
        reward=r,
        power_gwh=power_gwh,
        deficit=deficit,
        spill=spill,
        evaporation=evap,
        release=release,
        done=next_state.step_count >= MONTHS_PER_YEAR,
    )


def reset(spec: ReservoirSpec, initial_storage: float, start_month: int = 0) -> EnvState:
    """Fresh episode state at `start_month` with the given storage."""
    if not spec.min_storage <= initial_storage <= spec.capacity:
        raise StorageOutOfBounds(
            f"initial storage {initial_storage} outside "
            f"[{spec.min_storage}, {spec.capacity}]"
        )
    if not 0 <= start_month < MONTHS_PER_YEAR:
        raise ValueError("start_month must be in [0, 11]")
    return EnvState(month_index=start_month, storage=float(initial_storage), step_count=0)


def _monthly_block(section: Section, source: str) -> np.ndarray:
    values = np.full(MONTHS_PER_YEAR, np.nan)
    for row in section.rows:
        if len(row) != 2:
            raise ConfigInvalid(f"{source}: [{section.name}] rows must be 'month,value'")
        name = row[0].lower()
        if name not in MONTH_NAMES:
            raise ConfigInvalid(f"{source}: [{section.name}] unknown month {row[0]!r}")
        try:
            values[MONTH_NAMES.index(name)] = float(row[1])
        except ValueError:
            raise ConfigInvalid(
                f"{source}: [{section.name}] {row[1]!r} is not a number"
            ) from None
    if np.any(np.isnan(values)):
        missing = [MONTH_NAMES[k] for k in np.nonzero(np.isnan(values))[0]]
        raise ConfigInvalid(f"{source}: [{section.name}] missing month(s): {', '.join(missing)}")
    return values


def load_reservoir_spec(path: str | Path) -> ReservoirSpec:
    """Read a ReservoirSpec from its block-structured text description."""
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid(f"reservoir spec file not found: {path}")
    source = str(path)
    sections = parse_blocks(path.read_text(encoding="utf-8"), source)

    res = require_section(sections, "reservoir", source)
    turb = require_section(sections, "turbine", source)
    rel = require_section(sections, "release_bounds", source)
    bathy_sec = require_section(sections, "bathymetry", source)

    rows = []
    for row in bathy_sec.rows:
        if len(row) != 3:
            raise ConfigInvalid(f"{source}: [bathymetry] rows must be 'storage,elevation,area'")
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise ConfigInvalid(f"{source}: [bathymetry] non-numeric row {row}") from None

    return ReservoirSpec(
        capacity=get_float(res, "capacity", source),
        min_storage=get_float(res, "min_storage", source),
        bathymetry=np.array(rows),
        rule_curve=_monthly_block(require_section(sections, "rule_curve", source), source),
        evap_rates=_monthly_block(require_section(sections, "evaporation", source), source),
        demand=_monthly_block(require_section(sections, "demand", source), source),
        turbine=TurbineSpec(
            efficiency=get_float(turb, "efficiency", source),
            max_flow_cms=get_float(turb, "max_flow_cms", source),
            tailwater_elevation_ft=get_float(turb, "tailwater_elevation_ft", source),
        ),
        release_min=get_float(rel, "min", source),
        release_max=get_float(rel, "max", source),
        penalty_coefficient=get_float(res, "penalty_coefficient", source),
    )
