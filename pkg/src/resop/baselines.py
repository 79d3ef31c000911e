"""Non-learning reference policies and the closed-loop trajectory runner.

All policies go through the same environment step as the trained agents:
a policy maps (state, inflow, spec) to a normalized action, so every method
faces the identical water balance and penalty accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .hydrology import MONTHS_PER_YEAR, FlowSeries, make_rng
from .reservoir import (
    EnvState,
    ReservoirSpec,
    StepOutcome,
    encode_observation,
    evaporation_volume,
    reset,
    step,
)

DEFAULT_INITIAL_STORAGE_FRACTION = 0.6  # of capacity, used when not supplied


@dataclass(frozen=True)
class SopInputs:
    """Inputs to one standard-operating-policy decision.

    available_water is W = S + Q - E [TAF], already net of evaporation;
    allowable_capacity C is the flood-control storage limit the month must
    end at or below.
    """

    available_water: float
    demand: float
    allowable_capacity: float
    floor: float

    def __post_init__(self) -> None:
        if self.demand < 0:
            raise ValueError("demand must be >= 0")
        if self.allowable_capacity <= self.floor:
            raise ValueError("allowable capacity must exceed the floor")


def sop_release(inp: SopInputs) -> tuple[float, float, float]:
    """(release, spill, end storage) under the standard operating policy.

    Deliver the target demand when possible, draining to the floor when
    water is short; hold any surplus up to the allowable capacity and spill
    the rest.
    """
    usable = max(0.0, inp.available_water - inp.floor)
    if usable <= inp.demand:
        release, spill = usable, 0.0
    elif inp.available_water - inp.demand <= inp.allowable_capacity:
        release, spill = inp.demand, 0.0
    else:
        release = inp.demand
        spill = inp.available_water - inp.demand - inp.allowable_capacity
    return release, spill, inp.available_water - release - spill


class SopPolicy:
    """Environment-facing SOP: converts the target release to an action.

    Evaporation is charged before the decision and the capacity is next
    month's rule-curve value, exactly as the environment applies them, so
    stepping the environment reproduces sop_release's outputs.
    """

    def action(self, state: EnvState, inflow: float, spec: ReservoirSpec) -> float:
        evap = evaporation_volume(state, spec)
        evap = min(evap, max(0.0, state.storage + inflow - spec.min_storage))
        available = state.storage + inflow - evap
        cap = spec.rule_curve[(state.month_index + 1) % MONTHS_PER_YEAR]
        release, _, _ = sop_release(SopInputs(
            available_water=available,
            demand=float(spec.demand[state.month_index]),
            allowable_capacity=float(cap),
            floor=spec.min_storage,
        ))
        target = float(np.clip(release, spec.release_min, spec.release_max))
        return (target - spec.release_min) / (spec.release_max - spec.release_min)


class RandomPolicy:
    """Uniform action in [0, 1] from a seeded stream."""

    def __init__(self, seed: int = 0):
        self._rng = make_rng(seed)

    def action(self, state: EnvState, inflow: float, spec: ReservoirSpec) -> float:
        return float(self._rng.uniform(0.0, 1.0))


class ReplayPolicy:
    """Replays a recorded release series, clipping to feasibility."""

    def __init__(self, releases: np.ndarray):
        self.releases = np.asarray(releases, dtype=np.float64)
        self._cursor = 0
        self.clipped_steps = 0

    def action(self, state: EnvState, inflow: float, spec: ReservoirSpec) -> float:
        recorded = float(self.releases[self._cursor])
        self._cursor += 1
        target = float(np.clip(recorded, spec.release_min, spec.release_max))
        return (target - spec.release_min) / (spec.release_max - spec.release_min)

    def note_outcome(self, recorded: float, achieved: float) -> None:
        if abs(recorded - achieved) > 1e-9:
            self.clipped_steps += 1


class AgentPolicy:
    """Deterministic evaluation wrapper around a trained agent."""

    def __init__(self, agent):
        self.agent = agent

    def action(self, state: EnvState, inflow: float, spec: ReservoirSpec) -> float:
        return self.agent.act(encode_observation(state, spec).as_array())


@dataclass
class Trajectory:
    """Per-month outcomes of one closed-loop simulation."""

    start_year: int
    start_month: int
    storage: np.ndarray       # end-of-month storage, TAF
    release: np.ndarray       # TAF
    spill: np.ndarray         # TAF
    deficit: np.ndarray       # TAF
    evaporation: np.ndarray   # TAF
    power_gwh: np.ndarray
    reward: np.ndarray
    demand: np.ndarray        # TAF, the target that month
    clipped_steps: int = 0

    def __len__(self) -> int:
        return int(self.storage.size)

    @property
    def n_years(self) -> int:
        return len(self) // MONTHS_PER_YEAR


def run_policy(
    policy,
    spec: ReservoirSpec,
    series: FlowSeries,
    initial_storage: float | None = None,
    replay_releases: np.ndarray | None = None,
) -> Trajectory:
    """Step the environment with a policy's actions over the whole series.

    The series length must be a multiple of 12. For ReplayPolicy, pass the
    recorded releases via the policy itself; any step whose achieved release
    differs from the recorded one is counted in `clipped_steps`.
    """
    n = len(series)
    if n % MONTHS_PER_YEAR != 0:
        raise LengthMismatch(f"series length {n} is not a multiple of 12")
    if isinstance(policy, ReplayPolicy) and policy.releases.size != n:
        raise LengthMismatch(
            f"replay series has {policy.releases.size} releases for {n} inflow months"
        )
    if initial_storage is None:
        initial_storage = DEFAULT_INITIAL_STORAGE_FRACTION * spec.capacity
    state = reset(spec, initial_storage, series.start_month)

    outcomes: list[StepOutcome] = []
    for k in range(n):
        a = policy.action(state, float(series.values[k]), spec)
        out = step(state, a, float(series.values[k]), spec)
        if isinstance(policy, ReplayPolicy):
            policy.note_outcome(float(policy.releases[k]), out.release)
        outcomes.append(out)
        state = out.next_state

    months = np.arange(n)
    demand = spec.demand[(series.start_month + months) % MONTHS_PER_YEAR]
    return Trajectory(
        start_year=series.start_year,
        start_month=series.start_month,
        storage=np.array([o.next_state.storage for o in outcomes]),
        release=np.array([o.release for o in outcomes]),
        spill=np.array([o.spill for o in outcomes]),
        deficit=np.array([o.deficit for o in outcomes]),
        evaporation=np.array([o.evaporation for o in outcomes]),
        power_gwh=np.array([o.power_gwh for o in outcomes]),
        reward=np.array([o.reward for o in outcomes]),
        demand=demand.copy(),
        clipped_steps=policy.clipped_steps if isinstance(policy, ReplayPolicy) else 0,
    )
