"""Tests for the standard operating policy and the trajectory runner."""

import numpy as np
import pytest

from resop.baselines import (
    AgentPolicy,
    RandomPolicy,
    ReplayPolicy,
    SopInputs,
    SopPolicy,
    run_policy,
    sop_release,
)
from resop.errors import LengthMismatch
from resop.hydrology import FlowSeries, make_rng
from resop.agents import make_agent
from tests.test_reservoir import simple_spec


def brute_force_sop(available, demand, capacity, floor, grid=2001):
    """Enumeration oracle: maximize delivered water min(r, demand) over
    feasible releases, preferring the smallest maximizer, then spill the
    excess above capacity."""
    usable = max(0.0, available - floor)
    candidates = sorted(set(np.linspace(0.0, usable, grid)) | {min(demand, usable)})
    best_r, best_score = None, -1.0
    for r in candidates:
        score = min(r, demand)
        if score > best_score + 1e-15:
            best_r, best_score = r, score
    spill = max(0.0, available - best_r - capacity)
    return best_r, spill, available - best_r - spill


class TestSopRelease:
    def test_drain_branch(self):
        rel, spill, end = sop_release(SopInputs(103.0, 5.0, 900.0, 100.0))
        assert (rel, spill, end) == (3.0, 0.0, 100.0)

    def test_store_branch(self):
        rel, spill, end = sop_release(SopInputs(150.0, 5.0, 900.0, 100.0))
        assert (rel, spill) == (5.0, 0.0)
        assert end == 145.0

    def test_spill_branch(self):
        rel, spill, end = sop_release(SopInputs(120.0, 5.0, 100.0, 0.0))
        assert (rel, spill, end) == (5.0, 15.0, 100.0)

    def test_branch_boundary_continuity(self):
        floor, demand, cap = 100.0, 40.0, 500.0
        eps = 1e-9
        for boundary in (floor + demand, cap + demand):
            lo = sop_release(SopInputs(boundary - eps, demand, cap, floor))
            hi = sop_release(SopInputs(boundary + eps, demand, cap, floor))
            for a, b in zip(lo, hi):
                assert a == pytest.approx(b, abs=1e-6)

    def test_piecewise_slopes(self):
        floor, demand, cap = 100.0, 40.0, 500.0
        drain = [sop_release(SopInputs(w, demand, cap, floor))[0] for w in (110.0, 120.0)]
        assert drain[1] - drain[0] == pytest.approx(10.0)  # slope 1 in W
        store = [sop_release(SopInputs(w, demand, cap, floor))[0] for w in (200.0, 300.0)]
        assert store[1] - store[0] == 0.0
        spills = [sop_release(SopInputs(w, demand, cap, floor))[1] for w in (600.0, 700.0)]
        assert spills[1] - spills[0] == pytest.approx(100.0)  # slope 1 in W

    def test_matches_brute_force_oracle(self):
        rng = make_rng(7)
        for _ in range(10_000):
            floor = float(rng.uniform(0.0, 200.0))
            cap = floor + float(rng.uniform(1.0, 900.0))
            demand = float(rng.uniform(0.0, 400.0))
            available = float(rng.uniform(floor * 0.0, 1500.0))
            got = sop_release(SopInputs(available, demand, cap, floor))
            want = brute_force_sop(available, demand, cap, floor)
            assert got[0] == want[0]
            assert got[1] == want[1]
            assert got[2] == want[2]

    def test_never_stores_above_capacity_nor_over_releases(self):
        rng = make_rng(8)
        for _ in range(2000):
            floor = float(rng.uniform(0.0, 100.0))
            cap = floor + float(rng.uniform(10.0, 800.0))
            demand = float(rng.uniform(0.0, 300.0))
            available = float(rng.uniform(0.0, 1500.0))
            rel, spill, end = sop_release(SopInputs(available, demand, cap, floor))
            assert end <= cap + 1e-9
            assert rel <= max(0.0, available - floor) + 1e-12
            assert spill >= 0.0


def flat_series(n_years=2, level=60.0) -> FlowSeries:
    return FlowSeries(2000, 0, np.full(12 * n_years, level))


class TestRunPolicy:
    def test_sop_zero_demand_no_deficit(self):
        spec = simple_spec(demand=np.zeros(12))
        traj = run_policy(SopPolicy(), spec, flat_series(), initial_storage=400.0)
        assert np.all(traj.deficit == 0.0)

    def test_random_policy_deterministic(self):
        spec = simple_spec()
        a = run_policy(RandomPolicy(5), spec, flat_series(), initial_storage=400.0)
        b = run_policy(RandomPolicy(5), spec, flat_series(), initial_storage=400.0)
        np.testing.assert_array_equal(a.release, b.release)

    def test_replaying_sop_releases_reproduces_sop(self):
        spec = simple_spec()
        series = flat_series(3, 80.0)
        sop_traj = run_policy(SopPolicy(), spec, series, initial_storage=500.0)
        replay = ReplayPolicy(sop_traj.release.copy())
        replay_traj = run_policy(replay, spec, series, initial_storage=500.0)
        np.testing.assert_allclose(replay_traj.release, sop_traj.release, atol=0)
        np.testing.assert_allclose(replay_traj.storage, sop_traj.storage, atol=0)
        assert replay_traj.clipped_steps == 0

    def test_replay_infeasible_releases_clipped_and_counted(self):
        spec = simple_spec()
        series = flat_series(1, 10.0)
        # ask for far more water than exists
        replay = ReplayPolicy(np.full(12, 900.0))
        traj = run_policy(replay, spec, series, initial_storage=120.0)
        assert traj.clipped_steps > 0
        assert np.all(traj.storage >= spec.min_storage - 1e-12)

    def test_replay_length_mismatch(self):
        spec = simple_spec()
        with pytest.raises(LengthMismatch):
            run_policy(ReplayPolicy(np.ones(11)), spec, flat_series(1))

    def test_partial_year_rejected(self):
        spec = simple_spec()
        with pytest.raises(LengthMismatch):
            run_policy(SopPolicy(), spec, FlowSeries(2000, 0, np.ones(13)))

    def test_sop_outcomes_match_sop_release_formula(self):
        """The environment step reproduces sop_release's outputs exactly."""
        spec = simple_spec(demand=np.full(12, 120.0))
        rng = make_rng(9)
        series = FlowSeries(2000, 0, rng.uniform(5.0, 700.0, size=36))
        traj = run_policy(SopPolicy(), spec, series, initial_storage=300.0)
        storage = 300.0
        for k in range(36):
            month = k % 12
            available = storage + series.values[k] - traj.evaporation[k]
            cap = spec.rule_curve[(month + 1) % 12]
            rel, spill, end = sop_release(SopInputs(
                available, float(spec.demand[month]), float(cap), spec.min_storage))
            assert traj.release[k] == pytest.approx(rel, abs=1e-9)
            assert traj.spill[k] == pytest.approx(spill, abs=1e-9)
            assert traj.storage[k] == pytest.approx(end, abs=1e-9)
            storage = traj.storage[k]

    def test_agent_policy_wraps_evaluate_action(self):
        spec = simple_spec()
        agent = make_agent("td3", seed=3)
        traj = run_policy(AgentPolicy(agent), spec, flat_series(), initial_storage=400.0)
        assert len(traj) == 24
        assert traj.demand.shape == (24,)
