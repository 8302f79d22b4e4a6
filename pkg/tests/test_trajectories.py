import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mergegame.dynamics import Control, VehicleParams, VehicleState, propagate
from mergegame.trajectories import (
    InfeasibleStepError,
    Maneuver,
    Trajectory,
    TrajectoryGenConfig,
    generate_longitudinal_set,
    generate_merge_set,
    recover_controls,
    sample_merge_set,
    solve_quintic,
)

PARAMS = VehicleParams()
CFG = TrajectoryGenConfig()


# ---------------------------------------------------------------------------
# quintic boundary-value problems


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-30.0, 30.0), min_size=12, max_size=12), st.floats(0.5, 6.0))
def test_quintic_matches_boundaries(vals, T):
    ini, term = vals[:6], vals[6:]
    q = solve_quintic(ini, term, T)
    x0, y0, xd0, yd0 = q.eval(0.0)
    xT, yT, xdT, ydT = q.eval(T)
    assert x0 == pytest.approx(ini[0], abs=1e-8)
    assert xd0 == pytest.approx(ini[1], abs=1e-8)
    assert y0 == pytest.approx(ini[3], abs=1e-8)
    assert yd0 == pytest.approx(ini[4], abs=1e-8)
    assert xT == pytest.approx(term[0], abs=1e-6)
    assert xdT == pytest.approx(term[1], abs=1e-6)
    assert yT == pytest.approx(term[3], abs=1e-6)
    assert ydT == pytest.approx(term[4], abs=1e-6)


def test_quintic_rest_to_rest_closed_form():
    # y(u*T) = W * (10u^3 - 15u^4 + 6u^5) for a rest-to-rest transition of width W
    W, T = 3.6, 3.0
    q = solve_quintic((0, 0, 0, 0.0, 0, 0), (0, 0, 0, W, 0, 0), T)
    for u in np.linspace(0.0, 1.0, 31):
        expected = W * (10 * u**3 - 15 * u**4 + 6 * u**5)
        assert q.eval(u * T)[1] == pytest.approx(expected, abs=1e-9)


def test_quintic_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_quintic([0] * 6, [0] * 6, 0.0)
    with pytest.raises(ValueError):
        solve_quintic([np.inf] + [0] * 5, [0] * 6, 1.0)


# ---------------------------------------------------------------------------
# longitudinal set


def test_longitudinal_set_cardinality_and_profiles():
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    trajs = generate_longitudinal_set(s, CFG, PARAMS)
    assert len(trajs) == len(CFG.accel_levels) ** CFG.N  # 3^4 = 81
    assert all(t.maneuver.kind == "lane_keep" for t in trajs)
    assert all(t.states.shape == (CFG.N + 1, 4) for t in trajs)
    # constant-speed profile is present and exact
    flat = [t for t in trajs if np.allclose(t.controls[:, 0], 0.0)]
    assert len(flat) == 1
    assert np.allclose(flat[0].states[:, 0], 20.0 * np.arange(CFG.N + 1))


def test_longitudinal_set_speed_clamp_records_effective_accel():
    s = VehicleState(0.0, 0.0, 31.0, 0.0)
    trajs = generate_longitudinal_set(s, CFG, PARAMS)
    for t in trajs:
        assert np.all(t.states[:, 2] <= PARAMS.v_max + 1e-12)
        # controls must reproduce the stored speeds
        assert np.allclose(np.diff(t.states[:, 2]), t.controls[:, 0] * CFG.dT, atol=1e-12)


# ---------------------------------------------------------------------------
# merge set composition


def test_merge_set_composition_not_mid_change():
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    trajs = generate_merge_set(s, None, CFG, PARAMS)
    kinds = [t.maneuver.kind for t in trajs]
    n_keep = kinds.count("lane_keep")
    n_change = kinds.count("lane_change")
    assert n_keep == 81
    assert 1 <= n_change <= 81  # profiles without an in-bounds control fit are dropped
    assert n_keep + n_change == len(trajs)
    # every change candidate starts its lateral traverse immediately
    assert all(t.maneuver.start_step == 0 for t in trajs if t.maneuver.kind == "lane_change")
    for t in trajs:
        if t.maneuver.kind == "lane_change":
            assert t.states[-1, 1] == pytest.approx(CFG.target_lane_y, abs=1e-6)


def test_merge_set_composition_mid_change():
    s = VehicleState(30.0, 1.2, 20.0, 0.05)
    trajs = generate_merge_set(s, 1.0, CFG, PARAMS)
    kinds = {t.maneuver.kind for t in trajs}
    assert kinds <= {"continue_change", "abort"}
    assert "continue_change" in kinds and "abort" in kinds
    for t in trajs:
        target = CFG.target_lane_y if t.maneuver.kind == "continue_change" else CFG.origin_lane_y
        assert t.states[-1, 1] == pytest.approx(target, abs=1e-6)


def test_merge_set_rejects_bad_progress():
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    with pytest.raises(ValueError):
        generate_merge_set(s, CFG.T_lc, CFG, PARAMS)
    with pytest.raises(ValueError):
        generate_merge_set(s, -0.1, CFG, PARAMS)


def test_sampled_merge_set_full_cardinality():
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    trajs = sample_merge_set(s, None, CFG, PARAMS)
    kinds = [t.maneuver.kind for t in trajs]
    assert kinds.count("lane_keep") == 81
    assert kinds.count("lane_change") == 81  # sampled set never drops profiles
    assert len(trajs) == 162


def test_realized_changes_are_control_consistent():
    """Stored controls of a realized lane change must reproduce the stored states under
    sub-stepped Euler propagation."""
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    trajs = [t for t in generate_merge_set(s, None, CFG, PARAMS) if t.maneuver.kind == "lane_change"]
    t = trajs[0]
    cur = s
    for i in range(t.horizon):
        cur = propagate(cur, t.control_at(i), PARAMS, CFG.dT, CFG.substep)
        assert cur.x == pytest.approx(t.states[i + 1, 0], abs=1e-6)
        assert cur.y == pytest.approx(t.states[i + 1, 1], abs=1e-6)


def test_recover_controls_round_trip():
    s = VehicleState(0.0, 0.0, 20.0, 0.0)
    trajs = [t for t in generate_merge_set(s, None, CFG, PARAMS) if t.maneuver.kind == "lane_change"]
    t = trajs[len(trajs) // 2]
    controls = recover_controls(t, PARAMS)
    assert len(controls) == t.horizon
    for u, v in zip(controls, t.controls):
        assert u.a == pytest.approx(v[0], abs=1e-6)
        assert u.delta_f == pytest.approx(v[1], abs=1e-6)


def test_recover_controls_rejects_teleport():
    states = np.array([[0.0, 0.0, 20.0, 0.0], [500.0, 0.0, 20.0, 0.0]])
    t = Trajectory(states=states, controls=np.zeros((1, 2)), maneuver=Maneuver("lane_keep"), dt=1.0)
    with pytest.raises(InfeasibleStepError):
        recover_controls(t, PARAMS)


def test_maneuver_and_config_validation():
    with pytest.raises(ValueError):
        Maneuver("drift")
    with pytest.raises(ValueError):
        TrajectoryGenConfig(N=2, T_lc=3.0, dT=1.0)  # horizon shorter than a lane change
    with pytest.raises(ValueError):
        TrajectoryGenConfig(accel_levels=())
