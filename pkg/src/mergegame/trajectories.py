"""Finite trajectory action sets: longitudinal profiles for lane-keeping vehicles and
quintic-polynomial lane-change / abort maneuvers for the merging vehicle.

Lane changes always begin at the current step (deferring a change is expressed by picking a
lane-keep trajectory now and a change at a later re-plan), so every change candidate's lateral
traverse lies inside the planning horizon and gets fully safety-checked. During a change the
longitudinal acceleration profile is free while the lateral motion follows a quintic
polynomial, so the change set carries the same |A|^N longitudinal variety as lane-keeping.

Set cardinalities at a given configuration (A = accel_levels, N = planning steps):

* longitudinal set: |A|^N
* merge set, not mid-change: |A|^N lane-keep + |A|^N lane-change
* merge set, mid-change: |A|^N continue-change + |A|^N abort

minus any candidates dropped for violating actuation or speed limits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import Control, VehicleParams, VehicleState, propagate, step_longitudinal

FIT_TOL = 1e-9  # position tolerance when inverting the dynamics for one step


class InfeasibleStepError(ValueError):
    """A trajectory step cannot be realized within actuation bounds."""

    def __init__(self, step: int, msg: str = ""):
        self.step = step
        super().__init__(f"step {step} infeasible{': ' + msg if msg else ''}")


@dataclass(frozen=True)
class Maneuver:
    kind: str  # "lane_keep" | "lane_change" | "continue_change" | "abort"
    start_step: int = 0  # sample step at which the lateral segment begins

    def __post_init__(self):
        if self.kind not in ("lane_keep", "lane_change", "continue_change", "abort"):
            raise ValueError(f"unknown maneuver kind {self.kind!r}")


@dataclass
class Trajectory:
    """N+1 states at dt spacing plus the N controls that realize them under Euler propagation."""

    states: np.ndarray   # (N+1, 4) rows [x, y, v, psi]
    controls: np.ndarray  # (N, 2) rows [a, delta_f]
    maneuver: Maneuver
    dt: float

    @property
    def horizon(self) -> int:
        return len(self.controls)

    def state_at(self, i: int) -> VehicleState:
        return VehicleState.from_array(self.states[i])

    def control_at(self, i: int) -> Control:
        return Control(float(self.controls[i, 0]), float(self.controls[i, 1]))


@dataclass(frozen=True)
class TrajectoryGenConfig:
    N: int = 4
    dT: float = 1.0
    accel_levels: Tuple[float, ...] = (-2.0, 0.0, 2.0)
    T_lc: float = 3.0
    lane_width: float = 3.6
    origin_lane_y: float = 0.0
    target_lane_y: float = 3.6
    substep: float = 0.1

    def __post_init__(self):
        if not self.accel_levels:
            raise ValueError("accel_levels must be non-empty")
        if self.N < math.ceil(self.T_lc / self.dT):
            raise ValueError("planning horizon must cover a complete lane change")


@dataclass
class QuinticSegment:
    ax: np.ndarray  # coefficients a0..a5 of x(z)
    ay: np.ndarray  # coefficients b0..b5 of y(z)
    duration: float

    def eval(self, z: float) -> Tuple[float, float, float, float]:
        """(x, y, xdot, ydot) at segment time z."""
        powers = np.array([1.0, z, z**2, z**3, z**4, z**5])
        dpowers = np.array([0.0, 1.0, 2 * z, 3 * z**2, 4 * z**3, 5 * z**4])
        return (
            float(self.ax @ powers),
            float(self.ay @ powers),
            float(self.ax @ dpowers),
            float(self.ay @ dpowers),
        )


def solve_quintic(ini: Sequence[float], term: Sequence[float], duration: float) -> QuinticSegment:
    """Coefficients of 5th-order polynomials x(z), y(z) matching the boundary conditions.

    Boundaries are (x, xdot, xddot, y, ydot, yddot) imposed at z = 0 and z = duration.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    ini = np.asarray(ini, dtype=float)
    term = np.asarray(term, dtype=float)
    if not (np.all(np.isfinite(ini)) and np.all(np.isfinite(term))):
        raise ValueError("non-finite boundary conditions")
    T = duration
    M = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, T, T**2, T**3, T**4, T**5],
        [0, 1, 2 * T, 3 * T**2, 4 * T**3, 5 * T**4],
        [0, 0, 2, 6 * T, 12 * T**2, 20 * T**3],
    ])
    ax = np.linalg.solve(M, np.array([ini[0], ini[1], ini[2], term[0], term[1], term[2]]))
    ay = np.linalg.solve(M, np.array([ini[3], ini[4], ini[5], term[3], term[4], term[5]]))
    return QuinticSegment(ax=ax, ay=ay, duration=duration)


def generate_longitudinal_set(
    state: VehicleState, cfg: TrajectoryGenConfig, params: VehicleParams
) -> List[Trajectory]:
    """One lane-keeping trajectory per acceleration profile (|accel_levels|^N of them)."""
    profiles = np.array(list(itertools.product(cfg.accel_levels, repeat=cfg.N)))
    n = len(profiles)
    states = np.zeros((n, cfg.N + 1, 4))
    controls = np.zeros((n, cfg.N, 2))
    states[:, 0] = state.as_array()
    x = np.full(n, state.x)
    v = np.full(n, state.v)
    for tau in range(cfg.N):
        v_next = np.clip(v + profiles[:, tau] * cfg.dT, params.v_min, params.v_max)
        x = x + 0.5 * (v + v_next) * cfg.dT
        controls[:, tau, 0] = (v_next - v) / cfg.dT  # effective accel after clamping
        v = v_next
        states[:, tau + 1, 0] = x
        states[:, tau + 1, 1] = state.y
        states[:, tau + 1, 2] = v
        states[:, tau + 1, 3] = state.psi
    return [
        Trajectory(states=states[i], controls=controls[i], maneuver=Maneuver("lane_keep"), dt=cfg.dT)
        for i in range(n)
    ]


def _fit_step(
    s: VehicleState,
    target_x: float,
    target_y: float,
    v_hint: float,
    params: VehicleParams,
    dt: float,
    substep: float,
) -> Optional[Tuple[Control, VehicleState]]:
    """Find a constant (a, delta_f) whose sub-stepped Euler propagation lands on the target position.

    Returns None when no in-bounds control realizes the step. If the exact fit would
    breach the speed limits, acceleration is clamped and only the lateral target is matched.
    """
    a = max(-params.a_bound, min(params.a_bound, (v_hint - s.v) / dt))
    delta = 0.0
    h = 1e-6
    converged = False
    for _ in range(25):
        end = propagate(s, Control(a, delta), params, dt, substep)
        ex, ey = end.x - target_x, end.y - target_y
        if abs(ex) < FIT_TOL and abs(ey) < FIT_TOL:
            converged = True
            break
        ea = propagate(s, Control(a + h, delta), params, dt, substep)
        ed = propagate(s, Control(a, delta + h), params, dt, substep)
        J = np.array([
            [(ea.x - end.x) / h, (ed.x - end.x) / h],
            [(ea.y - end.y) / h, (ed.y - end.y) / h],
        ])
        try:
            da, ddelta = np.linalg.solve(J, [-ex, -ey])
        except np.linalg.LinAlgError:
            return None
        if not (math.isfinite(da) and math.isfinite(ddelta)):
            return None
        a += float(da)
        delta += float(ddelta)
        if abs(delta) > 4 * params.delta_bound or abs(a) > 4 * params.a_bound:
            return None
    if not converged:
        return None
    v_next = s.v + a * dt
    if v_next < params.v_min - 1e-9 or v_next > params.v_max + 1e-9:
        # clamp speed, refit steering against the lateral target only
        a = (min(max(v_next, params.v_min), params.v_max) - s.v) / dt
        for _ in range(25):
            end = propagate(s, Control(a, delta), params, dt, substep)
            ey = end.y - target_y
            if abs(ey) < FIT_TOL:
                break
            ed = propagate(s, Control(a, delta + h), params, dt, substep)
            dy = (ed.y - end.y) / h
            if abs(dy) < 1e-12:
                return None
            delta -= ey / dy
        else:
            return None
        end = propagate(s, Control(a, delta), params, dt, substep)
    if abs(a) > params.a_bound + 1e-9 or abs(delta) > params.delta_bound + 1e-9:
        return None
    return Control(a, delta), end


def _lateral_quintic(s: VehicleState, to_y: float, duration: float) -> QuinticSegment:
    """Quintic lateral profile from the current lateral state to lane center `to_y` (lateral
    speed and acceleration zero at both ends aside from the current lateral speed)."""
    ini = (0.0, 0.0, 0.0, s.y, s.v * math.sin(s.psi), 0.0)
    term = (0.0, 0.0, 0.0, to_y, 0.0, 0.0)
    return solve_quintic(ini, term, duration)


def _lat_y(q: QuinticSegment, z: float, to_y: float) -> float:
    if z >= q.duration - 1e-12:
        return to_y
    return q.eval(z)[1]


def _change_trajectories(
    state: VehicleState,
    to_y: float,
    duration: float,
    kind: str,
    cfg: TrajectoryGenConfig,
    params: VehicleParams,
) -> List[Trajectory]:
    """Realized trajectories combining every longitudinal accel profile with a quintic lateral
    traverse to `to_y` over `duration`. Profiles with no in-bounds control fit are dropped.

    Profiles sharing an acceleration prefix share the same intermediate states, so the set
    is built depth-first and each prefix step is fitted exactly once; the enumeration order
    matches the lexicographic order of the accel-level product."""
    q = _lateral_quintic(state, to_y, duration)
    targets_y = [_lat_y(q, (tau + 1) * cfg.dT, to_y) for tau in range(cfg.N)]
    out: List[Trajectory] = []

    def extend(tau, s, x, v, states, controls):
        if tau == cfg.N:
            out.append(Trajectory(
                states=np.array(states), controls=np.array(controls),
                maneuver=Maneuver(kind), dt=cfg.dT,
            ))
            return
        for a in cfg.accel_levels:
            v_next = min(max(v + a * cfg.dT, params.v_min), params.v_max)
            x_next = x + 0.5 * (v + v_next) * cfg.dT
            fit = _fit_step(s, x_next, targets_y[tau], v_next, params, cfg.dT, cfg.substep)
            if fit is None:
                continue
            u, s_next = fit
            extend(tau + 1, s_next, x_next, v_next,
                   states + [s_next.as_array()], controls + [np.array([u.a, u.delta_f])])

    extend(0, state, state.x, state.v, [state.as_array()], [])
    return out


def generate_merge_set(
    state: VehicleState,
    lane_change_progress: Optional[float],
    cfg: TrajectoryGenConfig,
    params: VehicleParams,
) -> List[Trajectory]:
    """Admissible trajectories for the merging vehicle.

    Not mid-change: lane-keep longitudinal profiles plus lane-change trajectories starting
    now (one per longitudinal accel profile, lateral traverse over T_lc).
    Mid-change (progress in [0, T_lc)): continue-change trajectories covering the remaining
    T_lc - progress, plus abort trajectories returning to the origin lane over T_lc, each in
    every longitudinal accel profile.

    Candidates violating actuation or speed limits are dropped; the result may be empty.
    """
    out: List[Trajectory] = []
    if lane_change_progress is None:
        out.extend(generate_longitudinal_set(state, cfg, params))
        out.extend(_change_trajectories(
            state, cfg.target_lane_y, cfg.T_lc, "lane_change", cfg, params))
        return out

    if not (0 <= lane_change_progress < cfg.T_lc):
        raise ValueError("lane_change_progress must lie in [0, T_lc)")
    remaining = cfg.T_lc - lane_change_progress
    out.extend(_change_trajectories(
        state, cfg.target_lane_y, remaining, "continue_change", cfg, params))
    out.extend(_change_trajectories(
        state, cfg.origin_lane_y, cfg.T_lc, "abort", cfg, params))
    return out


def _sampled_change(
    state: VehicleState,
    to_y: float,
    duration: float,
    kind: str,
    cfg: TrajectoryGenConfig,
    params: VehicleParams,
) -> List[Trajectory]:
    """Sampled (non-realized) counterpart of _change_trajectories."""
    q = _lateral_quintic(state, to_y, duration)
    ys = np.array([_lat_y(q, (tau + 1) * cfg.dT, to_y) for tau in range(cfg.N)])
    ydots = np.array([
        0.0 if (tau + 1) * cfg.dT >= duration - 1e-12 else q.eval((tau + 1) * cfg.dT)[3]
        for tau in range(cfg.N)
    ])
    out: List[Trajectory] = []
    for profile in itertools.product(cfg.accel_levels, repeat=cfg.N):
        x, v = state.x, state.v
        states = [state.as_array()]
        for tau in range(cfg.N):
            v_next = min(max(v + profile[tau] * cfg.dT, params.v_min), params.v_max)
            x = x + 0.5 * (v + v_next) * cfg.dT
            v = v_next
            psi = math.atan2(ydots[tau], max(v, 1e-9))
            states.append(np.array([x, ys[tau], v, psi]))
        arr = np.array(states)
        controls = np.zeros((cfg.N, 2))
        controls[:, 0] = np.diff(arr[:, 2]) / cfg.dT
        out.append(Trajectory(states=arr, controls=controls, maneuver=Maneuver(kind), dt=cfg.dT))
    return out


def sample_merge_set(
    state: VehicleState,
    lane_change_progress: Optional[float],
    cfg: TrajectoryGenConfig,
    params: VehicleParams,
) -> List[Trajectory]:
    """Prediction-model counterpart of generate_merge_set: states sampled directly from the
    longitudinal/quintic forms, with finite-difference accelerations instead of realized
    controls. Cheap to build; not guaranteed control-realizable."""
    out: List[Trajectory] = []
    if lane_change_progress is None:
        out.extend(generate_longitudinal_set(state, cfg, params))
        out.extend(_sampled_change(
            state, cfg.target_lane_y, cfg.T_lc, "lane_change", cfg, params))
        return out

    if not (0 <= lane_change_progress < cfg.T_lc):
        raise ValueError("lane_change_progress must lie in [0, T_lc)")
    remaining = cfg.T_lc - lane_change_progress
    out.extend(_sampled_change(
        state, cfg.target_lane_y, remaining, "continue_change", cfg, params))
    out.extend(_sampled_change(
        state, cfg.origin_lane_y, cfg.T_lc, "abort", cfg, params))
    return out


def recover_controls(
    traj: Trajectory, params: VehicleParams, substep: float = 0.1
) -> List[Control]:
    """Per-step (a, delta_f) that reproduce traj.states under sub-stepped Euler propagation."""
    out: List[Control] = []
    for i in range(len(traj.states) - 1):
        s = traj.state_at(i)
        nxt = traj.state_at(i + 1)
        fit = _fit_step(s, nxt.x, nxt.y, nxt.v, params, traj.dt, substep)
        if fit is None:
            raise InfeasibleStepError(i, "no in-bounds control reproduces the step")
        u, end = fit
        if abs(end.x - nxt.x) > 1e-6 or abs(end.y - nxt.y) > 1e-6:
            raise InfeasibleStepError(i, "position residual exceeds tolerance")
        out.append(u)
    return out
