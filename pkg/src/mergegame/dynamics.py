"""Vehicle kinematics: bicycle model, Euler propagation, reduced longitudinal model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class VehicleState:
    """Pose and speed of one vehicle: longitudinal x [m], lateral y [m], speed v [m/s], yaw psi [rad]."""

    x: float
    y: float
    v: float
    psi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v, self.psi], dtype=float)

    @staticmethod
    def from_array(a) -> "VehicleState":
        return VehicleState(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def is_finite(self) -> bool:
        return all(math.isfinite(f) for f in (self.x, self.y, self.v, self.psi))


@dataclass(frozen=True)
class Control:
    """Acceleration along the velocity direction [m/s^2] and front-wheel steering angle [rad]."""

    a: float
    delta_f: float = 0.0


@dataclass(frozen=True)
class VehicleParams:
    l_f: float = 1.5
    l_r: float = 1.5
    length: float = 5.0
    width: float = 2.0
    a_bound: float = 4.0
    delta_bound: float = 0.5
    v_min: float = 0.0
    v_max: float = 32.0

    def __post_init__(self):
        if min(self.l_f, self.l_r, self.length, self.width) <= 0:
            raise ValueError("geometry parameters must be positive")
        if not (0 <= self.v_min < self.v_max):
            raise ValueError("require 0 <= v_min < v_max")


def slip_angle(delta_f: float, params: VehicleParams) -> float:
    """beta = atan(l_r / (l_r + l_f) * tan(delta_f))."""
    return math.atan(params.l_r / (params.l_r + params.l_f) * math.tan(delta_f))


def step_bicycle(state: VehicleState, control: Control, params: VehicleParams, dt: float) -> VehicleState:
    """One forward-Euler step of the kinematic bicycle model, evaluated at the input state.

    Speed is not clamped here; clamping is the caller's choice (see step_longitudinal).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not state.is_finite() or not (math.isfinite(control.a) and math.isfinite(control.delta_f)):
        raise ValueError("non-finite state or control")
    beta = slip_angle(control.delta_f, params)
    heading = state.psi + beta
    return VehicleState(
        x=state.x + state.v * math.cos(heading) * dt,
        y=state.y + state.v * math.sin(heading) * dt,
        v=state.v + control.a * dt,
        psi=state.psi + state.v / params.l_r * math.sin(beta) * dt,
    )


def propagate(
    state: VehicleState,
    control: Control,
    params: VehicleParams,
    dt: float,
    substep: float = 0.1,
) -> VehicleState:
    """Hold a constant control over dt, integrating with Euler sub-steps of size <= substep."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not state.is_finite() or not (math.isfinite(control.a) and math.isfinite(control.delta_f)):
        raise ValueError("non-finite state or control")
    n = max(1, int(round(dt / substep)))
    h = dt / n
    # Constant control means a constant slip angle; unroll the Euler loop on locals to
    # avoid per-substep allocation (this is the planner's inner loop).
    beta = slip_angle(control.delta_f, params)
    sin_beta_over_lr = math.sin(beta) / params.l_r
    x, y, v, psi = state.x, state.y, state.v, state.psi
    a = control.a
    for _ in range(n):
        heading = psi + beta
        x += v * math.cos(heading) * h
        y += v * math.sin(heading) * h
        psi += v * sin_beta_over_lr * h
        v += a * h
    return VehicleState(x=x, y=y, v=v, psi=psi)


def step_longitudinal(state: VehicleState, a: float, params: VehicleParams, dt: float) -> VehicleState:
    """Reduced lane-keeping model: v += a*dt clamped to [v_min, v_max], x advances by the
    trapezoidal distance 0.5*(v + v_next)*dt; y, psi unchanged."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not state.is_finite() or not math.isfinite(a):
        raise ValueError("non-finite state or acceleration")
    v_next = min(max(state.v + a * dt, params.v_min), params.v_max)
    return VehicleState(
        x=state.x + 0.5 * (state.v + v_next) * dt, y=state.y, v=v_next, psi=state.psi
    )
