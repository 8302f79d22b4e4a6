"""Driver models for non-ego vehicles: leader/follower game agents, IDM car-following
agents with target switching, constant-speed environment vehicles, and replay agents."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dynamics import Control, VehicleParams, VehicleState


@dataclass(frozen=True)
class IDMParams:
    v0: float = 32.0     # desired velocity, m/s
    phi0: float = 2.0    # minimum spacing, m
    a_m: float = 4.0     # maximum acceleration, m/s^2
    b: float = 3.0       # comfortable deceleration, m/s^2
    delta: float = 4.0   # acceleration exponent
    T: float = 1.5       # desired time headway, s

    def __post_init__(self):
        if min(self.v0, self.phi0, self.a_m, self.b, self.delta, self.T) <= 0:
            raise ValueError("IDM parameters must be positive")


@dataclass(frozen=True)
class AgentSpec:
    """What drives a non-ego vehicle.

    kind: "game" (role in {"leader", "follower"}), "idm" (idm_params, idm_target in
    {"front", "ego"}), "constant_speed", or "replay" (replay_id resolving to a recorded track).
    """

    kind: str
    role: Optional[str] = None
    idm_params: Optional[IDMParams] = None
    idm_target: str = "front"
    replay_id: Optional[str] = None
    noise_std: Tuple[float, ...] = ()  # additive state noise std per component, game agents only

    def __post_init__(self):
        if self.kind not in ("game", "idm", "constant_speed", "replay"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == "game" and self.role not in ("leader", "follower"):
            raise ValueError("game agents need role 'leader' or 'follower'")
        if self.kind == "idm" and self.idm_target not in ("front", "ego"):
            raise ValueError("idm target must be 'front' or 'ego'")
        if self.kind == "replay" and not self.replay_id:
            raise ValueError("replay agents need a resolvable trajectory reference")


@dataclass
class WorldView:
    """What one agent sees when choosing its control for the next step."""

    own: VehicleState
    own_params: VehicleParams
    front: Optional[Tuple[VehicleState, float]] = None  # (state, vehicle length) in own lane
    ego: Optional[Tuple[VehicleState, float]] = None    # (state, vehicle length)
    ego_signaling_merge: bool = False
    replay_next_v: Optional[float] = None  # recorded speed at the next sample, replay agents
    replay_ended: bool = False


def idm_accel(v: float, phi: float, dv: float, p: IDMParams, a_bound: float = 4.0) -> float:
    """IDM acceleration for speed v, gap phi (inf if free road), closing speed dv = v - v_target.

    Nonpositive gaps command an emergency brake at -a_bound.
    """
    if phi <= 0:
        return -a_bound
    free = 1.0 - (max(v, 0.0) / p.v0) ** p.delta
    if math.isinf(phi):
        a = p.a_m * free
    else:
        phi_star = p.phi0 + v * p.T + v * dv / (2.0 * math.sqrt(p.a_m * p.b))
        a = p.a_m * (free - (phi_star / phi) ** 2)
    return max(-a_bound, min(a_bound, a))


def _idm_control(spec: AgentSpec, view: WorldView, a_bound: float) -> Control:
    p = spec.idm_params or IDMParams()
    target = None
    if spec.idm_target == "ego" and view.ego is not None and view.ego_signaling_merge:
        ego_state, ego_len = view.ego
        if ego_state.x > view.own.x:  # only yield to an ego that is ahead
            target = (ego_state, ego_len)
    if target is None:
        target = view.front
    if target is None:
        return Control(idm_accel(view.own.v, math.inf, 0.0, p, a_bound), 0.0)
    t_state, t_len = target
    phi = t_state.x - view.own.x - t_len
    return Control(idm_accel(view.own.v, phi, view.own.v - t_state.v, p, a_bound), 0.0)


def agent_step(spec: AgentSpec, view: WorldView, dT: float, game_policy=None) -> Control:
    """Control for one sampling period.

    Game agents need a `game_policy` callable (view, role) -> Control supplied by the
    simulation (it owns the trajectory-set generation and enumeration machinery).
    """
    if spec.kind == "constant_speed":
        return Control(0.0, 0.0)
    if spec.kind == "idm":
        return _idm_control(spec, view, view.own_params.a_bound)
    if spec.kind == "replay":
        if view.replay_ended or view.replay_next_v is None:
            return Control(0.0, 0.0)  # hold last speed past the end of the recording
        return Control((view.replay_next_v - view.own.v) / dT, 0.0)
    if game_policy is None:
        raise ValueError("game agents require a game_policy callable")
    return game_policy(view, spec.role)
