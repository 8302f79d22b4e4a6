"""Stage reward w^T r (safety / liveness / comfort), cumulative reward, and the safe-set test."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .dynamics import Control, VehicleParams, VehicleState

# Defaults for the piecewise term definitions; both are overridable per call.
COMFORT_TIME_GAP = 0.5   # s
SAFETY_MARGIN = 0.5      # m of required clearance between collision boxes


@dataclass(frozen=True)
class RoadGeometry:
    """Lane layout of the merge site. x grows along the road, y across it."""

    lane_centers: Tuple[float, ...] = (0.0, 3.6)
    lane_width: float = 3.6
    y_min: float = -1.8
    y_max: float = 5.4
    merge_lane_end_x: float = 200.0
    merge_lane: int = 0
    goal_lane: int = 1

    def __post_init__(self):
        if self.lane_width <= 0:
            raise ValueError("lane width must be positive")
        if not np.isfinite(self.merge_lane_end_x):
            raise ValueError("merge_lane_end_x must be finite")

    def lane_of(self, y):
        """Index of the nearest lane center (vectorized)."""
        centers = np.asarray(self.lane_centers)
        return np.argmin(np.abs(np.asarray(y)[..., None] - centers), axis=-1)


@dataclass(frozen=True)
class RewardWeights:
    w1: float = 10000.0  # collision
    w2: float = 5000.0   # off road / past lane end
    w3: float = 10.0     # longitudinal progress
    w4: float = 50.0     # goal lane attainment
    w5: float = 100.0    # comfort headway

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w4, self.w5) < 0:
            raise ValueError("weights must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3, self.w4, self.w5])


@dataclass
class PairState:
    """Joint state of (ego, one interacting vehicle) on a road."""

    ego: VehicleState
    other: VehicleState
    ego_params: VehicleParams
    other_params: VehicleParams
    road: RoadGeometry
    ego_goal_lane: Optional[int] = None    # defaults to road.goal_lane
    other_goal_lane: Optional[int] = None  # defaults to the other's current lane

    def resolved_goals(self) -> Tuple[int, int]:
        eg = self.road.goal_lane if self.ego_goal_lane is None else self.ego_goal_lane
        og = int(self.road.lane_of(self.other.y)) if self.other_goal_lane is None else self.other_goal_lane
        return eg, og

    def swapped(self) -> "PairState":
        """The same joint state from the other vehicle's perspective."""
        eg, og = self.resolved_goals()
        return PairState(
            ego=self.other,
            other=self.ego,
            ego_params=self.other_params,
            other_params=self.ego_params,
            road=self.road,
            ego_goal_lane=og,
            other_goal_lane=eg,
        )


def boxes_overlap(x1, y1, psi1, half_len1, half_wid1, x2, y2, psi2, half_len2, half_wid2):
    """Separating-axis test for two oriented rectangles; broadcasts over leading dims."""
    dx = np.asarray(x2) - np.asarray(x1)
    dy = np.asarray(y2) - np.asarray(y1)
    if not np.any(psi1) and not np.any(psi2):
        # axis-aligned fast path
        z = np.zeros(np.broadcast_shapes(np.shape(psi1), np.shape(psi2)))
        return (np.abs(dx) + z <= half_len1 + half_len2) & (np.abs(dy) + z <= half_wid1 + half_wid2)
    c1, s1, c2, s2, dx, dy = np.broadcast_arrays(
        np.cos(psi1), np.sin(psi1), np.cos(psi2), np.sin(psi2), dx, dy
    )
    # candidate axes stacked on a new leading dim: each box's long and lateral axes
    nx = np.stack([c1, -s1, c2, -s2])
    ny = np.stack([s1, c1, s2, c2])
    dist = np.abs(dx * nx + dy * ny)
    r1 = half_len1 * np.abs(c1 * nx + s1 * ny) + half_wid1 * np.abs(s1 * nx - c1 * ny)
    r2 = half_len2 * np.abs(c2 * nx + s2 * ny) + half_wid2 * np.abs(s2 * nx - c2 * ny)
    return np.all(dist <= r1 + r2, axis=0)


def _collision_mask(ego, other, ego_params: VehicleParams, other_params: VehicleParams, margin: float):
    m = margin / 2.0  # clearance split between the two boxes
    hl1, hw1 = ego_params.length / 2 + m, ego_params.width / 2 + m
    hl2, hw2 = other_params.length / 2 + m, other_params.width / 2 + m
    dx = other[..., 0] - ego[..., 0]
    dy = other[..., 1] - ego[..., 1]
    # bounding-circle prescreen: run the SAT only on pairs that could possibly touch
    r = np.hypot(hl1, hw1) + np.hypot(hl2, hw2)
    near = dx * dx + dy * dy <= r * r
    if near.ndim == 0 or near.all():
        return boxes_overlap(
            ego[..., 0], ego[..., 1], ego[..., 3], hl1, hw1,
            other[..., 0], other[..., 1], other[..., 3], hl2, hw2,
        )
    out = np.zeros(near.shape, dtype=bool)
    if near.any():
        idx = np.nonzero(near)
        e, o = np.broadcast_arrays(ego, other)
        es, os_ = e[idx], o[idx]
        out[idx] = boxes_overlap(
            es[..., 0], es[..., 1], es[..., 3], hl1, hw1,
            os_[..., 0], os_[..., 1], os_[..., 3], hl2, hw2,
        )
    return out


def reward_terms(
    ego,
    other,
    ego_params: VehicleParams,
    other_params: VehicleParams,
    road: RoadGeometry,
    goal_lane: int,
    t_comfort: float = COMFORT_TIME_GAP,
    margin: float = SAFETY_MARGIN,
) -> np.ndarray:
    """r1..r5 stacked on the last axis, evaluated from the first vehicle's perspective.

    `ego` and `other` are (..., 4) state arrays [x, y, v, psi]; broadcasting applies.
    """
    ego = np.asarray(ego, dtype=float)
    other = np.asarray(other, dtype=float)
    goal_y = road.lane_centers[goal_lane]

    r1 = -_collision_mask(ego, other, ego_params, other_params, margin).astype(float)

    lane_idx = road.lane_of(ego[..., 1])
    in_goal = np.abs(ego[..., 1] - goal_y) < road.lane_width / 2
    off_road = (ego[..., 1] < road.y_min) | (ego[..., 1] > road.y_max)
    past_end = (lane_idx == road.merge_lane) & ~in_goal & (ego[..., 0] > road.merge_lane_end_x)
    r2 = -(off_road | past_end).astype(float)

    r3 = np.clip(ego[..., 2] / ego_params.v_max, 0.0, 1.0)
    r4 = in_goal.astype(float)

    same_lane = lane_idx == road.lane_of(other[..., 1])
    ego_front = ego[..., 0] >= other[..., 0]
    gap = np.abs(ego[..., 0] - other[..., 0]) - (ego_params.length + other_params.length) / 2
    v_rear = np.where(ego_front, other[..., 2], ego[..., 2])
    tight = gap < t_comfort * np.maximum(v_rear, 0.0)
    r5 = -(same_lane & tight).astype(float)

    # ego-only terms keep the ego's shape; expand everything to the broadcast shape
    r1, r2, r3, r4, r5 = np.broadcast_arrays(r1, r2, r3, r4, r5)
    return np.stack([r1, r2, r3, r4, r5], axis=-1)


def stage_reward(
    pair: PairState,
    u_ego: Control,
    u_other: Control,
    w: RewardWeights,
    t_comfort: float = COMFORT_TIME_GAP,
    margin: float = SAFETY_MARGIN,
) -> Tuple[float, np.ndarray]:
    """R = w^T r for one pair state; returns (scalar, r-vector breakdown)."""
    goal_lane, _ = pair.resolved_goals()
    r = reward_terms(
        pair.ego.as_array(), pair.other.as_array(),
        pair.ego_params, pair.other_params, pair.road, goal_lane,
        t_comfort=t_comfort, margin=margin,
    )
    return float(w.as_array() @ r), r


def cumulative_reward(
    pair_rollout: Sequence[Tuple[PairState, Control, Control]],
    w: RewardWeights,
    lam: float,
) -> float:
    """Sum_{tau} lam^tau * stage_reward(tau) over a rollout of (pair, u_ego, u_other)."""
    if not (0 <= lam < 1):
        raise ValueError("discount must be in [0, 1)")
    total = 0.0
    for tau, (pair, u_ego, u_other) in enumerate(pair_rollout):
        total += lam**tau * stage_reward(pair, u_ego, u_other, w)[0]
    return total


def safe_mask(
    ego,
    other,
    ego_params: VehicleParams,
    other_params: VehicleParams,
    road: RoadGeometry,
    goal_lane: int,
    margin: float = SAFETY_MARGIN,
):
    """Vectorized S_safe membership from the first vehicle's perspective."""
    ego = np.asarray(ego, dtype=float)
    other = np.asarray(other, dtype=float)
    collide = _collision_mask(ego, other, ego_params, other_params, margin)
    half_w = ego_params.width / 2
    in_bounds = (ego[..., 1] - half_w >= road.y_min) & (ego[..., 1] + half_w <= road.y_max)
    goal_y = road.lane_centers[goal_lane]
    in_goal = np.abs(ego[..., 1] - goal_y) < road.lane_width / 2
    overrun = (road.lane_of(ego[..., 1]) == road.merge_lane) & ~in_goal & (ego[..., 0] > road.merge_lane_end_x)
    return ~collide & in_bounds & ~overrun


def is_safe(pair: PairState, margin: float = SAFETY_MARGIN) -> bool:
    """True iff no box overlap, ego within road bounds, and ego not past the merge-lane end."""
    goal_lane, _ = pair.resolved_goals()
    return bool(
        safe_mask(
            pair.ego.as_array(), pair.other.as_array(),
            pair.ego_params, pair.other_params, pair.road, goal_lane, margin=margin,
        )
    )
