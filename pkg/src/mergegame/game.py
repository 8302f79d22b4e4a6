"""Pairwise leader-follower game solved by enumeration.

The follower maximizes its worst-case cumulative reward over the opponent's full set.
The leader assumes the opponent plays the follower strategy: it computes the opponent's
best-response set and maximizes its own worst case over that set.

Matrix convention: R[i, j] is the row player's index i against column player's index j;
the *_matrix functions are the enumeration core and are also usable with synthetic tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .rewards import (
    COMFORT_TIME_GAP,
    SAFETY_MARGIN,
    PairState,
    RewardWeights,
    _collision_mask,
)
from .trajectories import Trajectory

VALUE_TIE_TOL = 1e-9


class Role(str, Enum):
    LEADER = "leader"
    FOLLOWER = "follower"


@dataclass
class GameOutcome:
    optimal_trajectory: Trajectory
    index: int
    value: float
    follower_best_set_size: int


def follower_value_matrix(R_f: np.ndarray) -> np.ndarray:
    """Q_f for every follower column: min over the opponent's rows."""
    R_f = np.asarray(R_f, dtype=float)
    if R_f.size == 0:
        raise ValueError("empty reward table")
    return R_f.min(axis=0)


def follower_best_set_matrix(R_f: np.ndarray, tol: float = VALUE_TIE_TOL) -> np.ndarray:
    """Indices of all follower columns whose Q_f ties the maximum within tol."""
    q = follower_value_matrix(R_f)
    return np.flatnonzero(q >= q.max() - tol)


def solve_follower_matrix(R_f: np.ndarray) -> Tuple[int, float]:
    """argmax_j Q_f(j); ties broken by lowest index."""
    q = follower_value_matrix(R_f)
    j = int(np.argmax(q))
    return j, float(q[j])


def solve_leader_matrix(
    R_l: np.ndarray, R_f: np.ndarray, tol: float = VALUE_TIE_TOL
) -> Tuple[int, float, int]:
    """argmax_i min over the follower best-response set of R_l[i, :]; lowest-index tie-break.

    R_l rows index the leader's actions; R_f has the same shape with the follower as the
    column player. Returns (leader index, value, size of the follower best-response set).
    """
    R_l = np.asarray(R_l, dtype=float)
    best = follower_best_set_matrix(R_f, tol=tol)
    q_l = R_l[:, best].min(axis=1)
    i = int(np.argmax(q_l))
    return i, float(q_l[i]), int(len(best))


def reward_matrices(
    pair: PairState,
    ego_trajs: Sequence[Trajectory],
    other_trajs: Sequence[Trajectory],
    w: RewardWeights,
    lam: float,
    t_comfort: float = COMFORT_TIME_GAP,
    margin: float = SAFETY_MARGIN,
    need_other: bool = True,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Discounted cumulative rewards for every joint open-loop rollout.

    Returns (R_ego, R_other), both of shape (len(ego_trajs), len(other_trajs));
    R_ego is from pair.ego's perspective, R_other from pair.other's (None when
    need_other is False, which skips half the work for follower solves).
    """
    if not ego_trajs or not other_trajs:
        raise ValueError("empty trajectory set")
    N = min(ego_trajs[0].horizon, other_trajs[0].horizon)
    A = np.stack([t.states[:N] for t in ego_trajs])      # (na, N, 4), states at tau = 0..N-1
    B = np.stack([t.states[:N] for t in other_trajs])    # (nb, N, 4)
    ego_goal, other_goal = pair.resolved_goals()
    road = pair.road
    ep, op = pair.ego_params, pair.other_params
    disc = lam ** np.arange(N)

    # pairwise terms, fused: r1 (collision, symmetric) and r5 (comfort headway)
    coll = _collision_mask(A[:, None], B[None, :], ep, op, margin)   # (na, nb, N)
    lane_A = road.lane_of(A[..., 1])                                  # (na, N)
    lane_B = road.lane_of(B[..., 1])                                  # (nb, N)
    same = lane_A[:, None, :] == lane_B[None, :, :]
    dx = A[:, None, :, 0] - B[None, :, :, 0]
    gap = np.abs(dx) - (ep.length + op.length) / 2
    vA = np.clip(A[..., 2], 0.0, None)
    vB = np.clip(B[..., 2], 0.0, None)
    v_rear_ego = np.where(dx >= 0, vB[None, :, :], vA[:, None, :])
    r5_ego = -(same & (gap < t_comfort * v_rear_ego)).astype(float)
    pair_ego = (w.w1 * -coll.astype(float) + w.w5 * r5_ego) @ disc    # (na, nb)

    def _own_terms(S, params, goal):
        y, v, x = S[..., 1], S[..., 2], S[..., 0]
        goal_y = road.lane_centers[goal]
        in_goal = np.abs(y - goal_y) < road.lane_width / 2
        off_road = (y < road.y_min) | (y > road.y_max)
        past_end = (road.lane_of(y) == road.merge_lane) & ~in_goal & (x > road.merge_lane_end_x)
        r2 = -(off_road | past_end).astype(float)
        r3 = np.clip(v / params.v_max, 0.0, 1.0)
        return (w.w2 * r2 + w.w3 * r3 + w.w4 * in_goal.astype(float)) @ disc

    R_ego = pair_ego + _own_terms(A, ep, ego_goal)[:, None]
    if not need_other:
        return R_ego, None
    v_rear_other = np.where(-dx >= 0, vA[:, None, :], vB[None, :, :])
    r5_other = -(same & (gap < t_comfort * v_rear_other)).astype(float)
    pair_other = (w.w1 * -coll.astype(float) + w.w5 * r5_other) @ disc
    R_other = pair_other + _own_terms(B, op, other_goal)[None, :]
    return R_ego, R_other


def follower_value(
    pair: PairState,
    gamma_f: Trajectory,
    leader_set: Sequence[Trajectory],
    w: RewardWeights,
    lam: float,
) -> float:
    """Worst-case cumulative reward of pair.ego playing gamma_f against any leader trajectory."""
    R_ego, _ = reward_matrices(pair, [gamma_f], leader_set, w, lam, need_other=False)
    return float(follower_value_matrix(R_ego.T)[0])


def solve_follower(
    pair: PairState,
    follower_set: Sequence[Trajectory],
    leader_set: Sequence[Trajectory],
    w: RewardWeights,
    lam: float,
) -> GameOutcome:
    """Max-min trajectory for pair.ego acting as the follower."""
    R_ego, _ = reward_matrices(pair, follower_set, leader_set, w, lam, need_other=False)
    R_f = R_ego.T  # rows: leader, cols: follower
    j, value = solve_follower_matrix(R_f)
    best = follower_best_set_matrix(R_f)
    return GameOutcome(follower_set[j], j, value, int(len(best)))


def solve_leader(
    pair: PairState,
    leader_set: Sequence[Trajectory],
    follower_set: Sequence[Trajectory],
    w: RewardWeights,
    lam: float,
) -> GameOutcome:
    """Best reply of pair.ego acting as the leader against the opponent's best-response set."""
    R_ego, R_other = reward_matrices(pair, leader_set, follower_set, w, lam)
    i, value, nbest = solve_leader_matrix(R_ego, R_other)
    return GameOutcome(leader_set[i], i, value, nbest)


def policy_action(
    pair: PairState,
    role: Role,
    ego_set: Sequence[Trajectory],
    other_set: Sequence[Trajectory],
    w: RewardWeights,
    lam: float,
) -> Trajectory:
    """Optimal trajectory of pair.ego under its role; caller takes the first control."""
    if role == Role.FOLLOWER:
        return solve_follower(pair, ego_set, other_set, w, lam).optimal_trajectory
    return solve_leader(pair, ego_set, other_set, w, lam).optimal_trajectory
