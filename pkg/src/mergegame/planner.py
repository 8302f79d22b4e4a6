"""Belief-weighted expected-reward planning over the merge trajectory set, subject to a
pairwise chance constraint, with role-conditioned closed-loop predictions of the
interacting vehicles obtained by re-solving the leader-follower game at every step."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .beliefs import BeliefState
from .dynamics import VehicleParams, VehicleState, step_longitudinal
from .game import Role, solve_follower, solve_leader
from .rewards import PairState, RewardWeights, RoadGeometry, reward_terms, safe_mask
from .trajectories import (
    Maneuver,
    Trajectory,
    TrajectoryGenConfig,
    generate_longitudinal_set,
    generate_merge_set,
    sample_merge_set,
)


@dataclass(frozen=True)
class PlannerConfig:
    N: int = 4
    dT: float = 1.0
    lam: float = 0.8
    epsilon: float = 0.1
    weights: RewardWeights = field(default_factory=RewardWeights)
    T_lc: float = 3.0
    ego_accel_levels: Tuple[float, ...] = (-2.0, 0.0, 2.0)
    # highway vehicles use their full actuation range; the merging ego plans over a
    # conservative comfort grid, so it cannot out-accelerate a proceeding vehicle
    other_accel_levels: Tuple[float, ...] = (-4.0, 0.0, 4.0)
    # accel levels of the merge-vehicle model used inside interacting-vehicle predictions;
    # a single constant-speed level keeps the cut-in threat while bounding enumeration cost
    model_accel_levels: Tuple[float, ...] = (0.0,)
    substep: float = 0.1

    def __post_init__(self):
        if not (0 <= self.epsilon <= 1):
            raise ValueError("epsilon must lie in [0, 1]")
        if not (0 < self.lam < 1):
            raise ValueError("discount must lie in (0, 1)")
        if self.N < 1:
            raise ValueError("horizon must be at least 1")


@dataclass
class InteractingVehicle:
    vid: str
    state: VehicleState
    params: VehicleParams
    belief: BeliefState


@dataclass
class EnvironmentVehicle:
    vid: str
    state: VehicleState
    params: VehicleParams


@dataclass
class TrafficState:
    ego: VehicleState
    ego_params: VehicleParams
    road: RoadGeometry
    interacting: List[InteractingVehicle] = field(default_factory=list)
    environment: List[EnvironmentVehicle] = field(default_factory=list)
    ego_phase: Optional[float] = None  # elapsed lane-change time, None if not mid-change
    ego_change_dest: Optional[int] = None  # destination lane of an ongoing change (mid-abort aware)


@dataclass
class PlanResult:
    chosen: Trajectory
    chosen_index: int
    expected_reward: float
    pair_safety: Dict[str, float]
    rollouts: Dict[Tuple[str, str], np.ndarray]  # (vehicle id, role) -> (N+1, 4) predicted states
    feasible: bool
    candidate_count: int


def make_gen_config(cfg: PlannerConfig, road: RoadGeometry, accel_levels=None) -> TrajectoryGenConfig:
    return TrajectoryGenConfig(
        N=cfg.N,
        dT=cfg.dT,
        accel_levels=tuple(accel_levels if accel_levels is not None else cfg.ego_accel_levels),
        T_lc=cfg.T_lc,
        lane_width=road.lane_width,
        origin_lane_y=road.lane_centers[road.merge_lane],
        target_lane_y=road.lane_centers[road.goal_lane],
        substep=cfg.substep,
    )


def phase_along(traj: Trajectory, tau: int, initial_progress: Optional[float], T_lc: float, dT: float) -> Optional[float]:
    """Lane-change progress toward the goal lane at rollout step tau of a candidate."""
    m = traj.maneuver
    if m.kind == "lane_keep":
        return None
    if m.kind == "lane_change":
        if tau < m.start_step:
            return None
        p = (tau - m.start_step) * dT
        return p if p < T_lc else None
    if m.kind == "continue_change":
        p = (initial_progress or 0.0) + tau * dT
        return p if p < T_lc else None
    # abort: heading back to the origin lane; not a goal-directed change
    if tau < m.start_step:
        p = (initial_progress or 0.0) + tau * dT
        return p if p < T_lc else None
    return None


class GamePolicy:
    """Role-conditioned trajectory policy of a lane-keeping vehicle interacting with a
    merging opponent; solves the leader-follower game by enumeration and memoizes by state."""

    def __init__(self, road: RoadGeometry, cfg: PlannerConfig):
        self.road = road
        self.cfg = cfg
        self.own_gen = make_gen_config(cfg, road, accel_levels=cfg.other_accel_levels)
        self.model_gen = make_gen_config(cfg, road, accel_levels=cfg.model_accel_levels)
        self.memo: Dict[tuple, Trajectory] = {}
        self._own_sets: Dict[tuple, list] = {}
        self._model_sets: Dict[tuple, list] = {}
        self.model_fallbacks = 0

    def _own_set(self, own: VehicleState, params: VehicleParams) -> list:
        key = (round(own.x, 6), round(own.y, 6), round(own.v, 6), round(own.psi, 6))
        hit = self._own_sets.get(key)
        if hit is None:
            hit = generate_longitudinal_set(own, self.own_gen, params)
            self._own_sets[key] = hit
        return hit

    def _model_set(self, merge: VehicleState, phase: Optional[float], params: VehicleParams) -> list:
        key = (
            round(merge.x, 6), round(merge.y, 6), round(merge.v, 6), round(merge.psi, 6),
            None if phase is None else round(phase, 6),
        )
        hit = self._model_sets.get(key)
        if hit is None:
            hit = sample_merge_set(merge, phase, self.model_gen, params)
            if not hit:
                self.model_fallbacks += 1
                hit = generate_longitudinal_set(merge, self.model_gen, params)
            self._model_sets[key] = hit
        return hit

    def action(
        self,
        own: VehicleState,
        own_params: VehicleParams,
        merge: VehicleState,
        merge_params: VehicleParams,
        merge_phase: Optional[float],
        role: Role,
    ) -> Trajectory:
        key = (
            role,
            round(own.x, 6), round(own.y, 6), round(own.v, 6),
            round(merge.x, 6), round(merge.y, 6), round(merge.v, 6), round(merge.psi, 6),
            None if merge_phase is None else round(merge_phase, 6),
        )
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        own_set = self._own_set(own, own_params)
        model_set = self._model_set(merge, merge_phase, merge_params)
        pair = PairState(
            ego=own,
            other=merge,
            ego_params=own_params,
            other_params=merge_params,
            road=self.road,
            ego_goal_lane=int(self.road.lane_of(own.y)),
            other_goal_lane=self.road.goal_lane,
        )
        w, lam = self.cfg.weights, self.cfg.lam
        if role == Role.FOLLOWER:
            traj = solve_follower(pair, own_set, model_set, w, lam).optimal_trajectory
        else:
            traj = solve_leader(pair, own_set, model_set, w, lam).optimal_trajectory
        self.memo[key] = traj
        return traj


def predict_pair_rollout(
    pair: PairState,
    ego_traj: Trajectory,
    role: Role,
    policy: GamePolicy,
    cfg: PlannerConfig,
    ego_phase: Optional[float] = None,
    goal_directed: bool = True,
) -> np.ndarray:
    """Closed-loop prediction of the interacting vehicle's states along an ego candidate.

    At each step the interacting vehicle re-solves its role-conditioned game policy at the
    current joint state and applies the first control. Returns (N+1, 4) predicted states.
    With goal_directed=False (ego mid-abort) no merge progress is signaled to the opponent.
    """
    other = pair.other
    out = [other.as_array()]
    for tau in range(ego_traj.horizon):
        ego_tau = ego_traj.state_at(tau)
        phase_tau = (
            phase_along(ego_traj, tau, ego_phase, cfg.T_lc, cfg.dT) if goal_directed else None
        )
        traj_k = policy.action(other, pair.other_params, ego_tau, pair.ego_params, phase_tau, role)
        other = step_longitudinal(other, float(traj_k.controls[0, 0]), pair.other_params, cfg.dT)
        out.append(other.as_array())
    return np.array(out)


def _rollout_reward(ego_states: np.ndarray, other_states: np.ndarray, pair: PairState, cfg: PlannerConfig) -> float:
    N = len(ego_states) - 1
    goal, _ = pair.resolved_goals()
    r = reward_terms(
        ego_states[:N], other_states[:N], pair.ego_params, pair.other_params, pair.road, goal
    )
    disc = cfg.lam ** np.arange(N)
    return float((r @ cfg.weights.as_array()) @ disc)


def _rollout_safe(ego_states: np.ndarray, other_states: np.ndarray, pair: PairState) -> bool:
    goal, _ = pair.resolved_goals()
    ok = safe_mask(
        ego_states[1:], other_states[1:], pair.ego_params, pair.other_params, pair.road, goal
    )
    return bool(np.all(ok))


def expected_pair_reward(
    pair: PairState,
    ego_traj: Trajectory,
    belief: BeliefState,
    policy: GamePolicy,
    cfg: PlannerConfig,
    ego_phase: Optional[float] = None,
) -> float:
    """Belief-weighted sum of the two role-conditioned cumulative rewards."""
    total = 0.0
    for role, p in ((Role.LEADER, belief.p_leader), (Role.FOLLOWER, belief.p_follower)):
        other_states = predict_pair_rollout(pair, ego_traj, role, policy, cfg, ego_phase)
        total += p * _rollout_reward(ego_traj.states, other_states, pair, cfg)
    return total


def pair_safety_probability(
    pair: PairState,
    ego_traj: Trajectory,
    belief: BeliefState,
    policy: GamePolicy,
    cfg: PlannerConfig,
    ego_phase: Optional[float] = None,
) -> float:
    """Belief-weighted indicator that every step of the role-conditioned rollout is safe."""
    total = 0.0
    for role, p in ((Role.LEADER, belief.p_leader), (Role.FOLLOWER, belief.p_follower)):
        other_states = predict_pair_rollout(pair, ego_traj, role, policy, cfg, ego_phase)
        if _rollout_safe(ego_traj.states, other_states, pair):
            total += p
    return total


def chance_constraint_ok(pair_probabilities: Sequence[float], epsilon: float) -> bool:
    """True iff sum_k p_k >= m - epsilon (union bound on joint pairwise safety)."""
    ps = list(pair_probabilities)
    if any(p < 0 or p > 1 for p in ps):
        raise ValueError("pair probabilities must lie in [0, 1]")
    return sum(ps) >= len(ps) - epsilon - 1e-12


def _solo_states(ego: VehicleState) -> VehicleState:
    # distant dummy opponent; leaves only the ego's own reward/safety terms active
    return VehicleState(ego.x - 1e6, ego.y, 0.0, 0.0)


def plan(traffic: TrafficState, cfg: PlannerConfig, policy: Optional[GamePolicy] = None) -> PlanResult:
    """Enumerate the merge candidate set, discard candidates failing the chance constraint
    (and any colliding with constant-speed environment predictions), and maximize the sum
    of belief-weighted pair rewards. Deterministic lowest-index tie-break.

    If no candidate passes, falls back to the candidate maximizing the summed pair safety
    probability (ties by expected reward, then index)."""
    road = traffic.road
    toward_goal = traffic.ego_change_dest in (None, road.goal_lane)
    gen = make_gen_config(cfg, road)
    if not toward_goal:
        # mid-abort: the ongoing transition heads back to the merge lane, so "continue"
        # must track that motion and "abort" means re-attempting the merge
        gen = replace(
            gen,
            origin_lane_y=road.lane_centers[road.goal_lane],
            target_lane_y=road.lane_centers[road.merge_lane],
        )
    # role-conditioned opponent models only understand goal-directed merge progress
    model_phase = traffic.ego_phase if toward_goal else None
    candidates = generate_merge_set(traffic.ego, traffic.ego_phase, gen, traffic.ego_params)
    if not candidates:
        raise ValueError("empty merge candidate set")
    if policy is None:
        policy = GamePolicy(traffic.road, cfg)

    n = len(candidates)
    m = len(traffic.interacting)
    rewards = np.zeros(n)
    safety = np.ones((n, m))
    rollouts_all: List[Dict[Tuple[str, str], np.ndarray]] = [dict() for _ in range(n)]
    env_ok = np.ones(n, dtype=bool)
    dummy = _solo_states(traffic.ego)

    # constant-speed predictions used as a hard safety screen: environment vehicles, plus
    # each interacting vehicle's constant-velocity continuation (a candidate that collides
    # with a vehicle that simply keeps its current speed is inadmissible regardless of role)
    def _const_pred(state: VehicleState) -> np.ndarray:
        states = [state.as_array()]
        s = state
        for _ in range(cfg.N):
            s = VehicleState(s.x + s.v * cfg.dT, s.y, s.v, s.psi)
            states.append(s.as_array())
        return np.array(states)

    env_pred = [(env.state, env.params, _const_pred(env.state)) for env in traffic.environment]
    env_pred += [(veh.state, veh.params, _const_pred(veh.state)) for veh in traffic.interacting]

    # cheap hard screen first: ego-only safety (bounds, lane end) and environment vehicles;
    # only surviving candidates get the expensive game-rollout evaluation
    solo_pair = PairState(
        ego=traffic.ego, other=dummy,
        ego_params=traffic.ego_params, other_params=traffic.ego_params, road=traffic.road,
    )
    dummy_states = np.tile(dummy.as_array(), (cfg.N + 1, 1))
    # vectorized screen: all candidates against the dummy, then each constant-speed
    # prediction, restricted to candidates still alive
    cand_states = np.stack([t.states for t in candidates])  # (n, N+1, 4)
    solo_goal, _ = solo_pair.resolved_goals()
    env_ok[:] = np.all(
        safe_mask(cand_states[:, 1:], dummy.as_array(),
                  traffic.ego_params, traffic.ego_params, road, solo_goal),
        axis=-1,
    )
    for other_state, other_params, pred in env_pred:
        alive = np.flatnonzero(env_ok)
        if len(alive) == 0:
            break
        ok = safe_mask(cand_states[alive][:, 1:], pred[1:],
                       traffic.ego_params, other_params, road, solo_goal)
        env_ok[alive] &= np.all(ok, axis=-1)
    eval_idx = np.flatnonzero(env_ok) if env_ok.any() else np.arange(n)
    safety[[c for c in range(n) if c not in set(eval_idx)]] = 0.0
    rewards[:] = -np.inf
    rewards[eval_idx] = 0.0
    safety[eval_idx] = 0.0

    # rollout predictions stay per-candidate (closed-loop game policy), but reward and
    # safety terms are evaluated in one vectorized pass per (vehicle, role)
    disc = cfg.lam ** np.arange(cfg.N)
    w_arr = cfg.weights.as_array()
    ego_batch = cand_states[eval_idx]  # (n_eval, N+1, 4)
    for k, veh in enumerate(traffic.interacting):
        pair = PairState(
            ego=traffic.ego, other=veh.state,
            ego_params=traffic.ego_params, other_params=veh.params, road=traffic.road,
        )
        goal, _ = pair.resolved_goals()
        for role, p in ((Role.LEADER, veh.belief.p_leader), (Role.FOLLOWER, veh.belief.p_follower)):
            preds = np.empty_like(ego_batch)
            for j, c in enumerate(eval_idx):
                preds[j] = predict_pair_rollout(
                    pair, candidates[c], role, policy, cfg, model_phase, toward_goal
                )
                rollouts_all[c][(veh.vid, role.value)] = preds[j]
            r = reward_terms(
                ego_batch[:, :cfg.N], preds[:, :cfg.N],
                traffic.ego_params, veh.params, road, goal,
            )
            rewards[eval_idx] += p * ((r @ w_arr) @ disc)
            ok = np.all(safe_mask(
                ego_batch[:, 1:], preds[:, 1:],
                traffic.ego_params, veh.params, road, goal,
            ), axis=-1)
            safety[eval_idx, k] += np.where(ok, p, 0.0)
    if m == 0:
        solo_goal, _ = solo_pair.resolved_goals()
        r = reward_terms(
            ego_batch[:, :cfg.N], dummy_states[:cfg.N],
            traffic.ego_params, traffic.ego_params, road, solo_goal,
        )
        rewards[eval_idx] = (r @ w_arr) @ disc

    chance_ok = np.array([chance_constraint_ok(safety[c], cfg.epsilon) for c in range(n)])
    feasible_mask = chance_ok & env_ok
    if np.any(feasible_mask):
        idx_pool = np.flatnonzero(feasible_mask)
        best = idx_pool[int(np.argmax(rewards[idx_pool]))]
        feasible = True
    else:
        totals = safety.sum(axis=1) + env_ok.astype(float)  # prefer env-safe candidates too
        order = np.lexsort((np.arange(n), -rewards, -totals))
        best = int(order[0])
        feasible = False

    return PlanResult(
        chosen=candidates[best],
        chosen_index=int(best),
        expected_reward=float(rewards[best]),
        pair_safety={veh.vid: float(safety[best, k]) for k, veh in enumerate(traffic.interacting)},
        rollouts=rollouts_all[best],
        feasible=feasible,
        candidate_count=n,
    )
