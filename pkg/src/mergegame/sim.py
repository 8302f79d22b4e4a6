"""Closed-loop scenario engine: config schema, stepping, per-step logging, outcome
classification, and batch metrics."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agents import AgentSpec, IDMParams, idm_accel
from .beliefs import BeliefConfig, BeliefState, likelihood, update_belief
from .dynamics import VehicleParams, VehicleState, step_longitudinal
from .game import Role
from .planner import (
    EnvironmentVehicle,
    GamePolicy,
    InteractingVehicle,
    PlannerConfig,
    TrafficState,
    plan,
)
from .rewards import RewardWeights, RoadGeometry, boxes_overlap, SAFETY_MARGIN

SCHEMA_VERSION = 1
MERGE_COMPLETION_TOL = 0.2  # m from the target lane center


@dataclass
class AgentConfig:
    vid: str
    spec: AgentSpec
    state: VehicleState
    params: VehicleParams
    interacting: bool = True


@dataclass
class ReplayTrack:
    """Recorded motion of one replay vehicle, sampled at replay_dt."""

    t0: float
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    lane: np.ndarray
    dt: float = 0.1


@dataclass
class ScenarioConfig:
    road: RoadGeometry
    ego_state: VehicleState
    ego_params: VehicleParams
    agents: List[AgentConfig]
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    beliefs: BeliefConfig = field(default_factory=BeliefConfig)
    max_steps: int = 30
    seed: int = 0
    name: str = ""
    auto_select_interacting: bool = False
    replay_tracks: Dict[str, ReplayTrack] = field(default_factory=dict)


@dataclass
class Outcome:
    kind: str  # "Success" | "FailToMerge" | "Collision"
    merge_step: Optional[int] = None
    merged_behind: List[str] = field(default_factory=list)     # ids ahead of ego at completion
    merged_ahead_of: List[str] = field(default_factory=list)   # ids behind ego at completion

    def __post_init__(self):
        if self.kind not in ("Success", "FailToMerge", "Collision"):
            raise ValueError(f"unknown outcome kind {self.kind!r}")


@dataclass
class EventLog:
    meta: dict
    records: List[dict] = field(default_factory=list)
    plan_times: List[float] = field(default_factory=list)  # volatile; never serialized
    outcome: Optional[Outcome] = None

    def to_jsonl(self) -> str:
        """Serialize the episode. Wall-clock timing is deliberately excluded so that logs
        of identical runs are bitwise identical."""
        lines = [json.dumps({"type": "meta", **self.meta}, sort_keys=True)]
        lines += [json.dumps({"type": "step", **r}, sort_keys=True) for r in self.records]
        if self.outcome is not None:
            lines.append(json.dumps({
                "type": "outcome",
                "kind": self.outcome.kind,
                "merge_step": self.outcome.merge_step,
                "merged_behind": self.outcome.merged_behind,
                "merged_ahead_of": self.outcome.merged_ahead_of,
            }, sort_keys=True))
        return "\n".join(lines) + "\n"


def select_interacting_states(
    ego: VehicleState,
    vehicles: Sequence[Tuple[str, VehicleState]],
    road: RoadGeometry,
    headway_s: float = 2.0,
    max_count: int = 3,
) -> List[str]:
    """Ids of up to `max_count` target-lane vehicles behind the selection-box front edge
    (ego.x + headway_s * ego.v), ordered nearest-first by decreasing x."""
    edge = ego.x + headway_s * ego.v
    goal_y = road.lane_centers[road.goal_lane]
    cands = [
        (s.x, vid)
        for vid, s in vehicles
        if abs(s.y - goal_y) < road.lane_width / 2 and s.x <= edge
    ]
    cands.sort(key=lambda p: (-p[0], p[1]))
    return [vid for _, vid in cands[:max_count]]


def _vehicle_record(s: VehicleState) -> dict:
    return {"x": s.x, "y": s.y, "v": s.v, "psi": s.psi}


def _collisions(ego: VehicleState, ego_params: VehicleParams, others, margin: float) -> List[str]:
    hit = []
    m = margin / 2.0
    for vid, s, p in others:
        if bool(boxes_overlap(
            ego.x, ego.y, ego.psi, ego_params.length / 2 + m, ego_params.width / 2 + m,
            s.x, s.y, s.psi, p.length / 2 + m, p.width / 2 + m,
        )):
            hit.append(vid)
    return hit


class _EgoPhase:
    """Tracks the ego's lateral transition: destination lane index and elapsed time."""

    def __init__(self):
        self.dest: Optional[int] = None
        self.progress: float = 0.0

    def active(self) -> bool:
        return self.dest is not None

    def as_record(self):
        return None if self.dest is None else {"dest": self.dest, "progress": self.progress}


def _advance_phase(phase: _EgoPhase, maneuver, road: RoadGeometry, planner: PlannerConfig) -> None:
    """Update the ego lateral phase after applying the first control of the chosen candidate."""
    if maneuver.kind == "lane_keep":
        phase.dest, phase.progress = None, 0.0
        return
    if maneuver.kind == "lane_change":
        if maneuver.start_step == 0:
            dest = road.goal_lane if phase.dest is None else phase.dest
            phase.dest, phase.progress = dest, planner.dT
        else:
            phase.dest, phase.progress = None, 0.0
    elif maneuver.kind == "continue_change":
        phase.progress += planner.dT
    elif maneuver.kind == "abort":
        if maneuver.start_step == 0:
            other = road.merge_lane if phase.dest == road.goal_lane else road.goal_lane
            phase.dest, phase.progress = other, planner.dT
        else:
            phase.progress += planner.dT
    if phase.dest is not None and phase.progress >= planner.T_lc - 1e-9:
        phase.dest, phase.progress = None, 0.0


def run_scenario(cfg: ScenarioConfig) -> Tuple[Outcome, EventLog]:
    """Run one closed-loop episode. Per step: refresh interacting selection (replay mode),
    update beliefs from one-step residuals, plan, apply the ego's first control, then step
    all agents and commit states atomically."""
    rng = np.random.default_rng(cfg.seed)
    road, planner_cfg, belief_cfg = cfg.road, cfg.planner, cfg.beliefs
    goal_y = road.lane_centers[road.goal_lane]
    policy = GamePolicy(road, planner_cfg)

    ego = cfg.ego_state
    ego_params = cfg.ego_params
    phase = _EgoPhase()
    agents = {a.vid: a for a in cfg.agents}
    for a in cfg.agents:
        if a.spec.kind == "replay" and a.spec.replay_id not in cfg.replay_tracks:
            raise ValueError(f"replay agent {a.vid!r}: no track for replay_id {a.spec.replay_id!r}")
    states: Dict[str, VehicleState] = {a.vid: a.state for a in cfg.agents}
    beliefs: Dict[str, BeliefState] = {}
    prev_pred: Dict[str, Dict[str, VehicleState]] = {}

    log = EventLog(meta={
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "seed": cfg.seed,
        "road": {
            "lane_centers": list(road.lane_centers), "lane_width": road.lane_width,
            "y_min": road.y_min, "y_max": road.y_max,
            "merge_lane_end_x": road.merge_lane_end_x,
            "merge_lane": road.merge_lane, "goal_lane": road.goal_lane,
        },
        "vehicle_geometry": {
            "ego": {"length": ego_params.length, "width": ego_params.width},
            **{vid: {"length": a.params.length, "width": a.params.width} for vid, a in agents.items()},
        },
        "merge_completion_tol": MERGE_COMPLETION_TOL,
    })

    for step in range(cfg.max_steps):
        # (1) interacting-vehicle selection
        if cfg.auto_select_interacting:
            interacting_ids = select_interacting_states(
                ego, [(vid, s) for vid, s in states.items()], road
            )
        else:
            interacting_ids = [a.vid for a in cfg.agents if a.interacting]
        for vid in interacting_ids:
            beliefs.setdefault(vid, belief_cfg.initial_belief())

        # (2) belief update from the previous step's role-conditioned predictions
        degenerate: List[str] = []
        for vid in interacting_ids:
            pred = prev_pred.get(vid)
            if pred is None:
                continue
            lams = {}
            for role in ("leader", "follower"):
                obs = states[vid].as_array() - pred[role].as_array()
                lams[role] = likelihood(obs, belief_cfg.W)
            if lams["leader"] == 0.0 and lams["follower"] == 0.0:
                degenerate.append(vid)
            beliefs[vid] = update_belief(beliefs[vid], lams["leader"], lams["follower"], belief_cfg)

        # (3) plan
        interacting = [
            InteractingVehicle(vid, states[vid], agents[vid].params, beliefs[vid])
            for vid in interacting_ids
        ]
        environment = [
            EnvironmentVehicle(vid, states[vid], agents[vid].params)
            for vid in states
            if vid not in interacting_ids
        ]
        traffic = TrafficState(
            ego=ego, ego_params=ego_params, road=road,
            interacting=interacting, environment=environment,
            ego_phase=(phase.progress if phase.active() else None),
            ego_change_dest=phase.dest,
        )
        t0 = time.perf_counter()
        result = plan(traffic, planner_cfg, policy=policy)
        log.plan_times.append(time.perf_counter() - t0)

        # (4) log, then commit the ego's first control
        record = {
            "step": step,
            "ego": _vehicle_record(ego),
            "ego_phase": phase.as_record(),
            "vehicles": {vid: _vehicle_record(s) for vid, s in states.items()},
            "interacting": list(interacting_ids),
            "beliefs": {vid: {"leader": beliefs[vid].p_leader, "follower": beliefs[vid].p_follower}
                        for vid in interacting_ids},
            "belief_degenerate": degenerate,
            "chosen_maneuver": {"kind": result.chosen.maneuver.kind,
                                "start_step": result.chosen.maneuver.start_step},
            "chosen_index": result.chosen_index,
            "expected_reward": result.expected_reward,
            "pair_safety": result.pair_safety,
            "feasible": result.feasible,
            "candidate_count": result.candidate_count,
        }
        log.records.append(record)

        # one-step role-conditioned predictions for the next belief update
        merge_phase = phase.progress if phase.dest == road.goal_lane else None
        for vid in interacting_ids:
            preds = {}
            for role in (Role.LEADER, Role.FOLLOWER):
                traj = policy.action(states[vid], agents[vid].params, ego, ego_params, merge_phase, role)
                preds[role.value] = traj.state_at(1)
            prev_pred[vid] = preds
        for vid in list(prev_pred):
            if vid not in interacting_ids:
                del prev_pred[vid]

        new_ego = result.chosen.state_at(1)
        _advance_phase(phase, result.chosen.maneuver, road, planner_cfg)

        # (5) step all agents against the frozen pre-commit world, then commit
        new_states: Dict[str, VehicleState] = {}
        for vid, a in agents.items():
            s = states[vid]
            if a.spec.kind == "replay":
                track = cfg.replay_tracks[a.spec.replay_id]
                idx = (step + 1) * max(1, int(round(planner_cfg.dT / track.dt)))
                if idx < len(track.x):
                    new_states[vid] = VehicleState(
                        float(track.x[idx]), float(track.y[idx]), float(track.v[idx]), 0.0
                    )
                else:
                    new_states[vid] = VehicleState(s.x + s.v * planner_cfg.dT, s.y, s.v, s.psi)
                continue
            if a.spec.kind == "constant_speed":
                new_states[vid] = VehicleState(s.x + s.v * planner_cfg.dT, s.y, s.v, s.psi)
                continue
            if a.spec.kind == "idm":
                lengths = {ov: agents[ov].params.length for ov in states}
                # the ego signals its merge intention from the start of the episode
                new_states[vid] = _idm_commit(
                    a, s, states, lengths, ego, ego_params, True, road, planner_cfg
                )
                continue
            # game agent
            traj = policy.action(s, a.params, ego, ego_params, merge_phase, Role(a.spec.role))
            nxt = step_longitudinal(s, float(traj.controls[0, 0]), a.params, planner_cfg.dT)
            if a.spec.noise_std:
                noise = rng.normal(0.0, np.asarray(a.spec.noise_std))
                arr = nxt.as_array() + noise
                arr[2] = min(max(arr[2], a.params.v_min), a.params.v_max)
                nxt = VehicleState.from_array(arr)
            new_states[vid] = nxt
        ego = new_ego
        states = new_states

        # terminal checks on the committed state
        others = [(vid, states[vid], agents[vid].params) for vid in states]
        if _collisions(ego, ego_params, others, SAFETY_MARGIN):
            log.records.append(_terminal_record(step + 1, ego, phase, states, beliefs, interacting_ids))
            break
        merged = phase.dest is None and abs(ego.y - goal_y) < MERGE_COMPLETION_TOL
        overrun = (
            abs(ego.y - road.lane_centers[road.merge_lane]) < road.lane_width / 2
            and not merged
            and ego.x > road.merge_lane_end_x
        )
        if merged or overrun:
            log.records.append(_terminal_record(step + 1, ego, phase, states, beliefs, interacting_ids))
            break
    else:
        log.records.append(_terminal_record(cfg.max_steps, ego, phase, states, beliefs, interacting_ids))

    outcome = classify_outcome(log, road)
    log.outcome = outcome
    return outcome, log


def _idm_commit(
    a: AgentConfig,
    s: VehicleState,
    states: Dict[str, VehicleState],
    lengths: Dict[str, float],
    ego: VehicleState,
    ego_params: VehicleParams,
    ego_signaling: bool,
    road: RoadGeometry,
    planner_cfg: PlannerConfig,
    substep: float = 0.1,
) -> VehicleState:
    """Integrate an IDM agent over one sampling period at sub-steps with frozen targets.

    Agents with idm_target="ego" switch their following target to the merging ego as soon
    as it signals merge intent (mid lane change or already in the goal lane) and is ahead.
    """
    p = a.spec.idm_params or IDMParams()
    own_lane = int(road.lane_of(s.y))
    front = None
    pool = [(vid, st, lengths[vid]) for vid, st in states.items() if vid != a.vid]
    pool.append(("__ego__", ego, ego_params.length))
    for vid, st, ln in pool:
        if int(road.lane_of(st.y)) == own_lane and st.x > s.x:
            if front is None or st.x < front[1].x:
                front = (vid, st, ln)
    target = None
    if a.spec.idm_target == "ego" and ego_signaling and ego.x > s.x:
        target = (ego, ego_params.length)
    elif front is not None:
        target = (front[1], front[2])
    n = max(1, int(round(planner_cfg.dT / substep)))
    h = planner_cfg.dT / n
    x, v = s.x, s.v
    elapsed = 0.0
    for _ in range(n):
        if target is None:
            acc = idm_accel(v, math.inf, 0.0, p, a.params.a_bound)
        else:
            t_state, t_len = target
            # the frozen target coasts at its committed speed during the sub-steps
            phi = t_state.x + t_state.v * elapsed - x - t_len
            acc = idm_accel(v, phi, v - t_state.v, p, a.params.a_bound)
        x += v * h
        v = min(max(v + acc * h, a.params.v_min), a.params.v_max)
        elapsed += h
    return VehicleState(x, s.y, v, s.psi)


def _terminal_record(step, ego, phase, states, beliefs, interacting_ids) -> dict:
    return {
        "step": step,
        "ego": _vehicle_record(ego),
        "ego_phase": phase.as_record(),
        "vehicles": {vid: _vehicle_record(s) for vid, s in states.items()},
        "interacting": list(interacting_ids),
        "beliefs": {vid: {"leader": b.p_leader, "follower": b.p_follower}
                    for vid, b in beliefs.items() if vid in interacting_ids},
        "terminal": True,
    }


def classify_outcome(log: EventLog, road: RoadGeometry) -> Outcome:
    """Pure re-classification of a complete episode log."""
    goal_y = road.lane_centers[road.goal_lane]
    merge_y = road.lane_centers[road.merge_lane]
    geom = log.meta.get("vehicle_geometry", {})
    ego_geom = geom.get("ego", {"length": 5.0, "width": 2.0})
    m = SAFETY_MARGIN / 2.0
    tol = log.meta.get("merge_completion_tol", MERGE_COMPLETION_TOL)
    for rec in log.records:
        e = rec["ego"]
        for vid, s in rec["vehicles"].items():
            g = geom.get(vid, {"length": 5.0, "width": 2.0})
            if bool(boxes_overlap(
                e["x"], e["y"], e["psi"], ego_geom["length"] / 2 + m, ego_geom["width"] / 2 + m,
                s["x"], s["y"], s["psi"], g["length"] / 2 + m, g["width"] / 2 + m,
            )):
                return Outcome("Collision", merge_step=rec["step"])
    for rec in log.records:
        e = rec["ego"]
        if rec.get("ego_phase") is None and abs(e["y"] - goal_y) < tol:
            ahead = [vid for vid, s in rec["vehicles"].items() if s["x"] > e["x"]]
            behind = [vid for vid, s in rec["vehicles"].items() if s["x"] <= e["x"]]
            ahead.sort(key=lambda vid: -rec["vehicles"][vid]["x"])
            behind.sort(key=lambda vid: -rec["vehicles"][vid]["x"])
            return Outcome("Success", merge_step=rec["step"],
                           merged_behind=ahead, merged_ahead_of=behind)
    return Outcome("FailToMerge")


def batch_run(cfgs: Sequence[ScenarioConfig]) -> dict:
    """Run a list of scenarios; per-scenario failures are recorded and the batch continues."""
    if not cfgs:
        raise ValueError("empty scenario list")
    rows = []
    counts = {"Success": 0, "FailToMerge": 0, "Collision": 0}
    plan_times: List[float] = []
    errors = []
    logs = []
    for cfg in cfgs:
        try:
            outcome, log = run_scenario(cfg)
        except Exception as exc:  # noqa: BLE001 - batch must survive bad scenarios
            errors.append({"name": cfg.name, "error": str(exc)})
            logs.append(None)
            continue
        counts[outcome.kind] += 1
        plan_times.extend(log.plan_times)
        rows.append({"name": cfg.name, "outcome": outcome.kind, "merge_step": outcome.merge_step})
        logs.append(log)
    total = sum(counts.values())
    return {
        "num_merges": total,
        "success": counts["Success"],
        "fail_to_merge": counts["FailToMerge"],
        "collision": counts["Collision"],
        "success_rate": (counts["Success"] / total) if total else None,
        "mean_plan_time_s": (sum(plan_times) / len(plan_times)) if plan_times else None,
        "episodes": rows,
        "errors": errors,
        "logs": logs,
    }


def summary_table(summary: dict, title: str = "Batch results") -> str:
    """Plain-text table mirroring the success-statistics layout."""
    rate = summary["success_rate"]
    lines = [
        title,
        "-" * len(title),
        f"{'Number of Merges':<20}{summary['num_merges']}",
        f"{'Success':<20}{summary['success']}",
        f"{'Fail to Merge':<20}{summary['fail_to_merge']}",
        f"{'Collision':<20}{summary['collision']}",
        f"{'Success Rate':<20}{'-' if rate is None else f'{100 * rate:.1f}%'}",
    ]
    if summary.get("mean_plan_time_s") is not None:
        lines.append(f"{'Mean Plan Time [s]':<20}{summary['mean_plan_time_s']:.3f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# JSON scenario schema


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ValueError(f"scenario config: missing field {path}.{key}")
    return d[key]


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    r = cfg.road
    return {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "seed": cfg.seed,
        "max_steps": cfg.max_steps,
        "auto_select_interacting": cfg.auto_select_interacting,
        "road": {
            "lane_centers": list(r.lane_centers), "lane_width": r.lane_width,
            "y_min": r.y_min, "y_max": r.y_max, "merge_lane_end_x": r.merge_lane_end_x,
            "merge_lane": r.merge_lane, "goal_lane": r.goal_lane,
        },
        "ego": {
            "state": vars(cfg.ego_state),
            "params": vars(cfg.ego_params),
        },
        "planner": {
            "N": cfg.planner.N, "dT": cfg.planner.dT, "lam": cfg.planner.lam,
            "epsilon": cfg.planner.epsilon, "T_lc": cfg.planner.T_lc,
            "weights": list(cfg.planner.weights.as_array()),
            "ego_accel_levels": list(cfg.planner.ego_accel_levels),
            "other_accel_levels": list(cfg.planner.other_accel_levels),
            "model_accel_levels": list(cfg.planner.model_accel_levels),
        },
        "beliefs": {
            "W": np.asarray(cfg.beliefs.W).tolist(),
            "p0": list(cfg.beliefs.p0),
            "floor": cfg.beliefs.floor,
        },
        "agents": [
            {
                "id": a.vid,
                "interacting": a.interacting,
                "state": vars(a.state),
                "params": vars(a.params),
                "spec": {
                    "kind": a.spec.kind,
                    "role": a.spec.role,
                    "idm_target": a.spec.idm_target,
                    "idm_params": None if a.spec.idm_params is None else vars(a.spec.idm_params),
                    "replay_id": a.spec.replay_id,
                    "noise_std": list(a.spec.noise_std),
                },
            }
            for a in cfg.agents
        ],
        "replay_tracks": {
            vid: {"t0": t.t0, "dt": t.dt, "x": t.x.tolist(), "y": t.y.tolist(),
                  "v": t.v.tolist(), "lane": t.lane.tolist()}
            for vid, t in cfg.replay_tracks.items()
        },
    }


def scenario_from_dict(d: dict) -> ScenarioConfig:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"scenario config: unsupported schema_version {d.get('schema_version')!r}"
        )
    rd = _require(d, "road", "$")
    road = RoadGeometry(
        lane_centers=tuple(_require(rd, "lane_centers", "$.road")),
        lane_width=_require(rd, "lane_width", "$.road"),
        y_min=rd.get("y_min", -1.8), y_max=rd.get("y_max", 5.4),
        merge_lane_end_x=_require(rd, "merge_lane_end_x", "$.road"),
        merge_lane=rd.get("merge_lane", 0), goal_lane=rd.get("goal_lane", 1),
    )
    ego = _require(d, "ego", "$")
    ego_state = VehicleState(**_require(ego, "state", "$.ego"))
    ego_params = VehicleParams(**ego.get("params", {}))
    pl = d.get("planner", {})
    weights = pl.get("weights")
    planner = PlannerConfig(
        N=pl.get("N", 4), dT=pl.get("dT", 1.0), lam=pl.get("lam", 0.8),
        epsilon=pl.get("epsilon", 0.1), T_lc=pl.get("T_lc", 3.0),
        weights=RewardWeights(*weights) if weights else RewardWeights(),
        ego_accel_levels=tuple(pl.get("ego_accel_levels", (-2.0, 0.0, 2.0))),
        other_accel_levels=tuple(pl.get("other_accel_levels", (-2.0, 0.0, 2.0))),
        model_accel_levels=tuple(pl.get("model_accel_levels", (0.0,))),
    )
    bl = d.get("beliefs", {})
    bel_kwargs = {}
    if "W" in bl:
        bel_kwargs["W"] = np.asarray(bl["W"])
    if "p0" in bl:
        bel_kwargs["p0"] = tuple(bl["p0"])
    if "floor" in bl:
        bel_kwargs["floor"] = bl["floor"]
    beliefs = BeliefConfig(**bel_kwargs)
    agents = []
    for i, a in enumerate(d.get("agents", [])):
        path = f"$.agents[{i}]"
        sp = _require(a, "spec", path)
        idm = sp.get("idm_params")
        spec = AgentSpec(
            kind=_require(sp, "kind", path + ".spec"),
            role=sp.get("role"),
            idm_params=None if idm is None else IDMParams(**idm),
            idm_target=sp.get("idm_target", "front"),
            replay_id=sp.get("replay_id"),
            noise_std=tuple(sp.get("noise_std", ())),
        )
        agents.append(AgentConfig(
            vid=str(_require(a, "id", path)),
            spec=spec,
            state=VehicleState(**_require(a, "state", path)),
            params=VehicleParams(**a.get("params", {})),
            interacting=a.get("interacting", True),
        ))
    tracks = {
        vid: ReplayTrack(
            t0=t.get("t0", 0.0), dt=t.get("dt", 0.1),
            x=np.asarray(t["x"], dtype=float), y=np.asarray(t["y"], dtype=float),
            v=np.asarray(t["v"], dtype=float), lane=np.asarray(t["lane"]),
        )
        for vid, t in d.get("replay_tracks", {}).items()
    }
    cfg = ScenarioConfig(
        road=road, ego_state=ego_state, ego_params=ego_params, agents=agents,
        planner=planner, beliefs=beliefs,
        max_steps=d.get("max_steps", 30), seed=d.get("seed", 0),
        name=d.get("name", ""), auto_select_interacting=d.get("auto_select_interacting", False),
        replay_tracks=tracks,
    )
    merge_y = road.lane_centers[road.merge_lane]
    if abs(ego_state.y - merge_y) > road.lane_width / 2:
        raise ValueError("scenario config: $.ego.state.y must start in the merge lane")
    return cfg


def load_scenario(path: str) -> ScenarioConfig:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(cfg), fh, indent=2, sort_keys=True)
