"""Game-theoretic forced-merge controller: trajectory-set planning with leader-follower
role estimation, chance-constrained candidate selection, and closed-loop simulation."""

from .agents import AgentSpec, IDMParams, WorldView, agent_step, idm_accel
from .beliefs import BeliefConfig, BeliefState, likelihood, residual, update_belief
from .dynamics import (
    Control,
    VehicleParams,
    VehicleState,
    propagate,
    slip_angle,
    step_bicycle,
    step_longitudinal,
)
from .game import GameOutcome, Role, follower_value, policy_action, solve_follower, solve_leader
from .planner import (
    EnvironmentVehicle,
    GamePolicy,
    InteractingVehicle,
    PlanResult,
    PlannerConfig,
    TrafficState,
    chance_constraint_ok,
    plan,
)
from .rewards import (
    PairState,
    RewardWeights,
    RoadGeometry,
    boxes_overlap,
    cumulative_reward,
    is_safe,
    reward_terms,
    stage_reward,
)
from .sim import (
    AgentConfig,
    EventLog,
    Outcome,
    ReplayTrack,
    ScenarioConfig,
    batch_run,
    classify_outcome,
    load_scenario,
    run_scenario,
    save_scenario,
)
from .trajectories import (
    Maneuver,
    Trajectory,
    TrajectoryGenConfig,
    generate_longitudinal_set,
    generate_merge_set,
    recover_controls,
    solve_quintic,
)

__version__ = "0.1.0"
