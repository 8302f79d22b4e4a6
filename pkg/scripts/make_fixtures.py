#!/usr/bin/env python3
"""Write the version-controlled fixture scenarios into scenarios/.

Four game-agent fixtures (leader/follower combinations) and four IDM fixtures
(yield-target and time-headway combinations with a constant-speed front vehicle).
"""
import argparse
import os

from mergegame.agents import AgentSpec, IDMParams
from mergegame.dynamics import VehicleParams, VehicleState
from mergegame.rewards import RoadGeometry
from mergegame.sim import AgentConfig, ScenarioConfig, save_scenario

# Game fixtures: interacting vehicles 1..3 approach in a tight platoon from behind at a
# higher speed (nearest-first by decreasing x). The gaps are too small to merge into and
# the closing speed makes cutting in ahead of a proceeding vehicle unsafe, so the outcome
# is decided purely by who yields. The short merge lane forces the ego to slow down and
# commit rather than out-run the platoon.
ROAD_GAME = RoadGeometry(merge_lane_end_x=130.0)
EGO_GAME = VehicleState(0.0, 0.0, 20.0, 0.0)
V_GAME = 26.0
GAME_XS = (-15.0, -25.0, -35.0)
# IDM fixtures: the ego enters at ramp speed with a governed top speed well below the
# highway flow, so it can never match pace with a moving gap and any mid-platoon cut is
# inadmissible; it must either be let in by a yielding vehicle or wait for the platoon to
# pass. The platoon starts at the 0.5 s car-following equilibrium spacing behind a
# constant-speed front vehicle (vehicle 4, not interacting). When vehicle 1 yields to the
# ego it starts further back, giving it room to shed the speed difference before reaching
# the ego instead of overshooting.
EGO_IDM = VehicleState(0.0, 0.0, 14.0, 0.0)
EGO_IDM_PARAMS = VehicleParams(v_max=18.0)
V_IDM = 24.0
IDM_XS_NEAR = (-7.0, -29.0, -51.0)
IDM_XS_FAR = (-22.0, -44.0, -66.0)
ROAD_IDM_NEAR = RoadGeometry(merge_lane_end_x=160.0)
ROAD_IDM_FAR = RoadGeometry(merge_lane_end_x=180.0)
FRONT_X = 44.0  # constant-speed vehicle 4 in the IDM fixtures


def game_fixture(name: str, roles) -> ScenarioConfig:
    agents = [
        AgentConfig(
            vid=str(i),
            spec=AgentSpec(kind="game", role=role),
            state=VehicleState(x, 3.6, V_GAME, 0.0),
            params=VehicleParams(),
        )
        for i, (x, role) in enumerate(zip(GAME_XS, roles), 1)
    ]
    return ScenarioConfig(
        road=ROAD_GAME, ego_state=EGO_GAME, ego_params=VehicleParams(),
        agents=agents, seed=0, name=name,
    )


def idm_fixture(name: str, targets, headways, xs=IDM_XS_NEAR, road=ROAD_IDM_NEAR) -> ScenarioConfig:
    agents = [
        AgentConfig(
            vid=str(i),
            spec=AgentSpec(kind="idm", idm_params=IDMParams(T=T), idm_target=target),
            state=VehicleState(x, 3.6, V_IDM, 0.0),
            params=VehicleParams(),
        )
        for i, (x, target, T) in enumerate(zip(xs, targets, headways), 1)
    ]
    agents.append(AgentConfig(
        vid="4",
        spec=AgentSpec(kind="constant_speed"),
        state=VehicleState(FRONT_X, 3.6, V_IDM, 0.0),
        params=VehicleParams(),
        interacting=False,
    ))
    return ScenarioConfig(
        road=road, ego_state=EGO_IDM, ego_params=EGO_IDM_PARAMS,
        agents=agents, seed=0, name=name,
    )


def build_all():
    return [
        game_fixture("three_leaders", ("leader", "leader", "leader")),
        game_fixture("one_leader_two_followers", ("leader", "follower", "follower")),
        game_fixture("two_leaders_one_follower", ("leader", "leader", "follower")),
        game_fixture("three_followers", ("follower", "follower", "follower")),
        idm_fixture("idm_a", ("ego", "front", "front"), (1.0, 0.5, 0.5),
                    xs=IDM_XS_FAR, road=ROAD_IDM_FAR),
        idm_fixture("idm_b", ("front", "ego", "front"), (0.5, 0.5, 0.5)),
        idm_fixture("idm_c", ("front", "front", "front"), (0.5, 0.5, 0.5)),
        idm_fixture("idm_d", ("front", "front", "front"), (1.5, 1.5, 1.5)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="scenarios", help="output directory")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for cfg in build_all():
        path = os.path.join(args.out, f"{cfg.name}.json")
        save_scenario(cfg, path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
