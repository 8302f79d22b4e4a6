"""Trajectory-dataset pipeline: schema-mapped loading of highway trajectory recordings,
Savitzky-Golay track smoothing, merge-event extraction, and replay scenario construction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import savgol_filter

from .agents import AgentSpec
from .beliefs import BeliefConfig
from .dynamics import VehicleParams, VehicleState
from .planner import PlannerConfig
from .rewards import RoadGeometry
from .sim import AgentConfig, ReplayTrack, ScenarioConfig, select_interacting_states

FEET_TO_M = 0.3048
SMOOTH_WINDOW = 21
SMOOTH_POLYORDER = 3


@dataclass(frozen=True)
class SchemaMap:
    """Column names and conventions of the source recording.

    The source's longitudinal coordinate maps to the controller's x axis and the lateral
    coordinate to y. `ramp_lane_ids` are the on-ramp/auxiliary lanes merging vehicles start
    in; `target_lane_id` is the adjacent mainline lane they merge into.
    """

    vehicle_id: str = "Vehicle_ID"
    frame: str = "Frame_ID"
    longitudinal: str = "Local_Y"
    lateral: str = "Local_X"
    lane: str = "Lane_ID"
    length: str = "v_Length"
    width: str = "v_Width"
    units: str = "feet"  # "feet" or "meters"
    frame_dt: float = 0.1
    ramp_lane_ids: Tuple[int, ...] = (7,)
    target_lane_id: int = 6

    def __post_init__(self):
        if self.units not in ("feet", "meters"):
            raise ValueError("units must be 'feet' or 'meters'")
        if self.frame_dt <= 0:
            raise ValueError("frame_dt must be positive")


@dataclass
class Track:
    """One vehicle's smoothed motion, sampled at the recording's frame interval."""

    vid: int
    frames: np.ndarray  # consecutive frame numbers
    x: np.ndarray       # longitudinal position, m
    y: np.ndarray       # lateral position, m
    v: np.ndarray       # longitudinal speed, m/s (smoothed derivative)
    lane: np.ndarray
    length: float
    width: float
    dt: float

    def index_of(self, frame: int) -> Optional[int]:
        i = int(frame - self.frames[0])
        return i if 0 <= i < len(self.frames) else None

    def state_at(self, idx: int) -> VehicleState:
        return VehicleState(float(self.x[idx]), float(self.y[idx]), float(self.v[idx]), 0.0)


@dataclass
class MergeCase:
    """A forced-merge episode: the merging vehicle (to be replaced by the controller) plus
    replayable tracks of every other vehicle present in the time window."""

    case_id: str
    ego_id: int
    start_frame: int
    merge_frame: int
    end_frame: int
    ego_initial: VehicleState
    ego_geometry: Tuple[float, float]  # (length, width)
    others: Dict[int, Track]
    road: RoadGeometry
    dt: float


def load_dataset(path: str, schema: SchemaMap = SchemaMap()) -> Tuple[pd.DataFrame, dict]:
    """Load a recording into SI-normalized columns (id, frame, x, y, lane, length, width).

    Returns the frame plus a diagnostics dict counting rows dropped for missing values and
    duplicated (id, frame) samples.
    """
    df = pd.read_csv(path)
    missing = [c for c in (schema.vehicle_id, schema.frame, schema.longitudinal,
                           schema.lateral, schema.lane) if c not in df.columns]
    if missing:
        raise ValueError(f"dataset is missing required columns: {missing}")
    n_raw = len(df)
    cols = {
        schema.vehicle_id: "id",
        schema.frame: "frame",
        schema.longitudinal: "x",
        schema.lateral: "y",
        schema.lane: "lane",
    }
    if schema.length in df.columns:
        cols[schema.length] = "length"
    if schema.width in df.columns:
        cols[schema.width] = "width"
    out = df[list(cols)].rename(columns=cols).copy()
    if "length" not in out.columns:
        out["length"] = 5.0 / (FEET_TO_M if schema.units == "feet" else 1.0)
    if "width" not in out.columns:
        out["width"] = 2.0 / (FEET_TO_M if schema.units == "feet" else 1.0)
    n_nan = int(out[["id", "frame", "x", "y", "lane"]].isna().any(axis=1).sum())
    out = out.dropna(subset=["id", "frame", "x", "y", "lane"])
    out = out.sort_values(["id", "frame"])
    dup = out.duplicated(subset=["id", "frame"], keep="first")
    n_dup = int(dup.sum())
    out = out[~dup].reset_index(drop=True)
    if schema.units == "feet":
        for c in ("x", "y", "length", "width"):
            out[c] = out[c] * FEET_TO_M
    out["id"] = out["id"].astype(int)
    out["frame"] = out["frame"].astype(int)
    out["lane"] = out["lane"].astype(int)
    diagnostics = {
        "rows_read": n_raw,
        "rows_kept": len(out),
        "rows_dropped_nan": n_nan,
        "rows_dropped_duplicate": n_dup,
        "vehicles": int(out["id"].nunique()),
    }
    return out, diagnostics


def smooth_series(values: np.ndarray, dt: float, deriv: int = 0,
                  window: int = SMOOTH_WINDOW, polyorder: int = SMOOTH_POLYORDER) -> np.ndarray:
    """Savitzky-Golay smoothing (or smoothed derivative) with window shrinkage for short
    series; series shorter than polyorder + 2 pass through (derivative via differences)."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < polyorder + 2:
        if deriv == 0:
            return values.copy()
        return np.gradient(values, dt) if n > 1 else np.zeros(n)
    w = min(window, n if n % 2 == 1 else n - 1)
    if w <= polyorder:
        w = polyorder + 1 + (polyorder % 2)  # smallest valid odd window
    return savgol_filter(values, w, polyorder, deriv=deriv, delta=dt)


def build_tracks(df: pd.DataFrame, schema: SchemaMap = SchemaMap()) -> Dict[int, Track]:
    """Per-vehicle smoothed tracks; vehicles with gaps keep their longest consecutive run."""
    tracks: Dict[int, Track] = {}
    for vid, g in df.groupby("id"):
        g = g.sort_values("frame")
        frames = g["frame"].to_numpy()
        # longest run of consecutive frames
        breaks = np.flatnonzero(np.diff(frames) != 1)
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks + 1, [len(frames)]])
        k = int(np.argmax(ends - starts))
        sl = slice(starts[k], ends[k])
        if ends[k] - starts[k] < 2:
            continue
        x = g["x"].to_numpy()[sl]
        y = g["y"].to_numpy()[sl]
        tracks[int(vid)] = Track(
            vid=int(vid),
            frames=frames[sl],
            x=smooth_series(x, schema.frame_dt),
            y=smooth_series(y, schema.frame_dt),
            v=smooth_series(x, schema.frame_dt, deriv=1),
            lane=g["lane"].to_numpy()[sl],
            length=float(g["length"].iloc[0]),
            width=float(g["width"].iloc[0]),
            dt=schema.frame_dt,
        )
    return tracks


def estimate_road(tracks: Dict[int, Track], schema: SchemaMap = SchemaMap()) -> RoadGeometry:
    """Road geometry from the data: empirical lane centers (median lateral position) for the
    ramp and target lanes, and the merge-lane end from the farthest ramp-lane sample."""
    ramp_y, target_y, ramp_x = [], [], []
    for t in tracks.values():
        on_ramp = np.isin(t.lane, schema.ramp_lane_ids)
        on_target = t.lane == schema.target_lane_id
        ramp_y.extend(t.y[on_ramp])
        target_y.extend(t.y[on_target])
        ramp_x.extend(t.x[on_ramp])
    if not ramp_y or not target_y:
        raise ValueError("dataset has no samples in the ramp or target lane")
    c_ramp = float(np.median(ramp_y))
    c_target = float(np.median(target_y))
    width = abs(c_target - c_ramp)
    if width <= 0.5:
        raise ValueError("ramp and target lane centers are indistinguishable")
    lo, hi = sorted((c_ramp, c_target))
    return RoadGeometry(
        lane_centers=(c_ramp, c_target),
        lane_width=width,
        y_min=lo - width / 2,
        y_max=hi + width / 2,
        merge_lane_end_x=float(np.max(ramp_x)) + 5.0,
        merge_lane=0,
        goal_lane=1,
    )


def select_interacting(
    ego: VehicleState,
    others: Sequence[Tuple[int, VehicleState]],
    road: RoadGeometry,
    headway_s: float = 2.0,
    max_count: int = 3,
) -> List[int]:
    """Target-lane vehicles behind the selection-box front edge ego.x + headway_s * ego.v,
    nearest-first, at most max_count."""
    ids = select_interacting_states(
        ego, [(str(vid), s) for vid, s in others], road, headway_s, max_count
    )
    return [int(v) for v in ids]


def extract_merge_cases(
    tracks: Dict[int, Track],
    schema: SchemaMap = SchemaMap(),
    road: Optional[RoadGeometry] = None,
    t_before: float = 2.0,
    t_after: float = 8.0,
) -> List[MergeCase]:
    """Find vehicles that transition from a ramp lane to the target lane and cut a window
    [merge - t_before, merge + t_after] with replay tracks for all concurrent vehicles."""
    if road is None:
        road = estimate_road(tracks, schema)
    cases: List[MergeCase] = []
    for vid, t in sorted(tracks.items()):
        on_ramp = np.isin(t.lane, schema.ramp_lane_ids)
        on_target = t.lane == schema.target_lane_id
        merge_idx = None
        for i in range(1, len(t.lane)):
            if on_target[i] and on_ramp[:i].any() and on_ramp[i - 1]:
                merge_idx = i
                break
        if merge_idx is None:
            continue
        i0 = max(0, merge_idx - int(round(t_before / t.dt)))
        i1 = min(len(t.frames) - 1, merge_idx + int(round(t_after / t.dt)))
        if i1 <= i0:
            continue
        f0, f1 = int(t.frames[i0]), int(t.frames[i1])
        others = {}
        for ovid, ot in tracks.items():
            if ovid == vid:
                continue
            j0, j1 = ot.index_of(f0), ot.index_of(f1)
            if j0 is None and j1 is None and not (ot.frames[0] > f0 and ot.frames[-1] < f1):
                continue
            a = max(int(ot.frames[0]), f0)
            b = min(int(ot.frames[-1]), f1)
            if b <= a:
                continue
            others[ovid] = ot
        cases.append(MergeCase(
            case_id=f"merge_{vid}_{f0}",
            ego_id=vid,
            start_frame=f0,
            merge_frame=int(t.frames[merge_idx]),
            end_frame=f1,
            ego_initial=t.state_at(i0),
            ego_geometry=(t.length, t.width),
            others=others,
            road=road,
            dt=t.dt,
        ))
    return cases


def case_to_scenario(
    case: MergeCase,
    planner: PlannerConfig = PlannerConfig(),
    beliefs: BeliefConfig = BeliefConfig(),
    seed: int = 0,
) -> ScenarioConfig:
    """Replay scenario: controller replaces the recorded merging vehicle; every other
    vehicle replays its recording; interacting vehicles are re-selected each step."""
    horizon_s = (case.end_frame - case.start_frame) * case.dt
    max_steps = max(1, int(np.ceil(horizon_s / planner.dT)))
    agents = []
    replay_tracks = {}
    for ovid, ot in case.others.items():
        a = ot.index_of(case.start_frame)
        if a is None:
            a = 0 if ot.frames[0] > case.start_frame else len(ot.frames) - 1
        b = ot.index_of(case.end_frame)
        if b is None:
            b = len(ot.frames) - 1
        rid = f"track_{ovid}"
        replay_tracks[rid] = ReplayTrack(
            t0=float(ot.frames[a]) * ot.dt,
            x=ot.x[a:b + 1].copy(), y=ot.y[a:b + 1].copy(),
            v=ot.v[a:b + 1].copy(), lane=ot.lane[a:b + 1].copy(),
            dt=ot.dt,
        )
        agents.append(AgentConfig(
            vid=str(ovid),
            spec=AgentSpec(kind="replay", replay_id=rid),
            state=ot.state_at(a),
            params=VehicleParams(length=ot.length, width=ot.width),
            interacting=False,  # selection refreshes each step
        ))
    ego_len, ego_wid = case.ego_geometry
    return ScenarioConfig(
        road=case.road,
        ego_state=case.ego_initial,
        ego_params=VehicleParams(length=ego_len, width=ego_wid),
        agents=agents,
        planner=planner,
        beliefs=beliefs,
        max_steps=max_steps,
        seed=seed,
        name=case.case_id,
        auto_select_interacting=True,
        replay_tracks=replay_tracks,
    )
