#!/usr/bin/env python3
"""Generate a small synthetic trajectory CSV in the default NGSIM column layout.

One vehicle accelerates along the on-ramp/auxiliary lane and merges into the adjacent
mainline lane; several mainline vehicles cruise past at constant speed. Useful for
exercising the dataset pipeline and the `replay` CLI command without external data.
"""
import argparse

import numpy as np
import pandas as pd

M_TO_FEET = 1.0 / 0.3048
RAMP_LANE = 7
MAIN_LANE = 6
RAMP_CENTER_M = 6.7   # lateral, m
MAIN_CENTER_M = 3.05
DT = 0.1


def _rows(vid, t0, n, x0, v, y_m, lane, length_m=5.0, width_m=2.0, lat=None):
    frames = np.arange(n)
    x = x0 + v * DT * frames
    y = np.full(n, y_m) if lat is None else lat
    lane_col = lane if np.isscalar(lane) else np.asarray(lane)
    return pd.DataFrame({
        "Vehicle_ID": vid,
        "Frame_ID": t0 + frames,
        "Global_Time": (t0 + frames) * 100,
        "Local_X": y * M_TO_FEET,
        "Local_Y": x * M_TO_FEET,
        "v_Vel": np.full(n, v) * M_TO_FEET,
        "v_Length": length_m * M_TO_FEET,
        "v_Width": width_m * M_TO_FEET,
        "Lane_ID": lane_col,
    })


def build(seed: int = 0) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    n = 300  # 30 s
    parts = []
    # mainline traffic at 20 m/s
    for vid, x0 in ((11, 40.0), (12, 5.0), (13, -30.0)):
        parts.append(_rows(vid, 0, n, x0, 20.0, MAIN_CENTER_M, MAIN_LANE))
    # merging vehicle: ramp until frame 120, quintic lateral transition over 3 s
    merge_start = 120
    lc = 30  # frames
    u = np.clip((np.arange(n) - merge_start) / lc, 0.0, 1.0)
    lat = RAMP_CENTER_M + (MAIN_CENTER_M - RAMP_CENTER_M) * (10 * u**3 - 15 * u**4 + 6 * u**5)
    lane = np.where(np.abs(lat - MAIN_CENTER_M) < np.abs(lat - RAMP_CENTER_M), MAIN_LANE, RAMP_LANE)
    parts.append(_rows(1, 0, n, 20.0, 21.0, None, lane, lat=lat))
    df = pd.concat(parts, ignore_index=True)
    # light measurement noise on positions (smoothing should handle it)
    df["Local_X"] += rng.normal(0, 0.05, len(df))
    df["Local_Y"] += rng.normal(0, 0.15, len(df))
    return df.sort_values(["Frame_ID", "Vehicle_ID"]).reset_index(drop=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output CSV path")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    build(args.seed).to_csv(args.out, index=False)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
