"""Batch command-line interface: run single scenarios, scenario batches, dataset replays,
and log reports."""
from __future__ import annotations

import dataclasses
import json
import os
import sys
from typing import List, Optional

import click

from .dataset import SchemaMap, build_tracks, case_to_scenario, extract_merge_cases, load_dataset
from .rewards import RoadGeometry
from .sim import (
    EventLog,
    Outcome,
    ScenarioConfig,
    batch_run,
    classify_outcome,
    load_scenario,
    run_scenario,
    summary_table,
)


def _apply_overrides(cfg: ScenarioConfig, ctx_obj: dict) -> ScenarioConfig:
    planner = cfg.planner
    updates = {}
    if ctx_obj.get("epsilon") is not None:
        updates["epsilon"] = ctx_obj["epsilon"]
    if ctx_obj.get("horizon") is not None:
        updates["N"] = ctx_obj["horizon"]
    if ctx_obj.get("dt") is not None:
        updates["dT"] = ctx_obj["dt"]
    if updates:
        planner = dataclasses.replace(planner, **updates)
    seed = ctx_obj.get("seed")
    return dataclasses.replace(
        cfg, planner=planner, seed=cfg.seed if seed is None else seed
    )


def _write_log(log: EventLog, out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.log.jsonl")
    with open(path, "w") as fh:
        fh.write(log.to_jsonl())
    return path


@click.group()
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", type=click.Path(file_okay=False), default=".", help="Output directory.")
@click.option("--epsilon", type=float, default=None, help="Override the chance-constraint epsilon.")
@click.option("--horizon", type=int, default=None, help="Override the planning horizon N.")
@click.option("--dt", type=float, default=None, help="Override the sampling period dT.")
@click.pass_context
def main(ctx, seed, out, epsilon, horizon, dt):
    """Forced-merge game controller: scenario runner, batch evaluator, dataset replay."""
    ctx.obj = {"seed": seed, "out": out, "epsilon": epsilon, "horizon": horizon, "dt": dt}


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def run(ctx, scenario):
    """Run one scenario JSON file and write its JSONL event log."""
    try:
        cfg = _apply_overrides(load_scenario(scenario), ctx.obj)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"invalid scenario {scenario}: {exc}")
    outcome, log = run_scenario(cfg)
    name = cfg.name or os.path.splitext(os.path.basename(scenario))[0]
    path = _write_log(log, ctx.obj["out"], name)
    click.echo(f"{name}: {outcome.kind}"
               + (f" (merge step {outcome.merge_step})" if outcome.merge_step is not None else ""))
    click.echo(f"log: {path}")


def _collect_scenarios(paths) -> List[str]:
    files = []
    for p in paths:
        if os.path.isdir(p):
            files.extend(
                os.path.join(p, f) for f in sorted(os.listdir(p)) if f.endswith(".json")
            )
        else:
            files.append(p)
    return files


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.pass_context
def batch(ctx, paths):
    """Run a directory or list of scenario JSON files and emit a summary."""
    files = _collect_scenarios(paths)
    if not files:
        raise click.ClickException("no scenario files found")
    cfgs = []
    for f in files:
        try:
            cfgs.append(_apply_overrides(load_scenario(f), ctx.obj))
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"invalid scenario {f}: {exc}")
    summary = batch_run(cfgs)
    _emit_summary(summary, cfgs, ctx.obj["out"], title="Batch results")


def _emit_summary(summary: dict, cfgs, out_dir: str, title: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    logs = summary.pop("logs")
    for cfg, log in zip(cfgs, logs):
        if log is not None:
            _write_log(log, out_dir, cfg.name or "scenario")
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    table = summary_table(summary, title)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(table + "\n")
    click.echo(table)


@main.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON schema map for non-default column names/units.")
@click.option("--max-cases", type=int, default=None, help="Limit the number of merge cases.")
@click.pass_context
def replay(ctx, dataset, schema_path, max_cases):
    """Extract merge cases from a trajectory CSV and replay them against the controller."""
    schema = SchemaMap()
    if schema_path:
        with open(schema_path) as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(SchemaMap)}
        bad = set(raw) - known
        if bad:
            raise click.ClickException(f"unknown schema map fields: {sorted(bad)}")
        if "ramp_lane_ids" in raw:
            raw["ramp_lane_ids"] = tuple(raw["ramp_lane_ids"])
        try:
            schema = SchemaMap(**raw)
        except (TypeError, ValueError) as exc:
            raise click.ClickException(f"invalid schema map: {exc}")
    try:
        df, diagnostics = load_dataset(dataset, schema)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"loaded {diagnostics['rows_kept']} rows "
               f"({diagnostics['rows_dropped_nan']} NaN, "
               f"{diagnostics['rows_dropped_duplicate']} duplicate dropped), "
               f"{diagnostics['vehicles']} vehicles")
    tracks = build_tracks(df, schema)
    try:
        cases = extract_merge_cases(tracks, schema)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if max_cases is not None:
        cases = cases[:max_cases]
    click.echo(f"extracted {len(cases)} merge cases")
    seed = ctx.obj.get("seed") or 0
    cfgs = [
        _apply_overrides(case_to_scenario(case, seed=seed + i), ctx.obj)
        for i, case in enumerate(cases)
    ]
    summary = batch_run(cfgs) if cfgs else {
        "num_merges": 0, "success": 0, "fail_to_merge": 0, "collision": 0,
        "success_rate": None, "mean_plan_time_s": None, "episodes": [], "errors": [],
        "logs": [],
    }
    _emit_summary(summary, cfgs, ctx.obj["out"], title="Dataset replay results")


@main.command()
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def report(ctx, logs):
    """Re-classify stored JSONL event logs and aggregate a summary table."""
    counts = {"Success": 0, "FailToMerge": 0, "Collision": 0}
    episodes = []
    for path in logs:
        try:
            log = _read_log(path)
        except (ValueError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"bad log {path}: {exc}")
        road = _road_from_meta(log.meta)
        outcome = classify_outcome(log, road)
        counts[outcome.kind] += 1
        episodes.append({
            "name": log.meta.get("name") or os.path.basename(path),
            "outcome": outcome.kind,
            "merge_step": outcome.merge_step,
        })
    total = sum(counts.values())
    summary = {
        "num_merges": total,
        "success": counts["Success"],
        "fail_to_merge": counts["FailToMerge"],
        "collision": counts["Collision"],
        "success_rate": (counts["Success"] / total) if total else None,
        "mean_plan_time_s": None,  # wall-clock timing is not stored in logs
        "episodes": episodes,
        "errors": [],
    }
    out_dir = ctx.obj["out"]
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    click.echo(summary_table(summary, title="Report"))


def _read_log(path: str) -> EventLog:
    meta = None
    records = []
    outcome = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.pop("type", None)
            if kind == "meta":
                meta = obj
            elif kind == "step":
                records.append(obj)
            elif kind == "outcome":
                outcome = Outcome(
                    kind=obj["kind"], merge_step=obj.get("merge_step"),
                    merged_behind=obj.get("merged_behind", []),
                    merged_ahead_of=obj.get("merged_ahead_of", []),
                )
            else:
                raise ValueError(f"unknown record type {kind!r}")
    if meta is None:
        raise ValueError("log has no meta line")
    return EventLog(meta=meta, records=records, outcome=outcome)


def _road_from_meta(meta: dict) -> RoadGeometry:
    r = meta.get("road")
    if r is None:
        raise ValueError("log meta has no road geometry")
    return RoadGeometry(
        lane_centers=tuple(r["lane_centers"]), lane_width=r["lane_width"],
        y_min=r["y_min"], y_max=r["y_max"], merge_lane_end_x=r["merge_lane_end_x"],
        merge_lane=r["merge_lane"], goal_lane=r["goal_lane"],
    )


if __name__ == "__main__":
    main()
