"""Machine-readable exports: trajectory CSV and nested key-value reports.

All numeric output is SI with a fixed column order; identical inputs yield
byte-identical files."""

from __future__ import annotations

import math
from typing import Dict, List

import yaml

from .planning import Path
from .simulate import Scenario, SimLog, min_separation, shadowed_at
from .world import Vec3

CSV_HEADER = "t,x,y,z,theta,v,u,battery,shadow,mode,min_dist"


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".9g")


def trajectory_csv_rows(log: SimLog) -> List[str]:
    rows = [CSV_HEADER]
    for r in log.records:
        rows.append(",".join([
            _num(r.t), _num(r.x), _num(r.y), _num(r.z), _num(r.theta),
            _num(r.v), _num(r.u), _num(r.battery), "1" if r.shadow else "0",
            r.mode.value, _num(r.min_dist)]))
    return rows


def write_trajectory_csv(log: SimLog, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(trajectory_csv_rows(log)) + "\n")


def plan_csv_rows(plan: Path, sc: Scenario) -> List[str]:
    """Waypoint rows for a planned path with static timestamps from durations."""
    rows = [CSV_HEADER]
    t = 0.0
    battery = plan.battery_profile
    for i, wp in enumerate(plan.waypoints):
        if i > 0:
            t += plan.edges[i - 1].duration
        if i < len(plan.waypoints) - 1:
            nxt = plan.waypoints[i + 1]
            theta = math.atan2(nxt.y - wp.y, nxt.x - wp.x)
            speed = plan.edges[i].length / plan.edges[i].duration
        elif plan.edges:
            prev = plan.waypoints[i - 1]
            theta = math.atan2(wp.y - prev.y, wp.x - prev.x)
            speed = 0.0
        else:
            theta = 0.0
            speed = 0.0
        level = battery[i] if battery else sc.battery.energy
        shadow = shadowed_at(sc.env, wp, t, sc.unknown_obstacles)
        sep = min_separation(sc.env, sc.unknown_obstacles, wp)
        rows.append(",".join([
            _num(t), _num(wp.x), _num(wp.y), _num(wp.z), _num(theta),
            _num(speed), "0", _num(level), "1" if shadow else "0",
            "plan", _num(sep)]))
    return rows


def write_plan_csv(plan: Path, sc: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(plan_csv_rows(plan, sc)) + "\n")


def plan_summary(plan: Path, sc: Scenario) -> Dict[str, float]:
    """Planner-level metrics mirroring the simulation Metrics fields."""
    shadow_time = 0.0
    for i, e in enumerate(plan.edges):
        a, b = plan.waypoints[i], plan.waypoints[i + 1]
        mid = Vec3((a.x + b.x) / 2, (a.y + b.y) / 2, (a.z + b.z) / 2)
        if shadowed_at(sc.env, mid, 0.0, ()):
            shadow_time += e.duration
    final = plan.battery_profile[-1] if plan.battery_profile else None
    return {
        "total_time_s": plan.total_duration,
        "consumption_J": plan.total_e_out,
        "harvest_J": plan.total_e_gain,
        "net_cost_J": plan.net_cost,
        "search_cost": plan.search_cost,
        "path_length_m": plan.length,
        "shadow_time_s": shadow_time,
        "final_battery_J": final if final is not None else sc.battery.energy,
        "waypoints": len(plan.waypoints),
    }


def write_report(data: Dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(data, fh, sort_keys=True, default_flow_style=False)


def report_text(data: Dict) -> str:
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=False)
