"""
Metrics of runs and suites: mass-by-room tables, mass near the true object and
per-group success accounting.
"""
from collections import OrderedDict
from typing import Dict, Iterable, List, Optional

from framemap.frames.relations import core_class
from framemap.inference.belief import BeliefState
from framemap.world.simulator import World

NEAR_TRUTH_RADIUS = 1.5


def mass_by_room_table(beliefs: BeliefState) -> dict:
    """{"frames": {id: {room: mass}}, "objects": {class: {room: mass}}}."""
    return {
        "frames": {fid: beliefs.mass_by_room(fid) for fid in sorted(beliefs.frame_sets)},
        "objects": {cls: beliefs.mass_by_room(cls) for cls in sorted(beliefs.object_sets)},
    }


def mass_near_truth(beliefs: BeliefState, world: World, radius: float = NEAR_TRUTH_RADIUS) -> Dict[str, Optional[float]]:
    """Per frame: belief mass within radius of the true position of its current core object."""
    out: Dict[str, Optional[float]] = {}
    for fid in sorted(beliefs.frame_sets):
        cls = core_class(beliefs.library[fid], world.state)
        truth = world.object_position(cls) if cls else None
        out[fid] = None if truth is None else beliefs.frame_sets[fid].mass_within(truth, radius)
    return out


def mass_in_rooms(row: Dict[str, float], rooms: Iterable[str]) -> float:
    return float(sum(row.get(room, 0.0) for room in rooms))


def group_summary(rows: List[dict]) -> dict:
    """Strict success accounting of one group's trial rows."""
    n = len(rows)
    successes = sum(1 for r in rows if r["success"])
    counts = {status: sum(1 for r in rows if r["status"] == status) for status in ("timeout", "failure", "error")}
    return {
        "trials": n,
        "successes": successes,
        "success_rate": successes / n if n else 0.0,
        "timeouts": counts["timeout"],
        "failures": counts["failure"],
        "errors": counts["error"],
        "ordering_safe_rate": sum(1 for r in rows if r.get("ordering_safe")) / n if n else 0.0,
        "mean_steps": sum(r["steps"] for r in rows) / n if n else 0.0,
    }


def summarize_suite(name: str, rows: List[dict]) -> dict:
    groups: "OrderedDict[str, List[dict]]" = OrderedDict()
    for row in rows:
        groups.setdefault(row["group"], []).append(row)
    return {
        "suite": name,
        "groups": {g: group_summary(r) for g, r in groups.items()},
        "trials": rows,
    }


def format_summary(report: dict) -> str:
    """Fixed-width text table of a suite report."""
    lines = ["suite: %s" % report["suite"], ""]
    header = "%-18s %7s %8s %8s %9s %7s %10s" % (
        "group", "trials", "success", "rate", "timeouts", "errors", "mean_steps"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for group, s in report["groups"].items():
        lines.append(
            "%-18s %7d %8d %8.3f %9d %7d %10.1f"
            % (group, s["trials"], s["successes"], s["success_rate"], s["timeouts"], s["errors"], s["mean_steps"])
        )
    return "\n".join(lines) + "\n"
