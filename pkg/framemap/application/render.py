"""
Belief snapshots as PNG images.

Drawn with matplotlib's Agg canvas and written through Pillow, so the output
carries no timestamps or version metadata and identical records give identical
bytes.
"""
from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import numpy as np  # noqa: E402
from matplotlib import patches  # noqa: E402
from matplotlib.backends.backend_agg import FigureCanvasAgg  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from PIL import Image  # noqa: E402

from framemap.core.logger import get_logger  # noqa: E402
from framemap.core.trace import iter_trace  # noqa: E402
from framemap.world.models import WorldMap  # noqa: E402
from framemap.world.scenario import parse_scenario  # noqa: E402

logger = get_logger("application.render")

DPI = 100
MAX_ALPHA = 0.9
MIN_ALPHA = 0.05
_PALETTE = matplotlib.colormaps["tab10"]

_STYLE = {
    "font.size": 8,
    "font.family": "DejaVu Sans",
    "axes.linewidth": 0.8,
}


def owner_color(index: int):
    return _PALETTE(index % _PALETTE.N)


def _draw_map(ax, world_map: WorldMap) -> None:
    b = world_map.bounds
    mass = {room: 0.0 for room in world_map.room_names}
    for _, masses in world_map.priors:
        for room, m in masses:
            if room in mass:
                mass[room] += m
    top = max(mass.values(), default=0.0) or 1.0
    for room in world_map.rooms:
        r = room.rect
        ax.add_patch(
            patches.Rectangle(
                (r.x0, r.y0), r.width, r.height,
                facecolor="#f2c14e", alpha=0.35 * mass[room.name] / top, edgecolor="#999999", linewidth=0.5,
            )
        )
        ax.text(r.x0 + 0.1, r.y1 - 0.1, room.name, va="top", ha="left", color="#555555", fontsize=6)
    for r in world_map.obstacles:
        ax.add_patch(patches.Rectangle((r.x0, r.y0), r.width, r.height, facecolor="#444444", edgecolor="none"))
    ax.add_patch(patches.Rectangle((b.x0, b.y0), b.width, b.height, fill=False, edgecolor="black", linewidth=1.0))
    ax.set_xlim(b.x0, b.x1)
    ax.set_ylim(b.y0, b.y1)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])


def _alphas(weights: np.ndarray) -> np.ndarray:
    top = float(weights.max()) if weights.size else 0.0
    if top <= 0.0:
        return np.full(weights.shape, MIN_ALPHA)
    return np.clip(MAX_ALPHA * weights / top, MIN_ALPHA, MAX_ALPHA)


def _draw_particles(ax, summaries: dict, owners: Sequence[str], first_color: int) -> None:
    for k, owner in enumerate(owners):
        s = summaries[owner]
        color = owner_color(first_color + k)
        positions = np.asarray(s.get("positions") or [], dtype=np.float64).reshape(-1, 2)
        if len(positions):
            weights = np.asarray(s["weights"], dtype=np.float64)
            rgba = np.tile(np.asarray(color, dtype=np.float64), (len(positions), 1))
            rgba[:, 3] = _alphas(weights)
            ax.scatter(positions[:, 0], positions[:, 1], s=6, c=rgba, linewidths=0, label=owner)
        elif s.get("mean") is not None:
            ax.scatter([s["mean"][0]], [s["mean"][1]], s=40, marker="x", color=color, label=owner)


def _draw_truth(ax, record: dict) -> None:
    for cls, obj in sorted((record.get("truth") or {}).items()):
        x, y = obj["position"]
        ax.scatter([x], [y], s=45, marker="*", color="black", zorder=5)
        ax.annotate(cls, (x, y), xytext=(3, 3), textcoords="offset points", fontsize=6, zorder=5)
    robot = record.get("robot")
    if robot:
        x, y, heading = robot["pose"]
        ax.add_patch(patches.Circle((x, y), 0.2, facecolor="#2a6fdb", edgecolor="black", linewidth=0.5, zorder=6))
        tip = (x + 0.4 * np.cos(heading), y + 0.4 * np.sin(heading))
        ax.plot([x, tip[0]], [y, tip[1]], color="black", linewidth=1.0, zorder=7)


def render_snapshot(
    record: dict,
    world_map: WorldMap,
    path: str | Path,
    owners: Optional[Iterable[str]] = None,
    width: float = 6.0,
) -> Path:
    """
    Draw one step record over the map and save it as PNG.

    owners: frame ids and object classes to draw (default: every frame).
    A record without beliefs gives a map-only image.
    """
    path = Path(path)
    b = world_map.bounds
    height = max(2.0, width * b.height / b.width)
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(width, height), dpi=DPI)
        canvas = FigureCanvasAgg(fig)
        ax = fig.add_axes([0.02, 0.02, 0.96, 0.90])
        _draw_map(ax, world_map)
        beliefs = record.get("beliefs") or {}
        frames = beliefs.get("frames") or {}
        objects = beliefs.get("objects") or {}
        wanted = list(owners) if owners is not None else sorted(frames)
        frame_owners = [o for o in wanted if o in frames]
        object_owners = [o for o in wanted if o in objects and o not in frames]
        _draw_particles(ax, frames, frame_owners, 0)
        _draw_particles(ax, objects, object_owners, len(frame_owners))
        _draw_truth(ax, record)
        if frame_owners or object_owners:
            ax.legend(loc="lower right", fontsize=6, markerscale=2, framealpha=0.8)
        title = "t=%s" % record.get("t", "?")
        if record.get("phase"):
            title += "  %s" % record["phase"]
        ax.set_title(title, fontsize=8)
        canvas.draw()
        rgba = np.asarray(canvas.buffer_rgba())
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgba).convert("RGB").save(path, format="PNG", optimize=False)
    return path


def render_trace(
    trace_path: str | Path,
    out_dir: str | Path,
    every: int = 1,
    owners: Optional[Iterable[str]] = None,
) -> list[Path]:
    """
    Render every ``every``-th step record of a trace (and always the last one)
    to ``out_dir/step_<t>.png``. The map comes from the trace header.

    Raises:
        TraceSchemaError: Not a framemap trace, or an unsupported version.
    """
    if every < 1:
        raise ValueError("every must be >= 1")
    it = iter_trace(trace_path)
    header = next(it)
    world_map = parse_scenario(header["scenario"]).map
    owners = list(owners) if owners is not None else None
    steps = [r for r in it if r.get("kind") == "step"]
    chosen = [r for i, r in enumerate(steps) if i % every == 0]
    if steps and (not chosen or chosen[-1] is not steps[-1]):
        chosen.append(steps[-1])
    out = Path(out_dir)
    written = [render_snapshot(r, world_map, out / ("step_%04d.png" % r["t"]), owners) for r in chosen]
    logger.info("Rendered %d snapshot(s) of %s into %s", len(written), trace_path, out)
    return written
