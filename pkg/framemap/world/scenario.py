"""
Scenario language: the annotated map, object placements and the robot start.

Grammar (same line conventions as frame libraries)::

    map [<name>]
      bounds <x0> <y0> <x1> <y1>
      room <name> <x0> <y0> <x1> <y1>
      obstacle <x0> <y0> <x1> <y1>
    end
    prior <class> <room> <mass>
    object <class> (<x> <y> | random) [<flag> ...]
    robot <x> <y> <heading> [holding <class>]
    waypoint <x> <y>
    affordance object | pose
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import pyparsing as pp

from framemap.core.exceptions import DefinitionSyntaxError, GeometryError
from framemap.frames.dsl.grammar import (
    IDENT,
    NUMBER,
    SourceLine,
    format_number,
    iter_source_lines,
    kw,
    last_line_number,
    parse_line,
    unknown_key,
)
from framemap.frames.models import Pose

from .geometry import Rect
from .models import Room, WorldMap

AFFORDANCE_OBJECT = "object"
AFFORDANCE_POSE = "pose"

MAP_KEYS = ("bounds", "room", "obstacle", "end")
TOP_KEYS = ("map", "prior", "object", "robot", "waypoint", "affordance")

_RECT = NUMBER("x0") + NUMBER("y0") + NUMBER("x1") + NUMBER("y1")
_MAP_GRAMMARS = {
    "bounds": kw("bounds").suppress() + _RECT,
    "room": kw("room").suppress() + IDENT("name") + _RECT,
    "obstacle": kw("obstacle").suppress() + _RECT,
    "end": kw("end"),
}
_TOP_GRAMMARS = {
    "map": kw("map").suppress() + pp.Optional(IDENT("name")),
    "prior": kw("prior").suppress() + IDENT("cls") + IDENT("room") + NUMBER("mass"),
    "object": kw("object").suppress()
    + IDENT("cls")
    + (kw("random")("random") | NUMBER("x") + NUMBER("y"))
    + pp.Group(pp.ZeroOrMore(IDENT))("flags"),
    "robot": kw("robot").suppress()
    + NUMBER("x")
    + NUMBER("y")
    + NUMBER("heading")
    + pp.Optional(kw("holding").suppress() + IDENT("holding")),
    "waypoint": kw("waypoint").suppress() + NUMBER("x") + NUMBER("y"),
    "affordance": kw("affordance").suppress() + (kw(AFFORDANCE_OBJECT) | kw(AFFORDANCE_POSE))("mode"),
}


@dataclass(frozen=True)
class ObjectSpec:
    """Object placement; ``position`` None means a seeded random placement."""

    cls: str
    position: Optional[Tuple[float, float]] = None
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Scenario:
    map: WorldMap
    robot: Pose
    objects: Tuple[ObjectSpec, ...] = ()
    holding: Optional[str] = None
    waypoints: Tuple[Tuple[float, float], ...] = ()
    affordance: str = AFFORDANCE_OBJECT

    def object_spec(self, cls: str) -> Optional[ObjectSpec]:
        for spec in self.objects:
            if spec.cls == cls:
                return spec
        return None


def _rect(r: pp.ParseResults, line: SourceLine) -> Rect:
    try:
        return Rect(float(r["x0"]), float(r["y0"]), float(r["x1"]), float(r["y1"]))
    except ValueError as e:
        raise GeometryError("line %d: %s" % (line.number, e)) from None


def _once(seen: Dict[str, int], line: SourceLine) -> None:
    if line.key in seen:
        raise DefinitionSyntaxError(
            "duplicate '%s' (first on line %d)" % (line.key, seen[line.key]), line=line.number, column=line.key_column
        )
    seen[line.key] = line.number


def parse_scenario(source_text: str) -> Scenario:
    """
    Parse and validate a scenario document.

    Raises:
        DefinitionSyntaxError: Malformed statement (with line and column).
        GeometryError: Geometry or reference inconsistency.
    """
    seen: Dict[str, int] = {}
    in_map = False
    bounds: Optional[Rect] = None
    map_name = "map"
    rooms: List[Room] = []
    obstacles: List[Tuple[Rect, int]] = []
    priors: Dict[str, List[Tuple[str, float, int]]] = {}
    objects: List[Tuple[ObjectSpec, int]] = []
    robot: Optional[Tuple[Pose, Optional[str], int]] = None
    waypoints: List[Tuple[Tuple[float, float], int]] = []
    affordance = AFFORDANCE_OBJECT
    map_done = False

    for line in iter_source_lines(source_text):
        if in_map:
            if line.key not in MAP_KEYS:
                raise unknown_key(line, MAP_KEYS)
            r = parse_line(_MAP_GRAMMARS[line.key], line)
            if line.key == "bounds":
                _once(seen, line)
                bounds = _rect(r, line)
            elif line.key == "room":
                if any(room.name == r["name"] for room in rooms):
                    raise GeometryError("line %d: room '%s' defined twice" % (line.number, r["name"]))
                rooms.append(Room(r["name"], _rect(r, line)))
            elif line.key == "obstacle":
                obstacles.append((_rect(r, line), line.number))
            else:
                in_map = False
                map_done = True
            continue
        if line.key not in TOP_KEYS:
            raise unknown_key(line, TOP_KEYS)
        r = parse_line(_TOP_GRAMMARS[line.key], line)
        if line.key == "map":
            _once(seen, line)
            in_map = True
            map_name = r.get("name", "map")
        elif line.key == "prior":
            priors.setdefault(r["cls"], []).append((r["room"], float(r["mass"]), line.number))
        elif line.key == "object":
            flags = tuple(r["flags"])
            pos = None if "random" in r else (float(r["x"]), float(r["y"]))
            objects.append((ObjectSpec(r["cls"], pos, flags), line.number))
        elif line.key == "robot":
            _once(seen, line)
            robot = (Pose(float(r["x"]), float(r["y"]), float(r["heading"])), r.get("holding"), line.number)
        elif line.key == "waypoint":
            waypoints.append(((float(r["x"]), float(r["y"])), line.number))
        else:
            _once(seen, line)
            affordance = r["mode"]

    end_line = last_line_number(source_text)
    if in_map:
        raise DefinitionSyntaxError("map block is missing 'end'", line=end_line, column=1)
    if not map_done:
        raise DefinitionSyntaxError("scenario has no map block", line=end_line, column=1)
    if bounds is None:
        raise DefinitionSyntaxError("map block has no bounds", line=seen.get("map", 1), column=1)
    if robot is None:
        raise DefinitionSyntaxError("scenario has no robot line", line=end_line, column=1)

    world_map = WorldMap(
        bounds=bounds,
        rooms=tuple(rooms),
        obstacles=tuple(r for r, _ in obstacles),
        priors=tuple((cls, tuple((room, mass) for room, mass, _ in entries)) for cls, entries in priors.items()),
        name=map_name,
    )
    scenario = Scenario(
        map=world_map,
        robot=robot[0],
        objects=tuple(spec for spec, _ in objects),
        holding=robot[1],
        waypoints=tuple(p for p, _ in waypoints),
        affordance=affordance,
    )
    _validate(scenario, obstacles, priors, objects, robot[2], waypoints)
    return scenario


def _validate(scenario, obstacles, priors, objects, robot_line, waypoints) -> None:
    m = scenario.map
    for room in m.rooms:
        if not room.rect.within(m.bounds):
            raise GeometryError("room '%s' lies outside the map bounds" % room.name)
    for rect, number in obstacles:
        if not rect.within(m.bounds):
            raise GeometryError("line %d: obstacle lies outside the map bounds" % number)
    names = set(m.room_names)
    for cls, entries in priors.items():
        total = 0.0
        for room, mass, number in entries:
            if room not in names:
                raise GeometryError("line %d: prior for '%s' names unknown room '%s'" % (number, cls, room))
            if not 0.0 <= mass <= 1.0:
                raise GeometryError("line %d: prior mass must be in [0, 1], got %g" % (number, mass))
            total += mass
        if total > 1.0 + 1e-9:
            raise GeometryError("prior masses of '%s' sum to %g > 1" % (cls, total))
        if len({room for room, _, _ in entries}) != len(entries):
            raise GeometryError("prior for '%s' lists a room twice" % cls)
    seen_cls: Dict[str, int] = {}
    for spec, number in objects:
        if spec.cls in seen_cls:
            raise GeometryError("line %d: object '%s' already placed on line %d" % (number, spec.cls, seen_cls[spec.cls]))
        seen_cls[spec.cls] = number
        if spec.position is not None:
            x, y = spec.position
            if not m.bounds.contains(x, y):
                raise GeometryError("line %d: object '%s' lies outside the map" % (number, spec.cls))
            if not m.is_free(x, y):
                raise GeometryError("line %d: object '%s' lies inside an obstacle" % (number, spec.cls))
    pose = scenario.robot
    if not m.bounds.contains(pose.x, pose.y) or not m.is_free(pose.x, pose.y):
        raise GeometryError("line %d: robot start is outside free space" % robot_line)
    for (x, y), number in waypoints:
        if not m.bounds.contains(x, y) or not m.is_free(x, y):
            raise GeometryError("line %d: waypoint is outside free space" % number)


def serialize_scenario(scenario: Scenario) -> str:
    """Canonical text; parse_scenario(serialize_scenario(s)) == s."""
    n = format_number
    m = scenario.map
    lines = ["map %s" % m.name]
    b = m.bounds
    lines.append("  bounds %s %s %s %s" % (n(b.x0), n(b.y0), n(b.x1), n(b.y1)))
    for room in m.rooms:
        r = room.rect
        lines.append("  room %s %s %s %s %s" % (room.name, n(r.x0), n(r.y0), n(r.x1), n(r.y1)))
    for r in m.obstacles:
        lines.append("  obstacle %s %s %s %s" % (n(r.x0), n(r.y0), n(r.x1), n(r.y1)))
    lines.append("end")
    for cls, masses in m.priors:
        for room, mass in masses:
            lines.append("prior %s %s %s" % (cls, room, n(mass)))
    for spec in scenario.objects:
        where = "random" if spec.position is None else "%s %s" % (n(spec.position[0]), n(spec.position[1]))
        lines.append(" ".join(["object", spec.cls, where] + list(spec.flags)))
    robot = "robot %s %s %s" % (n(scenario.robot.x), n(scenario.robot.y), n(scenario.robot.heading))
    if scenario.holding:
        robot += " holding %s" % scenario.holding
    lines.append(robot)
    for x, y in scenario.waypoints:
        lines.append("waypoint %s %s" % (n(x), n(y)))
    if scenario.affordance != AFFORDANCE_OBJECT:
        lines.append("affordance %s" % scenario.affordance)
    return "\n".join(lines) + "\n"
