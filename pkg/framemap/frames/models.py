"""
Semantic frame data model: frames, elements, state effects, robot state, relation beliefs.
All types are immutable; a parsed library can be shared read-only across workers.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

from framemap.core.exceptions import FrameValidationError


class Role(str, Enum):
    """Object-frame relation roles."""

    CORE = "core"
    OTHER = "other"
    DISJOINT = "disjoint"


class ContextRole(str, Enum):
    """Frame-frame relation roles."""

    PRECONDITION = "precondition"
    DISJOINT = "disjoint"


class Permanence(str, Enum):
    STATIC = "static"
    MOVABLE = "movable"


class EffectKind(str, Enum):
    GRIPPER_SET = "gripper_set"
    GRIPPER_CLEAR = "gripper_clear"
    OBJECT_MOVED_TO = "object_moved_to"
    OBJECT_STATE_FLAG = "object_state_flag"


_EFFECT_ARITY = {
    EffectKind.GRIPPER_SET: 1,
    EffectKind.GRIPPER_CLEAR: 0,
    EffectKind.OBJECT_MOVED_TO: 2,
    EffectKind.OBJECT_STATE_FLAG: 2,
}


# ---------------------------------------------------------------------------
# Robot state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pose:
    """Planar robot pose (x, y in meters, heading in radians)."""

    x: float
    y: float
    heading: float = 0.0

    @property
    def xy(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, x: float, y: float) -> float:
        return math.hypot(self.x - x, self.y - y)

    def facing(self, x: float, y: float) -> "Pose":
        """Same position, heading toward (x, y)."""
        if math.isclose(x, self.x) and math.isclose(y, self.y):
            return self
        return Pose(self.x, self.y, math.atan2(y - self.y, x - self.x))


@dataclass(frozen=True)
class RobotState:
    """
    The known conditioning vector: pose, gripper contents, executed-frame history,
    plus the object facts the robot has brought about (flags, placements).
    """

    pose: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 0.0))
    gripper: Optional[str] = None
    executed: Tuple[str, ...] = ()
    flags: frozenset = frozenset()
    placements: Tuple[Tuple[str, str], ...] = ()

    def placement_of(self, object_class: str) -> Optional[str]:
        for obj, target in self.placements:
            if obj == object_class:
                return target
        return None

    def with_pose(self, pose: Pose) -> "RobotState":
        return replace(self, pose=pose)

    def apply_effects(self, effects: Iterable["StateEffect"]) -> "RobotState":
        state = self
        for effect in effects:
            state = effect.apply(state)
        return state

    def with_executed(self, frame_id: str) -> "RobotState":
        return replace(self, executed=self.executed + (frame_id,))


# ---------------------------------------------------------------------------
# Effects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateEffect:
    """One postcondition. Flag arguments starting with ``!`` clear the flag."""

    kind: EffectKind
    arguments: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        arity = _EFFECT_ARITY[self.kind]
        if len(self.arguments) != arity:
            raise FrameValidationError(
                "%s takes %d argument(s), got %d" % (self.kind.value, arity, len(self.arguments))
            )
        if self.kind is not EffectKind.OBJECT_STATE_FLAG and any(a.startswith("!") for a in self.arguments):
            raise FrameValidationError("negation is only allowed on state flags")

    @property
    def object_class(self) -> Optional[str]:
        return self.arguments[0] if self.arguments else None

    @property
    def flag(self) -> Tuple[str, bool]:
        """(flag name, value) for object_state_flag effects."""
        raw = self.arguments[1]
        return (raw[1:], False) if raw.startswith("!") else (raw, True)

    def holds(self, state: RobotState) -> bool:
        if self.kind is EffectKind.GRIPPER_SET:
            return state.gripper == self.arguments[0]
        if self.kind is EffectKind.GRIPPER_CLEAR:
            return state.gripper is None
        if self.kind is EffectKind.OBJECT_MOVED_TO:
            return state.placement_of(self.arguments[0]) == self.arguments[1]
        name, value = self.flag
        return ((self.arguments[0], name) in state.flags) == value

    def apply(self, state: RobotState) -> RobotState:
        if self.kind is EffectKind.GRIPPER_SET:
            obj = self.arguments[0]
            placements = tuple(p for p in state.placements if p[0] != obj)
            return replace(state, gripper=obj, placements=placements)
        if self.kind is EffectKind.GRIPPER_CLEAR:
            return replace(state, gripper=None)
        if self.kind is EffectKind.OBJECT_MOVED_TO:
            obj, target = self.arguments
            placements = tuple(p for p in state.placements if p[0] != obj) + ((obj, target),)
            gripper = None if state.gripper == obj else state.gripper
            return replace(state, gripper=gripper, placements=tuple(sorted(placements)))
        obj = self.arguments[0]
        name, value = self.flag
        flags = set(state.flags)
        if value:
            flags.add((obj, name))
        else:
            flags.discard((obj, name))
        return replace(state, flags=frozenset(flags))

    def substitute(self, bindings: Mapping[str, str]) -> "StateEffect":
        args = []
        for i, a in enumerate(self.arguments):
            if self.kind is EffectKind.OBJECT_STATE_FLAG and i == 1:
                args.append(a)
            else:
                args.append(bindings.get(a, a))
        return StateEffect(self.kind, tuple(args))

    def to_text(self) -> str:
        return " ".join((self.kind.value,) + self.arguments)


def effects_hold(effects: Iterable[StateEffect], state: RobotState) -> bool:
    return all(e.holds(state) for e in effects)


def frame_done(frame_id: str, postconditions: Tuple[StateEffect, ...], state: RobotState) -> bool:
    """
    Whether a frame counts as satisfied. A frame without postconditions leaves no
    trace in the state, so it is satisfied once it appears in the executed history.
    """
    if not postconditions:
        return frame_id in state.executed
    return effects_hold(postconditions, state)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameElement:
    """An object class a frame needs and its role at each precondition stage."""

    object_class: str
    role_schedule: Tuple[Tuple[int, Role], ...]
    accepts: Tuple[str, ...] = ()

    def role_at(self, stage: int) -> Role:
        """Role at ``stage``; undeclared stages carry the last declared role forward."""
        role = self.role_schedule[0][1]
        for s, r in self.role_schedule:
            if s > stage:
                break
            role = r
        return role


@dataclass(frozen=True)
class SemanticFrame:
    id: str
    verbs: Tuple[str, ...]
    elements: Tuple[FrameElement, ...]
    preconditions: Tuple[str, ...] = ()
    actions: Tuple[str, ...] = ()
    postconditions: Tuple[StateEffect, ...] = ()
    permanence: Permanence = Permanence.STATIC
    movable_sigma: Optional[float] = None
    repeatable: bool = False
    # Postconditions of each precondition, filled in when the library is linked.
    precondition_effects: Tuple[Tuple[StateEffect, ...], ...] = ()

    def element(self, object_class: str) -> Optional[FrameElement]:
        for el in self.elements:
            if el.object_class == object_class:
                return el
        return None

    @property
    def object_classes(self) -> Tuple[str, ...]:
        return tuple(el.object_class for el in self.elements)

    def stage(self, state: RobotState) -> int:
        """Number of contiguously satisfied preconditions, in declared order."""
        n = 0
        for pre_id, effects in zip(self.preconditions, self.precondition_effects):
            if not frame_done(pre_id, effects, state):
                break
            n += 1
        return n

    def is_satisfied(self, state: RobotState) -> bool:
        """True when every postcondition holds, or, for a frame with none, once it has run."""
        return frame_done(self.id, self.postconditions, state)

    def substitute(self, bindings: Mapping[str, str]) -> "SemanticFrame":
        if not bindings:
            return self
        elements = tuple(
            replace(el, object_class=bindings.get(el.object_class, el.object_class)) for el in self.elements
        )
        return replace(
            self,
            elements=elements,
            postconditions=tuple(e.substitute(bindings) for e in self.postconditions),
            precondition_effects=tuple(
                tuple(e.substitute(bindings) for e in effs) for effs in self.precondition_effects
            ),
        )


@dataclass(frozen=True)
class FrameInstance:
    """A frame evoked by a command, with element classes bound to concrete classes."""

    frame_id: str
    bindings: Tuple[Tuple[str, str], ...] = ()
    utterance: str = ""

    @property
    def binding_map(self) -> Dict[str, str]:
        return dict(self.bindings)


@dataclass(frozen=True)
class FrameLibrary:
    """Validated, ordered collection of frames (use parse_frame_library to build one)."""

    frames: Tuple[SemanticFrame, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {f.id: f for f in self.frames})

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[SemanticFrame]:
        return iter(self.frames)

    def __contains__(self, frame_id: object) -> bool:
        return frame_id in self._index

    def __getitem__(self, frame_id: str) -> SemanticFrame:
        try:
            return self._index[frame_id]
        except KeyError:
            raise KeyError("no frame '%s' in library" % frame_id) from None

    @property
    def frame_ids(self) -> Tuple[str, ...]:
        return tuple(f.id for f in self.frames)

    def bind(self, instance: FrameInstance) -> "FrameLibrary":
        """Library with the instance's class bindings substituted into every frame."""
        bindings = instance.binding_map
        if not bindings:
            return self
        return FrameLibrary(tuple(f.substitute(bindings) for f in self.frames))

    def resolve(self, instance: FrameInstance) -> SemanticFrame:
        """The concrete frame an instance refers to."""
        return self[instance.frame_id].substitute(instance.binding_map)


# ---------------------------------------------------------------------------
# Relation beliefs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationDistribution:
    """Belief over relation roles; weights sum to 1."""

    weights: Tuple[Tuple[Enum, float], ...]

    def __post_init__(self) -> None:
        total = 0.0
        for _, w in self.weights:
            if w < 0.0:
                raise ValueError("relation weights must be non-negative")
            total += w
        if abs(total - 1.0) > 1e-9:
            raise ValueError("relation weights must sum to 1, got %r" % total)

    @classmethod
    def point_mass(cls, role: Enum) -> "RelationDistribution":
        return cls(((role, 1.0),))

    @classmethod
    def from_mapping(cls, weights: Mapping[Enum, float]) -> "RelationDistribution":
        return cls(tuple(weights.items()))

    def mass(self, role: Enum) -> float:
        return sum(w for r, w in self.weights if r == role)

    def as_dict(self) -> Dict[str, float]:
        return {r.value: w for r, w in self.weights if w > 0.0}

    @property
    def mode(self) -> Enum:
        return max(self.weights, key=lambda rw: rw[1])[0]
