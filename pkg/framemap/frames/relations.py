"""
State-conditioned relation beliefs.

Beliefs are explicit: they follow from the frame definition and the precondition
progress in the robot state, and are always point masses.
"""
from typing import List, Optional, Tuple

from .models import ContextRole, FrameLibrary, RelationDistribution, RobotState, Role, SemanticFrame


def relation_belief(frame: SemanticFrame, object_class: str, state: RobotState) -> RelationDistribution:
    """Belief over {core, other, disjoint} for an object class given state."""
    element = frame.element(object_class)
    if element is None:
        return RelationDistribution.point_mass(Role.DISJOINT)
    return RelationDistribution.point_mass(element.role_at(frame.stage(state)))


def next_unmet_precondition(frame: SemanticFrame, state: RobotState) -> Optional[str]:
    """First precondition, in declared order, that is not yet satisfied in state."""
    stage = frame.stage(state)
    if stage >= len(frame.preconditions):
        return None
    return frame.preconditions[stage]


def frame_relation_belief(frame: SemanticFrame, other: SemanticFrame, state: RobotState) -> RelationDistribution:
    """Precondition iff other is the next unmet precondition of frame; else disjoint."""
    if other.id != frame.id and next_unmet_precondition(frame, state) == other.id:
        return RelationDistribution.point_mass(ContextRole.PRECONDITION)
    return RelationDistribution.point_mass(ContextRole.DISJOINT)


def core_class(frame: SemanticFrame, state: RobotState) -> Optional[str]:
    """The element holding the core role at the current stage (first in declaration order)."""
    stage = frame.stage(state)
    for el in frame.elements:
        if el.role_at(stage) is Role.CORE:
            return el.object_class
    return None


def object_neighbors(frame: SemanticFrame, state: RobotState) -> List[Tuple[str, RelationDistribution]]:
    """Element classes whose belief puts mass on a non-disjoint role, with that belief."""
    out = []
    for el in frame.elements:
        rel = relation_belief(frame, el.object_class, state)
        if rel.mass(Role.DISJOINT) < 1.0:
            out.append((el.object_class, rel))
    return out


def frame_neighbors(
    frame: SemanticFrame, state: RobotState, library: FrameLibrary
) -> List[Tuple[str, RelationDistribution]]:
    """Frames of the library related to frame by a non-disjoint context belief."""
    out = []
    for other in library:
        rel = frame_relation_belief(frame, other, state)
        if rel.mass(ContextRole.DISJOINT) < 1.0:
            out.append((other.id, rel))
    return out
