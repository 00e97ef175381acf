"""Semantic frames: data model, definition language, commands, relation beliefs."""
from .commands import parse_command
from .dsl import parse_frame_library, serialize_frame_library
from .models import (
    ContextRole,
    EffectKind,
    FrameElement,
    FrameInstance,
    FrameLibrary,
    Permanence,
    Pose,
    RelationDistribution,
    RobotState,
    Role,
    SemanticFrame,
    StateEffect,
)
from .relations import (
    core_class,
    frame_relation_belief,
    next_unmet_precondition,
    relation_belief,
)

__all__ = [
    "ContextRole",
    "EffectKind",
    "FrameElement",
    "FrameInstance",
    "FrameLibrary",
    "Permanence",
    "Pose",
    "RelationDistribution",
    "RobotState",
    "Role",
    "SemanticFrame",
    "StateEffect",
    "core_class",
    "frame_relation_belief",
    "next_unmet_precondition",
    "parse_command",
    "parse_frame_library",
    "relation_belief",
    "serialize_frame_library",
]
