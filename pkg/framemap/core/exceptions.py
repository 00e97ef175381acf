"""
Custom exception hierarchy for framemap.

Usage:
    from framemap.core.exceptions import DefinitionSyntaxError, PreconditionViolation

All exceptions inherit from FrameMapError so callers can catch the base class.
"""
from typing import Iterable, Sequence


class FrameMapError(Exception):
    """Base exception for all framemap errors."""
    pass


class ConfigurationError(FrameMapError):
    """Run configuration, config file or CLI arguments are invalid (exit code 2)."""
    pass


# ---------------------------------------------------------------------------
# Definition files (frame libraries, scenarios)
# ---------------------------------------------------------------------------

class DefinitionSyntaxError(FrameMapError):
    """Malformed frame-library or scenario text.

    Args:
        message: What was expected.
        line: 1-based line number.
        column: 1-based column number.

    Example::

        raise DefinitionSyntaxError("unknown key 'colour'", line=4, column=3)
    """

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class FrameValidationError(FrameMapError):
    """A parsed frame violates a library invariant (empty verbs, no Core element, ...)."""
    pass


class DanglingPrecondition(FrameValidationError):
    """A precondition id does not name a frame in the same library."""

    def __init__(self, frame_id: str, missing_id: str) -> None:
        self.frame_id = frame_id
        self.missing_id = missing_id
        super().__init__(f"frame '{frame_id}' requires unknown frame '{missing_id}'")


class PreconditionCycle(FrameValidationError):
    """The precondition graph has a cycle; ``cycle`` lists the frames on it in order."""

    def __init__(self, cycle: Sequence[str]) -> None:
        self.cycle = list(cycle)
        super().__init__("precondition cycle: " + " -> ".join(self.cycle + self.cycle[:1]))


class GeometryError(FrameMapError):
    """Scenario geometry is inconsistent (object inside an obstacle, room outside bounds, ...)."""
    pass


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

class NoFrameEvoked(FrameMapError):
    """No verb template of the library matches the utterance."""

    def __init__(self, utterance: str) -> None:
        self.utterance = utterance
        super().__init__(f"no frame is evoked by {utterance!r}")


class AmbiguousEvocation(FrameMapError):
    """Several frames match the utterance equally well."""

    def __init__(self, utterance: str, candidates: Iterable[str]) -> None:
        self.utterance = utterance
        self.candidates = sorted(candidates)
        super().__init__(f"{utterance!r} evokes several frames: {', '.join(self.candidates)}")


# ---------------------------------------------------------------------------
# World / execution
# ---------------------------------------------------------------------------

class Unreachable(FrameMapError):
    """Navigation target is outside the map, inside an obstacle, or has no free path."""
    pass


class PreconditionViolation(FrameMapError):
    """A primitive was requested while a precondition of its frame is unmet."""

    def __init__(self, frame_id: str, precondition: str) -> None:
        self.frame_id = frame_id
        self.precondition = precondition
        super().__init__(f"'{frame_id}' cannot run: precondition '{precondition}' is not met")


class OutOfReach(FrameMapError):
    """The primitive's target object is too far away (or not in sight for perception primitives)."""

    def __init__(self, target: str, distance: float, limit: float) -> None:
        self.target = target
        self.distance = distance
        self.limit = limit
        super().__init__(f"'{target}' is {distance:.2f} m away (limit {limit:.2f} m)")


class NoAffordance(FrameMapError):
    """The frame's current Core object is not present in the world."""
    pass


# ---------------------------------------------------------------------------
# Inference / planning
# ---------------------------------------------------------------------------

class EmptyFreeSpace(FrameMapError):
    """No free-space sample could be drawn (map fully covered by obstacles)."""
    pass


class DegenerateBelief(FrameMapError):
    """Every particle of a set received zero weight."""

    def __init__(self, owner: str) -> None:
        self.owner = owner
        super().__init__(f"all particle weights of '{owner}' vanished")


class NoReachableViewpoint(FrameMapError):
    """No reachable, collision-free pose can see the selected mixture component."""
    pass


class TraceSchemaError(FrameMapError):
    """Trace file has a missing or unsupported schema version."""
    pass


__all__ = [
    "FrameMapError",
    "ConfigurationError",
    "DefinitionSyntaxError",
    "FrameValidationError",
    "DanglingPrecondition",
    "PreconditionCycle",
    "GeometryError",
    "NoFrameEvoked",
    "AmbiguousEvocation",
    "Unreachable",
    "PreconditionViolation",
    "OutOfReach",
    "NoAffordance",
    "EmptyFreeSpace",
    "DegenerateBelief",
    "NoReachableViewpoint",
    "TraceSchemaError",
]
