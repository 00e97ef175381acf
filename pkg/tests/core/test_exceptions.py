"""Unit tests for framemap.core.exceptions."""
import pytest

from framemap.core.exceptions import (
    AmbiguousEvocation,
    ConfigurationError,
    DanglingPrecondition,
    DefinitionSyntaxError,
    DegenerateBelief,
    EmptyFreeSpace,
    FrameMapError,
    FrameValidationError,
    GeometryError,
    NoAffordance,
    NoFrameEvoked,
    NoReachableViewpoint,
    OutOfReach,
    PreconditionCycle,
    PreconditionViolation,
    TraceSchemaError,
    Unreachable,
)


# ---------------------------------------------------------------------------
# Hierarchy
# ---------------------------------------------------------------------------

def test_all_errors_inherit_framemap_error():
    for cls in (
        AmbiguousEvocation, ConfigurationError, DanglingPrecondition, DefinitionSyntaxError,
        DegenerateBelief, EmptyFreeSpace, FrameValidationError, GeometryError, NoAffordance,
        NoFrameEvoked, NoReachableViewpoint, OutOfReach, PreconditionCycle, PreconditionViolation,
        TraceSchemaError, Unreachable,
    ):
        assert issubclass(cls, FrameMapError), f"{cls.__name__} must inherit FrameMapError"


def test_validation_errors_share_a_base():
    assert issubclass(DanglingPrecondition, FrameValidationError)
    assert issubclass(PreconditionCycle, FrameValidationError)


# ---------------------------------------------------------------------------
# Messages and attributes
# ---------------------------------------------------------------------------

def test_syntax_error_carries_position():
    exc = DefinitionSyntaxError("unknown key 'colour'", line=4, column=3)
    assert exc.line == 4 and exc.column == 3
    assert "line 4" in str(exc) and "column 3" in str(exc)


def test_cycle_message_closes_the_loop():
    exc = PreconditionCycle(["a", "b"])
    assert exc.cycle == ["a", "b"]
    assert "a -> b -> a" in str(exc)


def test_dangling_precondition_names_both_frames():
    exc = DanglingPrecondition("stir_cup", "grasp_fork")
    assert "stir_cup" in str(exc) and "grasp_fork" in str(exc)


def test_ambiguous_evocation_sorts_candidates():
    exc = AmbiguousEvocation("do it", ["b_frame", "a_frame"])
    assert exc.candidates == ["a_frame", "b_frame"]


def test_precondition_violation_attributes():
    exc = PreconditionViolation("stir_cup", "grasp_spoon")
    assert exc.frame_id == "stir_cup"
    assert exc.precondition == "grasp_spoon"


def test_out_of_reach_formats_distance():
    exc = OutOfReach("cup", 2.345, 0.8)
    assert exc.distance == pytest.approx(2.345)
    assert "2.35" in str(exc) and "0.80" in str(exc)


def test_degenerate_belief_names_owner():
    with pytest.raises(FrameMapError, match="stir_cup"):
        raise DegenerateBelief("stir_cup")
