"""
Precondition chaining and ordering-safety replay.
"""
from typing import List, Union

from framemap.frames.models import (
    FrameInstance,
    FrameLibrary,
    RobotState,
    SemanticFrame,
    frame_done,
)
from framemap.frames.relations import next_unmet_precondition


def plan_precondition_chain(
    task: Union[FrameInstance, SemanticFrame, str],
    state: RobotState,
    library: FrameLibrary,
) -> List[str]:
    """
    Depth-first linearisation of the unmet preconditions of task, ending with the
    task frame. Preconditions are checked against the state projected through the
    frames already placed in the chain.

    Example::

        plan_precondition_chain(FrameInstance("stir_cup"), RobotState(), lib)
        # ['grasp_spoon', 'stir_cup']
    """
    if isinstance(task, FrameInstance):
        library = library.bind(task)
        target = task.frame_id
    elif isinstance(task, SemanticFrame):
        target = task.id
    else:
        target = task
    chain: List[str] = []
    projected = state

    def expand(frame_id: str) -> None:
        nonlocal projected
        frame = library[frame_id]
        for pre_id in frame.preconditions:
            if frame_done(pre_id, library[pre_id].postconditions, projected):
                continue
            expand(pre_id)
        chain.append(frame_id)
        projected = projected.apply_effects(frame.postconditions).with_executed(frame_id)

    expand(target)
    return chain


def state_from_record(record: dict) -> RobotState:
    """RobotState (without pose) stored in a trace step record under ``state_before``."""
    raw = record["state_before"]
    return RobotState(
        gripper=raw.get("gripper"),
        executed=tuple(raw.get("executed", ())),
        flags=frozenset((obj, flag) for obj, flag in raw.get("flags", ())),
        placements=tuple(sorted((obj, target) for obj, target in raw.get("placements", ()))),
    )


def state_to_record(state: RobotState) -> dict:
    return {
        "gripper": state.gripper,
        "executed": list(state.executed),
        "flags": sorted([obj, flag] for obj, flag in state.flags),
        "placements": [list(p) for p in state.placements],
    }


def verify_ordering(records, library: FrameLibrary) -> List[str]:
    """
    Replay the manipulation records of a trace: every frame whose action ran must
    have had all preconditions satisfied in the state recorded before it. Returns
    one message per violation (empty when the trace is ordering-safe).
    """
    violations = []
    for record in records:
        if record.get("kind") != "step" or record.get("frame") is None or "state_before" not in record:
            continue
        frame_id = record["frame"]
        if frame_id not in library:
            violations.append("t=%s: unknown frame '%s'" % (record.get("t"), frame_id))
            continue
        unmet = next_unmet_precondition(library[frame_id], state_from_record(record))
        if unmet is not None:
            violations.append("t=%s: %s ran before %s held" % (record.get("t"), frame_id, unmet))
    return violations
