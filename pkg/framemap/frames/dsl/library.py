"""
Frame-definition language: parse and serialize frame libraries.

Grammar (one statement per line, ``#`` comments, whitespace-insensitive within a line)::

    frame <id>
      verbs: <verb> [<verb> ...]
      element <class> roles: <role>@<stage> [...] [accepts: <class> ...]
      preconditions: [<frame id> ...]
      actions: <primitive> [...]
      postconditions: [<effect> {, <effect>}]
      permanence: static | movable [<sigma>]
      repeatable: true | false
    end

    <role>   ::= core | other | disjoint
    <effect> ::= gripper_set <class> | gripper_clear
               | object_moved_to <class> <class> | object_state_flag <class> [!]<flag>

Every frame must end with ``end``. ``element`` may repeat; every other key appears
at most once per frame.
"""
import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import pyparsing as pp

from framemap.core.exceptions import (
    DanglingPrecondition,
    DefinitionSyntaxError,
    FrameValidationError,
    PreconditionCycle,
)
from framemap.core.logger import get_logger

from ..models import (
    EffectKind,
    FrameElement,
    FrameLibrary,
    Permanence,
    RobotState,
    Role,
    SemanticFrame,
    StateEffect,
)
from .grammar import (
    COLON,
    COMMA,
    FLAG,
    IDENT,
    INT,
    NUMBER,
    SourceLine,
    format_number,
    ident_list,
    iter_source_lines,
    kw,
    last_line_number,
    parse_line,
    unknown_key,
)

logger = get_logger("frames.dsl")

FRAME_KEYS = (
    "verbs",
    "element",
    "preconditions",
    "actions",
    "postconditions",
    "permanence",
    "repeatable",
    "end",
)

# ---------------------------------------------------------------------------
# Line grammars
# ---------------------------------------------------------------------------

VERB = pp.Regex(r"[^\W\d_][\w'-]*").set_name("verb")
ROLE = pp.MatchFirst([kw(r.value) for r in Role]).set_name("role")

FRAME_HEADER = kw("frame").suppress() + IDENT("id")
VERBS_LINE = kw("verbs").suppress() + COLON + pp.Group(pp.ZeroOrMore(VERB + pp.Optional(COMMA)))("verbs")
ROLE_ENTRY = pp.Group(ROLE + pp.Suppress("@") + INT)
ELEMENT_LINE = (
    kw("element").suppress()
    + IDENT("cls")
    + kw("roles").suppress()
    + COLON
    + pp.Group(pp.OneOrMore(ROLE_ENTRY))("roles")
    + pp.Optional(kw("accepts").suppress() + COLON + pp.Group(ident_list(1))("accepts"))
)
PRECONDITIONS_LINE = kw("preconditions").suppress() + COLON + pp.Group(ident_list())("ids")
ACTIONS_LINE = kw("actions").suppress() + COLON + pp.Group(ident_list())("ids")

EFFECT = pp.Group(
    kw(EffectKind.GRIPPER_SET.value) + IDENT
    | kw(EffectKind.GRIPPER_CLEAR.value)
    | kw(EffectKind.OBJECT_MOVED_TO.value) + IDENT + IDENT
    | kw(EffectKind.OBJECT_STATE_FLAG.value) + IDENT + FLAG
)
POSTCONDITIONS_LINE = (
    kw("postconditions").suppress() + COLON + pp.Group(pp.Optional(pp.DelimitedList(EFFECT, delim=",")))("effects")
)
PERMANENCE_LINE = kw("permanence").suppress() + COLON + (
    kw("static")("kind") | kw("movable")("kind") + pp.Optional(NUMBER("sigma"))
)
REPEATABLE_LINE = kw("repeatable").suppress() + COLON + (kw("true") | kw("false"))("value")
END_LINE = kw("end")

_LINE_GRAMMARS = {
    "verbs": VERBS_LINE,
    "element": ELEMENT_LINE,
    "preconditions": PRECONDITIONS_LINE,
    "actions": ACTIONS_LINE,
    "postconditions": POSTCONDITIONS_LINE,
    "permanence": PERMANENCE_LINE,
    "repeatable": REPEATABLE_LINE,
    "end": END_LINE,
}


# ---------------------------------------------------------------------------
# Block builder
# ---------------------------------------------------------------------------

class _FrameBuilder:
    """Collects the statements of one ``frame ... end`` block."""

    def __init__(self, frame_id: str, line: SourceLine) -> None:
        self.id = frame_id
        self.line = line
        self.seen: Dict[str, int] = {}
        self.verbs: List[str] = []
        self.elements: List[FrameElement] = []
        self.preconditions: List[str] = []
        self.actions: List[str] = []
        self.postconditions: List[StateEffect] = []
        self.permanence = Permanence.STATIC
        self.movable_sigma: Optional[float] = None
        self.repeatable = False

    def add(self, line: SourceLine) -> None:
        if line.key != "element":
            if line.key in self.seen:
                raise DefinitionSyntaxError(
                    "duplicate key '%s' in frame '%s' (first on line %d)"
                    % (line.key, self.id, self.seen[line.key]),
                    line=line.number,
                    column=line.key_column,
                )
            self.seen[line.key] = line.number
        result = parse_line(_LINE_GRAMMARS[line.key], line)
        getattr(self, "_add_" + line.key)(result, line)

    def _add_verbs(self, r: pp.ParseResults, line: SourceLine) -> None:
        self.verbs = list(r.get("verbs", []))

    def _add_element(self, r: pp.ParseResults, line: SourceLine) -> None:
        cls = r["cls"]
        if any(el.object_class == cls for el in self.elements):
            raise FrameValidationError("frame '%s' declares element '%s' twice (line %d)" % (self.id, cls, line.number))
        schedule: Dict[int, Role] = {}
        for role, stage in r["roles"]:
            if stage in schedule:
                raise FrameValidationError(
                    "element '%s' of frame '%s' declares stage %d twice" % (cls, self.id, stage)
                )
            schedule[stage] = Role(role)
        accepts = tuple(r["accepts"]) if "accepts" in r else ()
        self.elements.append(FrameElement(cls, tuple(sorted(schedule.items())), accepts))

    def _add_preconditions(self, r: pp.ParseResults, line: SourceLine) -> None:
        self.preconditions = list(r.get("ids", []))

    def _add_actions(self, r: pp.ParseResults, line: SourceLine) -> None:
        self.actions = list(r.get("ids", []))

    def _add_postconditions(self, r: pp.ParseResults, line: SourceLine) -> None:
        effects = []
        for tokens in r.get("effects", []):
            effects.append(StateEffect(EffectKind(tokens[0]), tuple(tokens[1:])))
        self.postconditions = effects

    def _add_permanence(self, r: pp.ParseResults, line: SourceLine) -> None:
        self.permanence = Permanence(r["kind"])
        if "sigma" in r:
            self.movable_sigma = float(r["sigma"])

    def _add_repeatable(self, r: pp.ParseResults, line: SourceLine) -> None:
        self.repeatable = r["value"] == "true"

    def _add_end(self, r: pp.ParseResults, line: SourceLine) -> None:
        pass

    def build(self) -> SemanticFrame:
        return SemanticFrame(
            id=self.id,
            verbs=tuple(self.verbs),
            elements=tuple(self.elements),
            preconditions=tuple(self.preconditions),
            actions=tuple(self.actions),
            postconditions=tuple(self.postconditions),
            permanence=self.permanence,
            movable_sigma=self.movable_sigma,
            repeatable=self.repeatable,
        )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _validate_frame(frame: SemanticFrame) -> None:
    if not frame.verbs:
        raise FrameValidationError("frame '%s' has no verbs" % frame.id)
    if not frame.actions:
        raise FrameValidationError("frame '%s' has no actions" % frame.id)
    if not frame.elements:
        raise FrameValidationError("frame '%s' has no elements" % frame.id)
    if len(set(frame.preconditions)) != len(frame.preconditions):
        raise FrameValidationError("frame '%s' lists a precondition twice" % frame.id)
    last_stage = len(frame.preconditions)
    for el in frame.elements:
        stages = [s for s, _ in el.role_schedule]
        if stages[0] != 0:
            raise FrameValidationError(
                "element '%s' of frame '%s' must declare its role at stage 0" % (el.object_class, frame.id)
            )
        if stages[-1] > last_stage:
            raise FrameValidationError(
                "element '%s' of frame '%s' declares stage %d but the frame has %d precondition(s)"
                % (el.object_class, frame.id, stages[-1], last_stage)
            )
    if not any(el.role_at(0) is Role.CORE for el in frame.elements):
        raise FrameValidationError("frame '%s' has no core element at stage 0" % frame.id)
    if frame.movable_sigma is not None:
        if frame.permanence is not Permanence.MOVABLE:
            raise FrameValidationError("frame '%s': sigma given for a static frame" % frame.id)
        if not math.isfinite(frame.movable_sigma) or frame.movable_sigma < 0.0:
            raise FrameValidationError("frame '%s': movable sigma must be >= 0" % frame.id)


def _find_cycle(frames: Sequence[SemanticFrame]) -> Optional[List[str]]:
    """First cycle found by depth-first search in declaration order, or None."""
    graph = {f.id: f.preconditions for f in frames}
    color: Dict[str, int] = {}
    path: List[str] = []

    def visit(node: str) -> Optional[List[str]]:
        color[node] = 1
        path.append(node)
        for nxt in graph[node]:
            if color.get(nxt) == 1:
                return path[path.index(nxt):]
            if nxt not in color:
                found = visit(nxt)
                if found:
                    return found
        path.pop()
        color[node] = 2
        return None

    for f in frames:
        if f.id not in color:
            found = visit(f.id)
            if found:
                return found
    return None


def _check_conflicts(frame: SemanticFrame, index: Dict[str, SemanticFrame]) -> None:
    """A later precondition must not undo an earlier precondition's postconditions."""
    for i, earlier in enumerate(frame.preconditions):
        earlier_effects = index[earlier].postconditions
        base = RobotState().apply_effects(earlier_effects)
        for later in frame.preconditions[i + 1:]:
            after = base.apply_effects(index[later].postconditions)
            for effect in earlier_effects:
                if not effect.holds(after):
                    raise FrameValidationError(
                        "frame '%s': precondition '%s' undoes '%s' of earlier precondition '%s'"
                        % (frame.id, later, effect.to_text(), earlier)
                    )


def link_library(frames: Sequence[SemanticFrame]) -> FrameLibrary:
    """Validate frames as a library and attach each frame's precondition effects."""
    index: Dict[str, SemanticFrame] = {}
    for f in frames:
        if f.id in index:
            raise FrameValidationError("frame '%s' is defined twice" % f.id)
        _validate_frame(f)
        index[f.id] = f
    for f in frames:
        for pre in f.preconditions:
            if pre not in index:
                raise DanglingPrecondition(f.id, pre)
    cycle = _find_cycle(frames)
    if cycle:
        raise PreconditionCycle(cycle)
    for f in frames:
        _check_conflicts(f, index)
    linked = []
    for f in frames:
        effects = tuple(index[p].postconditions for p in f.preconditions)
        linked.append(replace(f, precondition_effects=effects))
    return FrameLibrary(tuple(linked))


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def parse_frame_library(source_text: str) -> FrameLibrary:
    """
    Parse and validate a frame library.

    Raises:
        DefinitionSyntaxError: Malformed statement (with line and column).
        DanglingPrecondition: A precondition names an undefined frame.
        PreconditionCycle: Preconditions form a cycle.
        FrameValidationError: Any other library invariant is violated.
    """
    frames: List[SemanticFrame] = []
    current: Optional[_FrameBuilder] = None
    for line in iter_source_lines(source_text):
        if current is None:
            if line.key != "frame":
                if line.key in FRAME_KEYS:
                    raise DefinitionSyntaxError(
                        "'%s' outside of a frame block" % line.key, line=line.number, column=line.key_column
                    )
                raise unknown_key(line, ("frame",))
            header = parse_line(FRAME_HEADER, line)
            current = _FrameBuilder(header["id"], line)
            continue
        if line.key == "frame":
            raise DefinitionSyntaxError(
                "frame '%s' is missing 'end'" % current.id, line=line.number, column=line.key_column
            )
        if line.key not in FRAME_KEYS:
            raise unknown_key(line, FRAME_KEYS)
        current.add(line)
        if line.key == "end":
            frames.append(current.build())
            current = None
    if current is not None:
        raise DefinitionSyntaxError(
            "frame '%s' is missing 'end'" % current.id, line=last_line_number(source_text), column=1
        )
    library = link_library(frames)
    logger.debug("Parsed frame library with %d frame(s)", len(library))
    return library


def _serialize_frame(frame: SemanticFrame) -> List[str]:
    lines = ["frame %s" % frame.id, "  verbs: %s" % " ".join(frame.verbs)]
    for el in frame.elements:
        roles = " ".join("%s@%d" % (role.value, stage) for stage, role in el.role_schedule)
        text = "  element %s roles: %s" % (el.object_class, roles)
        if el.accepts:
            text += " accepts: %s" % " ".join(el.accepts)
        lines.append(text)
    if frame.preconditions:
        lines.append("  preconditions: %s" % " ".join(frame.preconditions))
    lines.append("  actions: %s" % " ".join(frame.actions))
    if frame.postconditions:
        lines.append("  postconditions: %s" % ", ".join(e.to_text() for e in frame.postconditions))
    if frame.permanence is Permanence.MOVABLE and frame.movable_sigma is not None:
        lines.append("  permanence: movable %s" % format_number(frame.movable_sigma))
    else:
        lines.append("  permanence: %s" % frame.permanence.value)
    if frame.repeatable:
        lines.append("  repeatable: true")
    lines.append("end")
    return lines


def serialize_frame_library(library: FrameLibrary) -> str:
    """Canonical text of a library; parse_frame_library(serialize(lib)) == lib."""
    blocks = ["\n".join(_serialize_frame(f)) for f in library]
    return "\n\n".join(blocks) + "\n" if blocks else ""


