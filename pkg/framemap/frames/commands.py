"""
Command parsing: match an utterance against the verb templates of a frame library.

A frame is a candidate when one of its verbs occurs in the utterance. Candidates are
ranked by (element classes mentioned, verbs matched, fewest unmentioned elements);
element classes may also be mentioned through an accepted substitute class, which
then becomes a binding of the returned instance.
"""
import re
import unicodedata
from typing import Dict, List, Set, Tuple

from framemap.core.exceptions import AmbiguousEvocation, NoFrameEvoked
from framemap.core.logger import get_logger

from .models import FrameInstance, FrameLibrary, SemanticFrame

logger = get_logger("frames.commands")

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)?")


def tokenize(utterance: str) -> List[str]:
    """Lowercase word tokens; punctuation is dropped."""
    text = unicodedata.normalize("NFC", utterance).lower()
    return _TOKEN_RE.findall(text)


def _word_forms(tokens: List[str]) -> Set[str]:
    forms = set(tokens)
    for t in tokens:
        if len(t) > 3 and t.endswith("es"):
            forms.add(t[:-2])
        if len(t) > 2 and t.endswith("s"):
            forms.add(t[:-1])
    return forms


def _mentions(name: str, forms: Set[str]) -> bool:
    return all(part in forms for part in name.split("_"))


def _score(frame: SemanticFrame, forms: Set[str]) -> Tuple[Tuple[int, int, int], Dict[str, str]]:
    verbs = sum(1 for v in frame.verbs if v.lower() in forms)
    mentioned = 0
    bindings: Dict[str, str] = {}
    for el in frame.elements:
        if _mentions(el.object_class, forms):
            mentioned += 1
            continue
        for alt in el.accepts:
            if _mentions(alt, forms):
                bindings[el.object_class] = alt
                mentioned += 1
                break
    unmentioned = len(frame.elements) - mentioned
    return (mentioned, verbs, -unmentioned), bindings


def parse_command(utterance: str, library: FrameLibrary) -> FrameInstance:
    """
    Map an utterance to a frame instance.

    Raises:
        NoFrameEvoked: No frame verb occurs in the utterance.
        AmbiguousEvocation: Several frames tie for the best score.

    Example::

        parse_command("Bring Roger a coffee", lib).frame_id  # 'bring_coffee'
    """
    forms = _word_forms(tokenize(utterance))
    scored = []
    for frame in library:
        score, bindings = _score(frame, forms)
        if score[1] > 0:
            scored.append((score, frame.id, bindings))
    if not scored:
        raise NoFrameEvoked(utterance)
    best = max(s for s, _, _ in scored)
    top = [(fid, b) for s, fid, b in scored if s == best]
    if len(top) > 1:
        raise AmbiguousEvocation(utterance, [fid for fid, _ in top])
    frame_id, bindings = top[0]
    logger.debug("%r evokes %s %s", utterance, frame_id, bindings or "")
    return FrameInstance(frame_id=frame_id, bindings=tuple(sorted(bindings.items())), utterance=utterance)
