"""
Shared pyparsing tokens and line handling for the definition languages
(frame libraries and scenarios).

Both languages are line oriented: each non-blank line is one statement whose first
word is its key. Lines are parsed one at a time with a per-key pyparsing
expression, so error positions map directly to (line, column) in the source.
"""
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterator, Tuple

import pyparsing as pp

from framemap.core.exceptions import DefinitionSyntaxError

IDENT_PATTERN = r"[a-z_][a-z0-9_]*"
_KEY_RE = re.compile(r"\s*([^\s:]+)")


def kw(word: str) -> pp.Keyword:
    """Keyword that does not match inside a longer identifier."""
    return pp.Keyword(word, ident_chars=pp.alphanums + "_")


IDENT = pp.Regex(IDENT_PATTERN).set_name("identifier")
FLAG = pp.Regex("!?" + IDENT_PATTERN).set_name("flag")
COLON = pp.Suppress(":")
COMMA = pp.Suppress(",")
INT = pp.Regex(r"\d+").set_name("integer").set_parse_action(lambda t: int(t[0]))
NUMBER = (
    pp.Regex(r"[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?")
    .set_name("number")
    .set_parse_action(lambda t: float(t[0]))
)


def ident_list(min_count: int = 0) -> pp.ParserElement:
    """Identifiers separated by whitespace and/or commas."""
    item = IDENT + pp.Optional(COMMA)
    return pp.OneOrMore(item) if min_count else pp.ZeroOrMore(item)


@dataclass(frozen=True)
class SourceLine:
    """One statement: 1-based line number, text with the comment removed, leading key."""

    number: int
    text: str
    key: str
    key_column: int


def normalize_source(text: str) -> str:
    """NFC-normalize and unify line endings."""
    return unicodedata.normalize("NFC", text).replace("\r\n", "\n").replace("\r", "\n")


def iter_source_lines(text: str) -> Iterator[SourceLine]:
    """Yield non-blank statements; ``#`` starts a comment that runs to end of line."""
    for number, raw in enumerate(normalize_source(text).split("\n"), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _KEY_RE.match(line)
        yield SourceLine(number=number, text=line, key=m.group(1), key_column=m.start(1) + 1)


def last_line_number(text: str) -> int:
    return normalize_source(text).count("\n") + 1


def parse_line(expr: pp.ParserElement, line: SourceLine) -> pp.ParseResults:
    """Parse the whole line with expr; ParseException becomes DefinitionSyntaxError."""
    try:
        return expr.parse_string(line.text, parse_all=True)
    except pp.ParseException as e:
        found = line.text[e.loc:].split()
        detail = "unexpected %r" % found[0] if found else "unexpected end of line"
        raise DefinitionSyntaxError(
            "%s after '%s' (%s)" % (detail, line.key, e.msg), line=line.number, column=e.col
        ) from None


def unknown_key(line: SourceLine, allowed: Tuple[str, ...]) -> DefinitionSyntaxError:
    return DefinitionSyntaxError(
        "unknown key '%s' (expected one of: %s)" % (line.key, ", ".join(allowed)),
        line=line.number,
        column=line.key_column,
    )


def format_number(value: float) -> str:
    """Shortest text that parses back to the same float."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text
