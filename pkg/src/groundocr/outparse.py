"""Turn raw model output into canonical spans, boxes or plain text.

The pipeline for structured outputs is::

    extract_candidate -> repair -> normalize_records

``repair`` is a small deterministic scanner rather than a general-purpose
JSON fixer: it rewrites the candidate into strict JSON by applying a fixed
set of rules (quote normalization, quoting bare keys, dropping trailing or
duplicate commas and comments, closing strings at line end, closing open
containers at end of input) and then parses the result strictly.
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Sequence

from .geometry import Box, GroundedSpan, ImageDims, InvalidGeometry, clip_box

OUTPUT_FORMATS = ("text", "text2d", "lines", "paragraphs", "box")
COORD_MODES = ("pixel", "normalized:1000")


class ParseKind(str, enum.Enum):
    PLAIN_TEXT = "PlainText"
    SPANS = "Spans"
    BOXES = "Boxes"
    INVALID = "Invalid"


@dataclass(frozen=True)
class ParsedOutput:
    kind: ParseKind
    text: str | None = None
    spans: tuple | None = None
    boxes: tuple | None = None
    diagnostics: tuple = field(default=())

    def __post_init__(self):
        payloads = {
            ParseKind.PLAIN_TEXT: self.text,
            ParseKind.SPANS: self.spans,
            ParseKind.BOXES: self.boxes,
        }
        filled = [k for k, v in payloads.items() if v is not None]
        expected = [] if self.kind is ParseKind.INVALID else [self.kind]
        if filled != expected:
            raise ValueError(f"{self.kind.value} output cannot carry payloads {filled}")
        if self.kind is ParseKind.INVALID and not self.diagnostics:
            raise ValueError("invalid output needs at least one diagnostic")

    @property
    def is_invalid(self) -> bool:
        return self.kind is ParseKind.INVALID

    @classmethod
    def invalid(cls, *diagnostics: str) -> "ParsedOutput":
        return cls(ParseKind.INVALID, diagnostics=tuple(diagnostics))


class RepairError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def dumps_spans(spans: Sequence[GroundedSpan]) -> str:
    return json.dumps([s.to_dict() for s in spans], ensure_ascii=False)


def dumps_boxes(boxes: Sequence[Box]) -> str:
    return json.dumps([b.as_list() for b in boxes])


# --- candidate extraction ---------------------------------------------------

_FENCE = re.compile(r"```(?:[\w+.-]*[ \t]*\n)?(.*?)(?:\n?[ \t]*```|\Z)", re.DOTALL)

_CLOSER = {"]": "[", "}": "{"}


def strip_fences(raw: str) -> str:
    """Content of the first ``` fenced block, or ``raw`` if there is none.

    A language tag is only recognized when it sits alone on the opening line.
    An unclosed fence runs to the end of the string.
    """
    m = _FENCE.search(raw)
    if m is None:
        return raw
    return m.group(1)


def _bracket_spans(s: str) -> list:
    """(start, end) of top-level bracketed regions; the last may be unclosed."""
    found = []
    stack: list = []
    start = 0
    in_str = False
    i = 0
    while i < len(s):
        ch = s[i]
        if not stack:
            if ch in "[{":
                stack.append(ch)
                start = i
        elif in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch in "[{":
            stack.append(ch)
        elif ch in _CLOSER:
            want = _CLOSER[ch]
            # a mismatched closer closes through to its opener, if there is one
            if want in stack:
                while stack.pop() != want:
                    pass
                if not stack:
                    found.append((start, i + 1))
        i += 1
    if stack:
        found.append((start, len(s)))
    return found


def extract_candidate(raw: str) -> str:
    """Strip code fences and return the longest bracketed region.

    >>> extract_candidate("Sure! Here are the boxes: [[1,2,3,4]]")
    '[[1,2,3,4]]'
    """
    s = strip_fences(raw)
    spans = _bracket_spans(s)
    if not spans:
        return s
    start, end = max(spans, key=lambda se: (se[1] - se[0], -se[0]))
    return s[start:end]


# --- repair -------------------------------------------------------------------

def _reject_constant(name):
    raise ValueError(f"non-standard constant {name}")


def strict_loads(text: str) -> Any:
    """``json.loads`` that also rejects NaN and Infinity."""
    return json.loads(text, parse_constant=_reject_constant)


_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_BAREWORD = re.compile(r"[^\s:,\[\]{}\"'/#]+")
_LITERALS = {
    "true": "true", "True": "true", "TRUE": "true",
    "false": "false", "False": "false", "FALSE": "false",
    "null": "null", "None": "null", "NULL": "null", "undefined": "null",
    "NaN": "null", "Infinity": "null", "-Infinity": "null",
}
_ESCAPES = {'"': '"', "'": "'", "\\": "\\", "/": "/", "b": "\b", "f": "\f", "n": "\n",
            "r": "\r", "t": "\t"}


class _Repairer:
    def __init__(self, s: str):
        self.s = s
        self.i = 0
        self.out: list = []
        self.notes: list = []
        self.stack: list = []

    def note(self, msg: str):
        self.notes.append(f"{msg} at position {self.i}")

    def eof(self) -> bool:
        return self.i >= len(self.s)

    def skip(self):
        s = self.s
        while self.i < len(s):
            ch = s[self.i]
            if ch.isspace():
                self.i += 1
            elif s.startswith("//", self.i) or ch == "#":
                self.note("removed line comment")
                end = s.find("\n", self.i)
                self.i = len(s) if end < 0 else end + 1
            elif s.startswith("/*", self.i):
                self.note("removed block comment")
                end = s.find("*/", self.i + 2)
                self.i = len(s) if end < 0 else end + 2
            else:
                break

    def run(self) -> str:
        self.skip()
        if self.eof():
            raise RepairError("empty input", self.i)
        if self.s[self.i] not in "[{":
            raise RepairError(f"expected '[' or '{{', found {self.s[self.i]!r}", self.i)
        self.value()
        self.skip()
        if not self.eof():
            self.note("ignored trailing text")
        return "".join(self.out)

    def value(self):
        ch = self.s[self.i]
        if ch == "{":
            self.container("{", "}")
        elif ch == "[":
            self.container("[", "]")
        elif ch in "\"'":
            self.string()
        elif ch in "+-.0123456789" and _NUMBER.match(self.s, self.i):
            self.number()
        else:
            m = _BAREWORD.match(self.s, self.i)
            if m is None:
                raise RepairError(f"unexpected {ch!r}", self.i)
            word = m.group()
            self.i = m.end()
            if word in _LITERALS:
                if word != _LITERALS[word]:
                    self.note(f"replaced {word} with {_LITERALS[word]}")
                self.out.append(_LITERALS[word])
            else:
                self.note("quoted bare value")
                self.out.append(json.dumps(word, ensure_ascii=False))

    def number(self):
        m = _NUMBER.match(self.s, self.i)
        text = m.group()
        self.i = m.end()
        if re.fullmatch(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?", text):
            num = text
        else:
            self.note(f"rewrote number {text!r}")
            num = str(int(text)) if re.fullmatch(r"[+-]?\d+", text) else repr(float(text))
        if num.lstrip("-") in ("inf", "nan") or not math.isfinite(float(num)):
            self.note("replaced non-finite number with null")
            num = "null"
        self.out.append(num)

    def string(self):
        s = self.s
        quote = s[self.i]
        if quote == "'":
            self.note("converted single-quoted string")
        self.i += 1
        buf = []
        while self.i < len(s):
            ch = s[self.i]
            if ch == "\\" and self.i + 1 < len(s):
                nxt = s[self.i + 1]
                hexpart = s[self.i + 2:self.i + 6]
                if nxt in _ESCAPES:
                    buf.append(_ESCAPES[nxt])
                    self.i += 2
                elif nxt == "u" and re.fullmatch(r"[0-9a-fA-F]{4}", hexpart):
                    buf.append(chr(int(hexpart, 16)))
                    self.i += 6
                else:
                    buf.append("\\" + nxt)
                    self.i += 2
                continue
            if ch == quote:
                self.i += 1
                break
            if ch == "\n":
                self.note("closed string at line end")
                break
            buf.append(ch)
            self.i += 1
        else:
            self.note("closed unterminated string")
        self.out.append(json.dumps("".join(buf), ensure_ascii=False))

    def _closes_parent(self, ch: str) -> bool:
        return _CLOSER[ch] in self.stack[:-1]

    def container(self, opener: str, closer: str):
        self.out.append(opener)
        self.stack.append(opener)
        self.i += 1
        count = 0
        comma = False
        while True:
            self.skip()
            if self.eof():
                self.note(f"closed unbalanced {opener!r}")
                break
            ch = self.s[self.i]
            if ch == closer:
                self.i += 1
                if comma and count:
                    self.note("removed trailing comma")
                break
            if ch in _CLOSER:
                if self._closes_parent(ch):
                    self.note(f"closed {opener!r} before {ch!r}")
                    break
                self.note(f"dropped stray {ch!r}")
                self.i += 1
                continue
            if ch == ",":
                if comma or not count:
                    self.note("dropped extra comma")
                comma = True
                self.i += 1
                continue
            if count:
                if not comma:
                    self.note("inserted missing comma")
                self.out.append(",")
            comma = False
            if opener == "{":
                self.member()
            else:
                if ch == ":":
                    raise RepairError("unexpected ':' in array", self.i)
                self.value()
            count += 1
        self.stack.pop()
        self.out.append(closer)

    def member(self):
        ch = self.s[self.i]
        if ch in "\"'":
            self.string()
        else:
            m = _BAREWORD.match(self.s, self.i)
            if m is None:
                raise RepairError(f"expected object key, found {ch!r}", self.i)
            self.note("quoted bare key")
            self.out.append(json.dumps(m.group(), ensure_ascii=False))
            self.i = m.end()
        self.skip()
        if not self.eof() and self.s[self.i] == ":":
            self.i += 1
        else:
            self.note("inserted missing colon")
        self.out.append(":")
        self.skip()
        if self.eof() or self.s[self.i] in ",}]":
            self.note("filled missing value with null")
            self.out.append("null")
        else:
            self.value()


def repair_text(candidate: str) -> tuple:
    """Rewrite ``candidate`` as strict JSON text.

    Returns ``(text, notes)``. Input that already parses strictly is returned
    unchanged. Raises :class:`RepairError` when no rule applies.
    """
    try:
        strict_loads(candidate)
        return candidate, []
    except ValueError:
        pass
    r = _Repairer(candidate)
    try:
        text = r.run()
    except RecursionError:
        raise RepairError("nesting too deep", r.i) from None
    try:
        strict_loads(text)
    except ValueError as exc:
        raise RepairError(f"repaired text still invalid ({exc})", r.i) from None
    return text, r.notes


def repair(candidate: str) -> Any:
    """Parse ``candidate`` as JSON after deterministic repair.

    >>> repair("[[1,2,3,4],]")
    [[1, 2, 3, 4]]
    """
    text, _ = repair_text(candidate)
    return strict_loads(text)


# --- key and shape normalization ------------------------------------------------

def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce_box(v, notes: list):
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        return None
    vals = []
    for x in v:
        if _is_number(x):
            vals.append(float(x))
        elif isinstance(x, str):
            try:
                vals.append(float(x.strip()))
            except ValueError:
                return None
            notes.append(f"coerced numeric string {x!r}")
        else:
            return None
    if not all(math.isfinite(x) for x in vals):
        return None
    return vals


def _pick_key(keys: list, item: dict, wants_box: bool):
    def usable(k):
        v = item[k]
        if wants_box:
            return isinstance(v, (list, tuple))
        return v is None or isinstance(v, str) or _is_number(v)

    lowered = [(k, k.lower()) for k in keys if usable(k)]
    if wants_box:
        tiers = [lambda n: n == "bbox", lambda n: "box" in n]
    else:
        tiers = [lambda n: n == "text", lambda n: "text" in n, lambda n: "label" in n]
    for tier in tiers:
        for k, name in lowered:
            if tier(name):
                return k
    return None


def _scale(vals: list, dims: ImageDims, coords: str) -> list:
    if coords == "normalized:1000":
        sx, sy = dims.width / 1000, dims.height / 1000
        return [vals[0] * sx, vals[1] * sy, vals[2] * sx, vals[3] * sy]
    return vals


def _as_box(raw, dims, coords, notes, where) -> Box | None:
    vals = _coerce_box(raw, notes)
    if vals is None:
        notes.append(f"dropped {where}: not a 4-number box")
        return None
    try:
        box = clip_box(_scale(vals, dims, coords), dims)
    except InvalidGeometry as exc:
        notes.append(f"dropped {where}: {exc}")
        return None
    if box is None:
        notes.append(f"dropped {where}: degenerate after clipping")
    return box


def _text_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return json.dumps(v)


def normalize_records(value: Any, dims: ImageDims, prefer: str | None = None,
                      coords: str = "pixel") -> ParsedOutput:
    """Map a repaired JSON value onto spans or boxes.

    Keys containing ``text`` or ``label`` (any case) become the text field and
    keys containing ``box`` become the box; an exact ``text``/``bbox`` key
    wins over a substring match. Bare 4-number lists are boxes. Boxes are
    clipped to the image and degenerate ones dropped. ``prefer`` ("spans" or
    "boxes") decides the kind of an empty list and of mixed lists.
    """
    if coords not in COORD_MODES:
        raise ValueError(f"coords must be one of {COORD_MODES}")
    notes: list = []
    if isinstance(value, dict):
        keys = list(value)
        if _pick_key(keys, value, True) or _pick_key(keys, value, False):
            notes.append("wrapped single record in a list")
            value = [value]
        else:
            lists = [v for v in value.values() if isinstance(v, list)]
            if len(lists) != 1:
                return ParsedOutput.invalid("object is not a record and wraps no single list")
            notes.append("unwrapped list from object")
            value = lists[0]
    if not isinstance(value, list):
        return ParsedOutput.invalid(f"expected a JSON array, got {type(value).__name__}")
    if len(value) == 4 and all(_is_number(v) for v in value):
        notes.append("wrapped bare box in a list")
        value = [value]

    spans, boxes, ordered = [], [], []
    for k, item in enumerate(value):
        where = f"item {k}"
        if isinstance(item, (list, tuple)):
            box = _as_box(item, dims, coords, notes, where)
            if box is not None:
                boxes.append(box)
                ordered.append(box)
        elif isinstance(item, dict):
            keys = list(item)
            bkey = _pick_key(keys, item, True)
            tkey = _pick_key(keys, item, False)
            if bkey is None:
                notes.append(f"dropped {where}: no box key")
                continue
            box = _as_box(item[bkey], dims, coords, notes, where)
            if box is None:
                continue
            ordered.append(box)
            if tkey is None:
                boxes.append(box)
            else:
                spans.append(GroundedSpan(_text_value(item[tkey]), box))
        else:
            notes.append(f"dropped {where}: unsupported {type(item).__name__}")

    if not spans and not boxes:
        if value:
            notes.append("no usable records")
            return ParsedOutput.invalid(*notes)
        if prefer == "spans":
            return ParsedOutput(ParseKind.SPANS, spans=(), diagnostics=tuple(notes))
        return ParsedOutput(ParseKind.BOXES, boxes=(), diagnostics=tuple(notes))
    if spans and boxes:
        if prefer == "boxes":
            notes.append("discarded text of mixed records")
            return ParsedOutput(ParseKind.BOXES, boxes=tuple(ordered), diagnostics=tuple(notes))
        notes.append(f"dropped {len(boxes)} text-less boxes from mixed records")
        return ParsedOutput(ParseKind.SPANS, spans=tuple(spans), diagnostics=tuple(notes))
    if spans:
        return ParsedOutput(ParseKind.SPANS, spans=tuple(spans), diagnostics=tuple(notes))
    return ParsedOutput(ParseKind.BOXES, boxes=tuple(boxes), diagnostics=tuple(notes))


def parse_prediction(raw: str, expected: str, dims: ImageDims,
                     coords: str = "pixel") -> ParsedOutput:
    """Parse one raw model output for a task expecting ``expected``.

    ``text`` and ``text2d`` outputs are returned as fence-stripped plain
    text. Structured outputs go through extraction, repair and record
    normalization; ``lines``/``paragraphs`` must yield spans and ``box``
    must yield boxes. Spans returned for a ``box`` task keep only their boxes.
    Anything else is ``Invalid``.
    """
    if expected not in OUTPUT_FORMATS:
        raise ValueError(f"expected must be one of {OUTPUT_FORMATS}, got {expected!r}")
    if expected in ("text", "text2d"):
        return ParsedOutput(ParseKind.PLAIN_TEXT, text=strip_fences(raw))
    prefer = "boxes" if expected == "box" else "spans"
    candidate = extract_candidate(raw)
    try:
        text, notes = repair_text(candidate)
    except RepairError as exc:
        return ParsedOutput.invalid(f"irreparable output: {exc}")
    parsed = normalize_records(strict_loads(text), dims, prefer=prefer, coords=coords)
    diagnostics = tuple(notes) + parsed.diagnostics
    if parsed.is_invalid:
        return ParsedOutput.invalid(*diagnostics)
    if prefer == "spans" and parsed.kind is not ParseKind.SPANS:
        return ParsedOutput.invalid(*diagnostics, f"expected spans for {expected}, got boxes")
    if prefer == "boxes" and parsed.kind is ParseKind.SPANS:
        return ParsedOutput(ParseKind.BOXES, boxes=tuple(s.bbox for s in parsed.spans),
                            diagnostics=diagnostics + ("kept boxes of text records",))
    return ParsedOutput(parsed.kind, text=parsed.text, spans=parsed.spans, boxes=parsed.boxes,
                        diagnostics=diagnostics)
