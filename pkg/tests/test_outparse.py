import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from groundocr.geometry import Box, GroundedSpan, ImageDims
from groundocr.outparse import (ParseKind, RepairError, dumps_boxes, dumps_spans,
                                extract_candidate, normalize_records, parse_prediction, repair,
                                repair_text, strict_loads, strip_fences)

D = ImageDims(800, 600)
CORPUS = json.loads((Path(__file__).parent / "data" / "repair_corpus.json").read_text(encoding="utf-8"))


@pytest.mark.parametrize("raw, expected", [
    ("```json\n[[1,2,3,4]]\n```", "[[1,2,3,4]]"),
    ("Sure! Here are the boxes: [[1,2,3,4]]", "[[1,2,3,4]]"),
    ("no structure here", "no structure here"),
    ("a [1] b [[1,2,3,4]] c", "[[1,2,3,4]]"),
    ('x {"k": "]"} y', '{"k": "]"}'),
])
def test_extract_candidate(raw, expected):
    got = extract_candidate(raw)
    assert got == expected
    if got != raw:
        strict_loads(got)


def test_strip_fences():
    assert strip_fences("```text\nHi\n```") == "Hi"
    assert strip_fences("plain") == "plain"
    assert strip_fences("```\nA\n  B\n```") == "A\n  B"


@pytest.mark.parametrize("raw, expected", [
    ('[{"text":"a","bbox":[1,2,3,4]}]', [{"text": "a", "bbox": [1, 2, 3, 4]}]),
    ("[[1,2,3,4],]", [[1, 2, 3, 4]]),
])
def test_repair_examples(raw, expected):
    assert repair(raw) == expected


@pytest.mark.parametrize("raw", ["{{{{", "]]", ":::", ""])
def test_repair_irreparable(raw):
    with pytest.raises(RepairError) as err:
        repair(raw)
    assert "position" in str(err.value)


@pytest.mark.parametrize("case", CORPUS, ids=[c["name"] for c in CORPUS])
def test_repair_corpus(case):
    text, _ = repair_text(extract_candidate(case["raw"]))
    assert strict_loads(text) == case["expected"]
    assert repair(json.dumps(case["expected"])) == case["expected"]


def test_strict_loads_rejects_nan():
    with pytest.raises(ValueError):
        strict_loads("[NaN]")


def test_normalize_records_examples():
    out = normalize_records([{"label": "x", "box": [1, 2, 3, 4]}], D)
    assert out.kind is ParseKind.SPANS and out.spans == (GroundedSpan("x", Box(1, 2, 3, 4)),)
    out = normalize_records([[1, 2, 3, 4], [5, 6, 7, 8]], D)
    assert out.kind is ParseKind.BOXES and [b.as_list() for b in out.boxes] == [[1, 2, 3, 4], [5, 6, 7, 8]]
    out = normalize_records([{"text": "a", "bbox": [-3, 5, 99999, 40]}], D)
    assert out.spans[0].bbox.as_list() == [0, 5, 800, 40]


def test_normalize_records_key_priority_and_coercion():
    item = {"label": "L", "text_raw": "T", "text": "exact", "bbox": [1, 1, 9, 9], "box2": [0, 0, 1, 1]}
    out = normalize_records([item], D)
    assert out.spans[0] == GroundedSpan("exact", Box(1, 1, 9, 9))
    out = normalize_records([{"Label": "L", "TextContent": "T", "BOX": ["1", "2", "3", "4"]}], D)
    assert out.spans[0] == GroundedSpan("T", Box(1, 2, 3, 4))
    assert any("coerced" in d for d in out.diagnostics)


def test_normalize_records_drops_degenerate_and_invalid():
    out = normalize_records([[1, 1, 1, 5], [1, 2, 3, 4]], D)
    assert out.kind is ParseKind.BOXES and len(out.boxes) == 1 and out.diagnostics
    assert normalize_records([[1, 1, 1, 5]], D).kind is ParseKind.INVALID
    assert normalize_records("text", D).kind is ParseKind.INVALID
    assert normalize_records({"a": 1}, D).kind is ParseKind.INVALID


def test_normalize_records_normalized_coords():
    out = normalize_records([[0, 0, 500, 1000]], D, coords="normalized:1000")
    assert out.boxes[0].as_list() == [0, 0, 400, 600]


def test_parse_prediction_examples():
    assert parse_prediction("[]", "box", D).kind is ParseKind.BOXES
    assert parse_prediction("[]", "box", D).boxes == ()
    assert parse_prediction("[]", "lines", D).kind is ParseKind.SPANS
    bad = parse_prediction("just prose", "lines", D)
    assert bad.kind is ParseKind.INVALID and bad.diagnostics
    out = parse_prediction("```text\nHi\n```", "text", D)
    assert out.kind is ParseKind.PLAIN_TEXT and out.text == "Hi"


def test_parse_prediction_shape_mismatch():
    assert parse_prediction("[[1,2,3,4]]", "lines", D).kind is ParseKind.INVALID
    out = parse_prediction('[{"text":"a","bbox":[1,2,3,4]}]', "box", D)
    assert out.kind is ParseKind.BOXES and out.boxes == (Box(1, 2, 3, 4),)


def test_canonical_serialization_round_trip():
    spans = (GroundedSpan("a “b”", Box(1, 2, 3, 4)),)
    assert parse_prediction(dumps_spans(spans), "lines", D).spans == spans
    boxes = (Box(1, 2, 3, 4), Box(0, 0, 800, 600))
    assert parse_prediction(dumps_boxes(boxes), "box", D).boxes == boxes
    assert json.loads(dumps_spans(spans)) == [{"text": "a “b”", "bbox": [1, 2, 3, 4]}]


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=8),
    lambda kids: st.lists(kids, max_size=4) | st.dictionaries(st.text(max_size=5), kids, max_size=4),
    max_leaves=12,
).filter(lambda v: isinstance(v, (list, dict)))


@given(json_values, st.sampled_from([None, 2]))
def test_valid_json_is_fixed_point(value, indent):
    text = json.dumps(value, indent=indent)
    assert repair(text) == json.loads(text)
    assert repair(extract_candidate(text)) == json.loads(text)


@given(st.text(max_size=40), st.sampled_from(["text", "text2d", "lines", "paragraphs", "box"]))
def test_parse_prediction_total(raw, expected):
    out = parse_prediction(raw, expected, D)
    assert out.kind in ParseKind
    payloads = [out.text is not None, out.spans is not None, out.boxes is not None]
    assert sum(payloads) == (0 if out.kind is ParseKind.INVALID else 1)
    if out.kind is ParseKind.INVALID:
        assert out.diagnostics
    for b in (out.boxes or ()) + tuple(s.bbox for s in out.spans or ()):
        assert 0 <= b.x1 < b.x2 <= 800 and 0 <= b.y1 < b.y2 <= 600
