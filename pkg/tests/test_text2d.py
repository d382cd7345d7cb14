from collections import Counter

import pytest
from hypothesis import given, strategies as st

from groundocr.geometry import Box, GroundedSpan, ImageDims
from groundocr.text2d import (DEFAULT_CONFIG, LayoutStats, Text2DConfig, estimate_layout,
                              group_rows, order_lines_2d, render_text2d)
from groundocr.textnorm import normalize
from oracles import grid_render
from strategies import spans

D = ImageDims(100, 120)


def S(text, *box):
    return GroundedSpan(text, Box(*box))


def test_estimate_layout_examples():
    st_ = estimate_layout([S("abcd", 0, 0, 40, 10)], D)
    assert st_.char_density == 0.1 and st_.median_line_height == 10 and st_.chars_per_row == 10
    assert estimate_layout([], ImageDims(100, 50)) == LayoutStats(1.0, 0.125, 13)
    st_ = estimate_layout([S("a", 0, 0, 5, 10), S("b", 0, 20, 5, 40)], D)
    assert st_.median_line_height == 15


def test_estimate_layout_ignores_empty_text():
    st_ = estimate_layout([S("", 0, 0, 90, 10), S("ab", 0, 20, 10, 30)], D)
    assert st_.char_density == 0.2


def test_order_lines_examples():
    stats = LayoutStats(10, 0.1, 10)
    top, bottom = S("t", 0, 0, 5, 10), S("b", 0, 30, 5, 40)
    assert order_lines_2d([bottom, top], stats) == [top, bottom]
    right, left = S("r", 300, 0, 310, 10), S("l", 10, 0, 20, 10)
    assert order_lines_2d([right, left], stats) == [left, right]
    a, b, c = S("a", 50, 5, 60, 15), S("b", 0, 9, 10, 19), S("c", 0, 75, 10, 85)
    rows = group_rows([c, a, b], stats)
    assert rows == [[b, a], [c]]


def test_render_examples():
    assert render_text2d([S("Hello", 0, 0, 50, 10)], D) == "Hello"
    assert render_text2d([S("A", 0, 0, 10, 10), S("B", 0, 100, 10, 110)], D) == "A\n\n\n\nB"
    assert render_text2d([S("A", 0, 0, 10, 10), S("B", 80, 0, 90, 10)], D) == "A       B"
    assert render_text2d([], D) == ""


def test_render_collision_shifts_right():
    lines = [S("abcdef", 0, 0, 20, 10), S("xy", 10, 0, 20, 10)]
    stats = LayoutStats(10, 0.1, 10)
    assert render_text2d(lines, D, stats=stats) == "abcdef xy"


def test_render_blank_line_rule():
    stats = LayoutStats(10, 0.1, 10)
    # centers 5 and 35: gap 30 / 15 = 2 blank lines
    assert render_text2d([S("a", 0, 0, 10, 10), S("b", 0, 30, 10, 40)], D, stats=stats) == "a\n\n\nb"
    # centers 5 and 25: gap 20 -> 1 blank line
    assert render_text2d([S("a", 0, 0, 10, 10), S("b", 0, 20, 10, 30)], D, stats=stats) == "a\n\nb"
    cfg = Text2DConfig(max_blank_lines=1)
    assert render_text2d([S("a", 0, 0, 10, 10), S("b", 0, 90, 10, 100)], D, cfg, stats) == "a\n\nb"


GOLDEN_LINES = [
    S("INVOICE", 40, 10, 110, 26), S("No. 17", 300, 12, 350, 24),
    S("Item", 10, 60, 50, 74), S("Price", 300, 61, 350, 75),
    S("Tea — green", 10, 80, 120, 94), S("2.50", 310, 81, 350, 95),
    S("Total", 10, 150, 60, 164), S("2.50", 310, 150, 350, 164),
]
# density 46 chars / 450 px; median height 14; columns 4, 31, 1, 32;
# row centers 18, 67.5, 87.5, 157 give 2, 0 and 3 blank lines
GOLDEN = "\n".join([
    " " * 4 + "INVOICE" + " " * 20 + "No. 17",
    "",
    "",
    " Item" + " " * 26 + "Price",
    " Tea - green" + " " * 20 + "2.50",
    "",
    "",
    "",
    " Total" + " " * 26 + "2.50",
])


def test_golden_page():
    stats = estimate_layout(GOLDEN_LINES, ImageDims(400, 200))
    assert stats.char_density == 46 / 450
    assert render_text2d(GOLDEN_LINES, ImageDims(400, 200)) == GOLDEN


def _chars(s):
    return Counter(c for c in s if not c.isspace())


@given(st.lists(spans, max_size=8))
def test_render_invariants(lines):
    out = render_text2d(lines, ImageDims(200, 200))
    expected = Counter()
    for s in lines:
        expected += _chars(normalize(s.text))
    assert _chars(out) == expected
    allowed = set("".join(normalize(s.text) for s in lines)) | {" ", "\n"}
    assert set(out) <= allowed
    assert out == render_text2d(lines, ImageDims(200, 200))
    assert out == grid_render(lines, ImageDims(200, 200))
    assert all(row == row.rstrip(" ") for row in out.split("\n"))
    assert not out.endswith("\n")


def test_fixture_pages_match_grid_oracle(pages):
    for p in pages:
        assert render_text2d(p.lines, p.dims) == grid_render(p.lines, p.dims)
