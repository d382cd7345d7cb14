"""Layout-preserving linearization of line spans onto a character grid.

Lines are grouped into rows by vertical center, placed at a column derived
from their left edge and a page-wide character density, and separated
vertically by blank lines proportional to the gap between row centers. The
output contains only the normalized line texts, spaces and newlines.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

from .geometry import GroundedSpan, ImageDims, round_half_up
from .textnorm import normalize


@dataclass(frozen=True)
class Text2DConfig:
    row_tolerance: float = 0.5       # fraction of median line height
    blank_line_factor: float = 1.5   # one blank line per this many line heights of gap
    max_blank_lines: int = 3
    default_line_height: float = 1.0
    default_density: float = 0.125   # characters per pixel


DEFAULT_CONFIG = Text2DConfig()


@dataclass(frozen=True)
class LayoutStats:
    median_line_height: float
    char_density: float
    chars_per_row: int


def estimate_layout(lines: Sequence[GroundedSpan], dims: ImageDims,
                    config: Text2DConfig = DEFAULT_CONFIG) -> LayoutStats:
    if lines:
        height = float(statistics.median(s.bbox.height for s in lines))
    else:
        height = config.default_line_height
    n_chars = 0
    width = 0
    for s in lines:
        t = normalize(s.text)
        if t:
            n_chars += len(t)
            width += s.bbox.width
    density = n_chars / width if n_chars else config.default_density
    return LayoutStats(height, density, max(1, math.ceil(dims.width * density)))


def group_rows(lines: Sequence[GroundedSpan], stats: LayoutStats,
               config: Text2DConfig = DEFAULT_CONFIG) -> list:
    """Rows of lines, top to bottom, each sorted left to right.

    A line joins the current row when its center is within
    ``row_tolerance * median_line_height`` of the row's first (topmost) center.
    """
    tol = config.row_tolerance * stats.median_line_height
    by_center = sorted(range(len(lines)), key=lambda i: (lines[i].bbox.center_y, i))
    rows: list = []
    anchor = None
    for i in by_center:
        c = lines[i].bbox.center_y
        if anchor is None or c - anchor > tol:
            rows.append([])
            anchor = c
        rows[-1].append(i)
    ordered = []
    for row in rows:
        row.sort(key=lambda i: (lines[i].bbox.x1, i))
        ordered.append([lines[i] for i in row])
    return ordered


def order_lines_2d(lines: Sequence[GroundedSpan], stats: LayoutStats,
                   config: Text2DConfig = DEFAULT_CONFIG) -> list:
    return [s for row in group_rows(lines, stats, config) for s in row]


def _row_center(row: Sequence[GroundedSpan]) -> float:
    return sum(s.bbox.center_y for s in row) / len(row)


def render_text2d(lines: Sequence[GroundedSpan], dims: ImageDims,
                  config: Text2DConfig = DEFAULT_CONFIG,
                  stats: LayoutStats | None = None) -> str:
    """Render line spans as a ``text2d`` string.

    Spans whose text normalizes to empty are skipped. A line that would
    overlap the previous one in its row is shifted right so that at least one
    space separates them.

    >>> from groundocr.geometry import Box
    >>> render_text2d([GroundedSpan("A", Box(0, 0, 10, 10)),
    ...                GroundedSpan("B", Box(80, 0, 90, 10))], ImageDims(100, 100))
    'A       B'
    """
    lines = [GroundedSpan(normalize(s.text), s.bbox) for s in lines]
    if stats is None:
        stats = estimate_layout(lines, dims, config)
    lines = [s for s in lines if s.text]
    if not lines:
        return ""
    rows = group_rows(lines, stats, config)
    step = config.blank_line_factor * stats.median_line_height

    out: list = []
    prev_center = None
    for row in rows:
        center = _row_center(row)
        if prev_center is not None:
            blanks = min(config.max_blank_lines, math.floor((center - prev_center) / step))
            out.extend([""] * blanks)
        prev_center = center
        cells = ""
        for s in row:
            col = round_half_up(s.bbox.x1 * stats.char_density)
            if cells:
                col = max(col, len(cells) + 1)
            cells = cells.ljust(col) + s.text
        out.append(cells.rstrip(" "))
    while out and not out[-1]:
        out.pop()
    return "\n".join(out)
