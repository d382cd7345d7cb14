"""Synthetic page records with non-overlapping line layouts.

Pages come in three layout styles (single column, two columns, and a sparse
form-like layout with right-aligned fields) and carry line, paragraph and
word annotations. They exist for tests and benchmarks, not as training data.
"""
from __future__ import annotations

import math
import random
from typing import Iterator

from .geometry import Box, GroundedSpan, ImageDims, union_box
from .taskgen import PageRecord, derive_seed

STYLES = ("single-column", "two-column", "form")

_WORDS = (
    "the of and to in is for on that with as by this are from at be or an was it "
    "invoice total amount date page report results table figure section patient "
    "study analysis data method value number account balance payment due tax "
    "Total Amount Date Page Report Results Table Figure Section Summary Abstract "
    "revenue income expense 2021 2022 2023 12.50 $1,250.00 No. Fig. e.g. i.e. "
    "café naïve résumé Zürich déjà “quoted” ‘single’ — – • ½ ﬁnal"
).split()


def _text(rng: random.Random, max_chars: int) -> str:
    words = [rng.choice(_WORDS)]
    while rng.random() < 0.9:
        w = rng.choice(_WORDS)
        if len(words) + sum(map(len, words)) + len(w) > max_chars:
            break
        words.append(w)
    return " ".join(words)


def _word_spans(text: str, box: Box, char_w: float) -> list:
    spans = []
    offset = 0
    for word in text.split(" "):
        x1 = min(box.x2 - 1, box.x1 + math.floor(offset * char_w))
        x2 = max(x1 + 1, min(box.x2, box.x1 + math.ceil((offset + len(word)) * char_w)))
        spans.append(GroundedSpan(word, Box(x1, box.y1, x2, box.y2)))
        offset += len(word) + 1
    return spans


def synthetic_page(rng: random.Random, page_id: str, style: str | None = None,
                   max_lines: int = 40) -> PageRecord:
    style = style or rng.choice(STYLES)
    width = rng.randint(400, 1200)
    height = rng.randint(400, 1400)
    char_w = rng.uniform(5.0, 9.0)
    line_h = rng.randint(10, 24)
    margin = rng.randint(10, 40)
    n_cols = 2 if style == "two-column" else 1
    gutter = rng.randint(20, 60)
    col_w = (width - 2 * margin - (n_cols - 1) * gutter) / n_cols
    budget = rng.randint(0, max_lines)

    lines: list = []
    paragraphs: list = []
    words: list = []
    for col in range(n_cols):
        left = margin + col * (col_w + gutter)
        y = margin
        while len(lines) < budget:
            para = []
            for _ in range(rng.randint(1, 5)):
                if y + line_h > height - margin or len(lines) >= budget:
                    break
                indent = rng.randint(0, 20) if style != "form" else rng.randint(0, int(col_w / 3))
                max_chars = max(1, int((col_w - indent) // char_w))
                text = _text(rng, max_chars)
                x1 = int(left + indent)
                x2 = min(int(left + col_w), x1 + max(1, math.ceil(len(text) * char_w)))
                box = Box(x1, y, max(x2, x1 + 1), y + line_h)
                para.append(GroundedSpan(text, box))
                if style == "form" and rng.random() < 0.4:
                    # right-aligned field on the same row
                    field = rng.choice(_WORDS)
                    fx2 = int(left + col_w)
                    fx1 = fx2 - max(1, math.ceil(len(field) * char_w))
                    if fx1 > box.x2 + 2 * char_w:
                        lines.append(GroundedSpan(field, Box(fx1, y, fx2, y + line_h)))
                        words.extend(_word_spans(field, lines[-1].bbox, char_w))
                y += line_h + rng.randint(1, max(1, line_h // 2))
            if not para:
                break
            lines.extend(para)
            for s in para:
                words.extend(_word_spans(s.text, s.bbox, char_w))
            paragraphs.append(GroundedSpan(" ".join(s.text for s in para),
                                           union_box([s.bbox for s in para])))
            y += int(line_h * rng.uniform(0.5, 3.0))
    return PageRecord(page_id, ImageDims(width, height), tuple(lines), tuple(paragraphs),
                      tuple(words), dataset=style)


def generate_pages(seed: int, n: int, max_lines: int = 40) -> Iterator[PageRecord]:
    """``n`` pages; page ``i`` depends only on ``seed`` and ``i``."""
    for i in range(n):
        rng = random.Random(derive_seed(seed, "fixture", i))
        yield synthetic_page(rng, f"synth-{seed}-{i:05d}", max_lines=max_lines)
