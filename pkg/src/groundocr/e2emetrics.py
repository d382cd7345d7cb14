"""End-to-end metrics for structured (text + box) reading outputs."""
from __future__ import annotations

from statistics import fmean
from typing import Sequence

from .detmatch import match_boxes
from .geometry import GroundedSpan, ImageDims
from .text2d import render_text2d
from .textmetrics import cer
from .textnorm import normalize_2d


def mcer_at(preds: Sequence[GroundedSpan], gts: Sequence[GroundedSpan],
            threshold: float = 0.5) -> float:
    """Mean CER over box-matched span pairs.

    Unmatched spans on either side do not enter the mean. With no matches
    the value is 0 if both sides are empty and 1 otherwise.
    """
    m = match_boxes([s.bbox for s in preds], [s.bbox for s in gts], threshold)
    if not m.pairs:
        return 0.0 if not preds and not gts else 1.0
    return fmean(cer(preds[i].text, gts[j].text) for i, j in m.pairs)


def e2e_reading_order(spans: Sequence[GroundedSpan]) -> list:
    """Sort by top edge, then left edge; stable for exact ties."""
    return sorted(spans, key=lambda s: (s.bbox.y1, s.bbox.x1))


def linearize_page(spans: Sequence[GroundedSpan], dims: ImageDims) -> str:
    return normalize_2d(render_text2d(e2e_reading_order(spans), dims))


def cer_e2e(preds: Sequence[GroundedSpan], gts: Sequence[GroundedSpan],
            dims: ImageDims) -> float:
    """CER between layout-preserving page renderings of both span sets."""
    return cer(linearize_page(preds, dims), linearize_page(gts, dims), two_d=True)
