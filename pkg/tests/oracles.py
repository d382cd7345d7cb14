"""Slow, obviously-correct reference implementations used by the tests."""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from groundocr.geometry import Box, GroundedSpan
from groundocr.textnorm import normalize


def lev_full(a, b) -> int:
    """Textbook full-matrix Levenshtein DP."""
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def word_counts_full(pred: str, ref: str) -> tuple:
    """(S, D, I, N) for the word alignment, minimising total edits then S."""
    p = pred.split(" ") if pred else []
    r = ref.split(" ") if ref else []
    # cell = (edits, subs, dels, ins); inserting = extra predicted word
    INF = (math.inf, 0, 0, 0)
    d = [[INF] * (len(p) + 1) for _ in range(len(r) + 1)]
    d[0][0] = (0, 0, 0, 0)
    for i in range(len(r) + 1):
        for j in range(len(p) + 1):
            if i == j == 0:
                continue
            cands = []
            if i:
                e, s, dl, ins = d[i - 1][j]
                cands.append((e + 1, s, dl + 1, ins))
            if j:
                e, s, dl, ins = d[i][j - 1]
                cands.append((e + 1, s, dl, ins + 1))
            if i and j:
                e, s, dl, ins = d[i - 1][j - 1]
                hit = r[i - 1] == p[j - 1]
                cands.append((e + (not hit), s + (not hit), dl, ins))
            d[i][j] = min(cands)
    e, s, dl, ins = d[len(r)][len(p)]
    return s, dl, ins, len(r)


def raster_iou(a: Box, b: Box) -> Fraction:
    """IoU by counting shared integer pixels."""
    pa = {(x, y) for x in range(a.x1, a.x2) for y in range(a.y1, a.y2)}
    pb = {(x, y) for x in range(b.x1, b.x2) for y in range(b.y1, b.y2)}
    return Fraction(len(pa & pb), len(pa | pb))


def raster_coverage(inner: Box, region: Box) -> Fraction:
    pa = {(x, y) for x in range(inner.x1, inner.x2) for y in range(inner.y1, inner.y2)}
    pb = {(x, y) for x in range(region.x1, region.x2) for y in range(region.y1, region.y2)}
    return Fraction(len(pa & pb), len(pa))


def exact_iou(a: Box, b: Box) -> Fraction:
    iw = max(0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    ua = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter
    return Fraction(inter, ua)


def exact_coverage(inner: Box, region: Box) -> Fraction:
    iw = max(0, min(inner.x2, region.x2) - max(inner.x1, region.x1))
    ih = max(0, min(inner.y2, region.y2) - max(inner.y1, region.y1))
    return Fraction(iw * ih, (inner.x2 - inner.x1) * (inner.y2 - inner.y1))


_PERMS: dict = {}


def brute_assign(w, tau: float) -> tuple:
    """(best total, lexicographically smallest optimal pair tuple) by enumeration.

    Pads to a square matrix and walks every permutation; inadmissible cells
    are worth nothing and are dropped from the pair list.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return 0.0, ()
    n = max(w.shape)
    sq = np.zeros((n, n))
    sq[: w.shape[0], : w.shape[1]] = np.where(w >= tau, w, 0.0)
    if n not in _PERMS:
        _PERMS[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    perms = _PERMS[n]
    totals = sq[np.arange(n), perms].sum(axis=1)
    near = np.flatnonzero(totals >= totals.max() - 1e-9)
    best, best_pairs = -1.0, None
    for k in near:
        pairs = tuple((i, int(perms[k][i])) for i in range(n) if sq[i, perms[k][i]] > 0)
        total = math.fsum(sq[i, j] for i, j in pairs)
        if total > best or (total == best and pairs < best_pairs):
            best, best_pairs = total, pairs
    return best, best_pairs


def substring_scan(lines, query: str) -> tuple:
    """Boxes of lines containing ``query`` (both normalized), by explicit window scan."""
    q = normalize(query)
    out = []
    if not q:
        return ()
    for s in lines:
        t = normalize(s.text)
        if any(t[k:k + len(q)] == q for k in range(len(t) - len(q) + 1)):
            out.append(s.bbox)
    return tuple(out)


def brute_localized(spans, region: Box, rule: str = "iou") -> str:
    measure = exact_iou if rule == "iou" else exact_coverage
    chosen = [(s.bbox.y1, s.bbox.x1, k, s) for k, s in enumerate(spans)
              if measure(s.bbox, region) >= Fraction(1, 2)]
    texts = [normalize(s.text) for *_, s in sorted(chosen, key=lambda c: c[:3])]
    return "\n".join(t for t in texts if t)


def grid_render(lines, dims, stats=None, cfg=None) -> str:
    """Independent text2d renderer writing into an explicit character grid."""
    from groundocr.text2d import DEFAULT_CONFIG, estimate_layout
    cfg = cfg or DEFAULT_CONFIG
    spans = [GroundedSpan(normalize(s.text), s.bbox) for s in lines]
    stats = stats or estimate_layout(spans, dims, cfg)
    spans = [s for s in spans if s.text]
    if not spans:
        return ""
    tol = cfg.row_tolerance * stats.median_line_height
    idx = sorted(range(len(spans)), key=lambda i: ((spans[i].bbox.y1 + spans[i].bbox.y2) / 2, i))
    rows, anchor = [], None
    for i in idx:
        c = (spans[i].bbox.y1 + spans[i].bbox.y2) / 2
        if anchor is None or c > anchor + tol:
            rows.append([])
            anchor = c
        rows[-1].append(i)
    grid: list = []
    prev = None
    for row in rows:
        row.sort(key=lambda i: (spans[i].bbox.x1, i))
        center = sum((spans[i].bbox.y1 + spans[i].bbox.y2) / 2 for i in row) / len(row)
        if prev is not None:
            gap = int((center - prev) // (cfg.blank_line_factor * stats.median_line_height))
            grid.extend([[] for _ in range(min(cfg.max_blank_lines, gap))])
        prev = center
        cells: list = []
        for i in row:
            col = math.floor(spans[i].bbox.x1 * stats.char_density + 0.5)
            while cells and col <= len(cells):
                col = len(cells) + 1
            cells.extend([" "] * (col - len(cells)))
            cells.extend(spans[i].text)
        grid.append(cells)
    text_rows = ["".join(r).rstrip(" ") for r in grid]
    while text_rows and not text_rows[-1]:
        text_rows.pop()
    return "\n".join(text_rows)
