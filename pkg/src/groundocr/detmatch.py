"""One-to-one box matching at an IoU threshold, and detection P/R/F1.

Matching maximizes total IoU over admissible pairs (IoU >= threshold). Among
equally good matchings the one whose pairs, sorted by prediction index, form
the lexicographically smallest sequence wins, so results do not depend on the
solver's internal pivoting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import Box

_TIE_EPS = 1e-12

OBJECTIVES = ("weight", "count")


@dataclass(frozen=True)
class Matching:
    pairs: tuple
    threshold: float
    total: float = 0.0

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DetectionScores:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    matching: Matching | None = field(default=None, compare=False, repr=False)


def _best_total(w: np.ndarray, rows: list, cols: list) -> float:
    if not rows or not cols:
        return 0.0
    sub = w[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return math.fsum(sub[r, c])


def _lexmin_component(w: np.ndarray, rows: list, cols: list) -> list:
    """Lexicographically smallest optimal matching inside one component.

    Fixes rows in index order, taking the smallest column that still admits an
    optimal completion. ``w`` is zero for inadmissible pairs.
    """
    if len(rows) == 1 and len(cols) == 1:
        return [(rows[0], cols[0])] if w[rows[0], cols[0]] > 0 else []
    target = _best_total(w, rows, cols)
    pairs = []
    free_cols = list(cols)
    for k, r in enumerate(rows):
        rest = rows[k + 1:]
        for c in free_cols:
            if w[r, c] <= 0:
                continue
            remaining = [x for x in free_cols if x != c]
            if w[r, c] + _best_total(w, rest, remaining) >= target - _TIE_EPS * max(1.0, target):
                pairs.append((r, c))
                target -= w[r, c]
                free_cols = remaining
                break
        # otherwise row r stays unmatched and the target is unchanged
    return pairs


def assign(weights, threshold: float, objective: str = "weight") -> Matching:
    """Maximum-weight one-to-one assignment restricted to weights >= ``threshold``.

    ``objective="count"`` instead maximizes the number of matched pairs and
    uses total weight only to choose among maximum-cardinality matchings.

    >>> assign([[0.6, 0.55], [0.55, 0.0]], 0.5).pairs
    ((0, 1), (1, 0))
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return Matching((), threshold)
    if w.ndim != 2:
        raise ValueError(f"weights must be a 2-d matrix, got shape {w.shape}")
    admissible = w >= threshold
    if not admissible.any():
        return Matching((), threshold)
    n_rows, n_cols = w.shape
    if objective == "count":
        # each pair is worth more than the combined weight bonus of any matching
        eff = np.where(admissible, 1.0 + w / (min(n_rows, n_cols) + 1), 0.0)
    else:
        eff = np.where(admissible, w, 0.0)

    # independent blocks of the admissible bipartite graph are solved separately
    graph = np.zeros((n_rows + n_cols, n_rows + n_cols), dtype=bool)
    graph[:n_rows, n_rows:] = admissible
    n_comp, labels = connected_components(csr_matrix(graph), directed=False)
    pairs = []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        rows = [int(m) for m in members if m < n_rows]
        cols = [int(m) - n_rows for m in members if m >= n_rows]
        if rows and cols:
            pairs.extend(_lexmin_component(eff, rows, cols))
    pairs.sort()
    total = math.fsum(w[r, c] for r, c in pairs)
    return Matching(tuple(pairs), threshold, total)


def iou_matrix(preds: Sequence[Box], gts: Sequence[Box]) -> np.ndarray:
    if not preds or not gts:
        return np.zeros((len(preds), len(gts)))
    p = np.array([b.as_list() for b in preds], dtype=np.int64)
    g = np.array([b.as_list() for b in gts], dtype=np.int64)
    iw = np.minimum(p[:, None, 2], g[None, :, 2]) - np.maximum(p[:, None, 0], g[None, :, 0])
    ih = np.minimum(p[:, None, 3], g[None, :, 3]) - np.maximum(p[:, None, 1], g[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    ap = (p[:, 2] - p[:, 0]) * (p[:, 3] - p[:, 1])
    ag = (g[:, 2] - g[:, 0]) * (g[:, 3] - g[:, 1])
    union = ap[:, None] + ag[None, :] - inter
    return inter / union


def match_boxes(preds: Sequence[Box], gts: Sequence[Box], threshold: float = 0.5,
                objective: str = "weight") -> Matching:
    return assign(iou_matrix(preds, gts), threshold, objective)


def detection_scores(preds: Sequence[Box], gts: Sequence[Box], threshold: float = 0.5,
                     objective: str = "weight") -> DetectionScores:
    """Precision, recall and F1 after one-to-one matching.

    Empty sets follow fixed conventions: no predictions and no ground truth
    scores (1, 1, 1); predictions without ground truth have recall 1 and
    precision 0; ground truth without predictions has recall 0.
    """
    m = match_boxes(preds, gts, threshold, objective)
    tp = len(m)
    fp = len(preds) - tp
    fn = len(gts) - tp
    if not preds and not gts:
        return DetectionScores(0, 0, 0, 1.0, 1.0, 1.0, m)
    precision = tp / max(1, tp + fp)
    recall = 1.0 if not gts else tp / len(gts)
    f1 = 2 * precision * recall / max(1.0, precision + recall)
    return DetectionScores(tp, fp, fn, precision, recall, f1, m)
