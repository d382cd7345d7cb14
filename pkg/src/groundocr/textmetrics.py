"""Levenshtein distance, CER and WER on normalized strings.

Distances are over Unicode scalar values (one Python ``str`` element each).
CER divides by the longer of the two normalized strings so it stays in
``[0, 1]``; WER divides by the reference word count and is not clamped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .textnorm import normalize, normalize_2d


@dataclass(frozen=True)
class EditCounts:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def as_tuple(self) -> tuple:
        return (self.substitutions, self.deletions, self.insertions, self.ref_words)


def _codes(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def _token_ids(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple:
    vocab: dict = {}
    ia = np.fromiter((vocab.setdefault(t, len(vocab)) for t in a), dtype=np.int64, count=len(a))
    ib = np.fromiter((vocab.setdefault(t, len(vocab)) for t in b), dtype=np.int64, count=len(b))
    return ia, ib


def _next_row(prev: np.ndarray, sym, cols: np.ndarray, i: int, idx: np.ndarray) -> np.ndarray:
    # cand[j] = best cost using a deletion or a (mis)match into cell j;
    # insertions along the row are then a running min of cand[k] + (j - k).
    cand = np.empty_like(prev)
    cand[0] = i
    np.minimum(prev[1:] + 1, prev[:-1] + (cols != sym), out=cand[1:])
    return np.minimum.accumulate(cand - idx) + idx


def _distance(a: np.ndarray, b: np.ndarray) -> int:
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 0:
        return len(a)
    idx = np.arange(len(b) + 1, dtype=np.int64)
    row = idx.copy()
    for i, sym in enumerate(a, 1):
        row = _next_row(row, sym, b, i, idx)
    return int(row[-1])


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning ``a`` into ``b``.

    >>> levenshtein("kitten", "sitting")
    3
    """
    if a == b:
        return 0
    return _distance(_codes(a), _codes(b))


def sequence_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Levenshtein distance between two token sequences."""
    if list(a) == list(b):
        return 0
    return _distance(*_token_ids(a, b))


def _normalizer(two_d: bool):
    return normalize_2d if two_d else normalize


def cer(pred: str, ref: str, two_d: bool = False) -> float:
    """Character error rate, normalized by the longer string.

    Both strings are normalized first (``normalize_2d`` when ``two_d``).
    Two empty strings give 0; exactly one empty string gives 1.
    """
    norm = _normalizer(two_d)
    p, r = norm(pred), norm(ref)
    if not p and not r:
        return 0.0
    if not p or not r:
        return 1.0
    return levenshtein(p, r) / max(1, len(p), len(r))


def word_align_counts(pred: str, ref: str) -> EditCounts:
    """Split the word-level edit distance into substitutions/deletions/insertions.

    Deletions are reference words missing from the prediction; insertions are
    extra predicted words. Ties between equally cheap alignments prefer a
    diagonal step, then a deletion, then an insertion.
    """
    pw, rw = normalize(pred).split(), normalize(ref).split()
    n = len(rw)
    if pw == rw:
        return EditCounts(0, 0, 0, n)
    hyp, refs = _token_ids(pw, rw)
    # full matrix: rows over reference words, columns over predicted words
    idx = np.arange(len(hyp) + 1, dtype=np.int64)
    dp = np.empty((n + 1, len(hyp) + 1), dtype=np.int64)
    dp[0] = idx
    for i in range(1, n + 1):
        dp[i] = _next_row(dp[i - 1], refs[i - 1], hyp, i, idx)

    s = d = ins = 0
    i, j = n, len(hyp)
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diff = int(refs[i - 1] != hyp[j - 1])
            if dp[i, j] == dp[i - 1, j - 1] + diff:
                s += diff
                i, j = i - 1, j - 1
                continue
        if i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditCounts(s, d, ins, n)


def wer(pred: str, ref: str) -> float:
    """Word error rate ``(S + D + I) / max(1, N)`` over normalized words.

    Mirrors the CER conventions: 0 when both sides are empty and 1 when
    exactly one side is. Otherwise the value may exceed 1.
    """
    p, r = normalize(pred), normalize(ref)
    if not p and not r:
        return 0.0
    if not p or not r:
        return 1.0
    counts = word_align_counts(p, r)
    return counts.errors / max(1, counts.ref_words)
