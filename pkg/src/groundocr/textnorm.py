"""String normalization applied before every text metric.

``normalize`` is the one-line operator used for CER/WER, conditional-detection
matching and task references. ``normalize_2d`` keeps line breaks and
intra-line spacing so layout differences in ``text2d`` strings still count.

The quote/dash/bullet replacements come from ``data/canonical_chars.tsv`` so
the exact codepoint list is versioned with the package.
"""
from __future__ import annotations

import unicodedata
from functools import lru_cache
from importlib import resources

TABLE_RESOURCE = "canonical_chars.tsv"


def _parse_table(text: str) -> dict:
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition("\t")
        if not key.startswith("U+"):
            raise ValueError(f"{TABLE_RESOURCE}:{lineno}: bad codepoint {key!r}")
        cp = int(key[2:], 16)
        if cp in table:
            raise ValueError(f"{TABLE_RESOURCE}:{lineno}: duplicate entry {key}")
        table[cp] = value
    return table


@lru_cache(maxsize=None)
def canonical_table() -> dict:
    """Codepoint -> replacement mapping, usable with :meth:`str.translate`."""
    text = resources.files("groundocr.data").joinpath(TABLE_RESOURCE).read_text(encoding="utf-8")
    return _parse_table(text)


def _clean_row(s: str) -> str:
    # whitespace -> space, other control characters dropped, no newlines expected here
    s = unicodedata.normalize("NFKC", s).translate(canonical_table())
    out = []
    for ch in s:
        if ch.isspace():
            out.append(" ")
        elif unicodedata.category(ch) == "Cc":
            continue
        else:
            out.append(ch)
    # deletions above can leave sequences NFKC would compose
    return unicodedata.normalize("NFKC", "".join(out))


def normalize(s: str) -> str:
    """NFKC + canonical punctuation, trimmed, with whitespace runs collapsed.

    >>> normalize("  \\ufb01le  \\u201cok\\u201d ")
    'file "ok"'
    """
    if not s:
        return ""
    return " ".join(_clean_row(s).split())


def normalize_2d(s: str) -> str:
    """Like :func:`normalize` but keeps rows and spacing.

    Every row gets the same character canonicalization; trailing spaces per
    row and trailing blank rows are removed. Interior blank rows and leading
    indentation survive.
    """
    if not s:
        return ""
    rows = [_clean_row(r).rstrip(" ") for r in s.splitlines()]
    while rows and not rows[-1]:
        rows.pop()
    return "\n".join(rows)
