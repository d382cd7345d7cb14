"""Build evaluable task instances from annotated pages.

Four task families are supported: full-page reading (``text``, ``text2d``,
``lines``, ``paragraphs``), full-page detection, conditional detection
(query string -> boxes of all lines containing it) and localized reading
(region -> plain text). Every random choice is drawn from a
:class:`random.Random` seeded from the corpus seed and the page id, so tasks
for one page never depend on which other pages were generated alongside it.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import string
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable, Sequence

from .e2emetrics import e2e_reading_order
from .geometry import Box, GroundedSpan, ImageDims, InvalidGeometry, clip_box, coverage, iou
from .outparse import OUTPUT_FORMATS
from .text2d import render_text2d
from .textnorm import normalize

logger = logging.getLogger(__name__)

FAMILIES = ("reading", "detection", "conditional_detection", "localized_reading")
READING_FORMATS = ("text", "text2d", "lines", "paragraphs")
GRANULARITIES = ("lines", "paragraphs")
SELECTION_RULES = ("iou", "coverage")
MAX_QUERY_WORDS = 4


class PageFormatError(ValueError):
    """A page record that does not follow the page schema."""


class MissingGranularity(ValueError):
    """A task needs an annotation level the page does not have."""


# --- pages ----------------------------------------------------------------------

def _spans_from_json(items, dims: ImageDims, where: str, tally: Counter) -> tuple:
    if not isinstance(items, list):
        raise PageFormatError(f"{where} must be a list")
    spans = []
    for k, item in enumerate(items):
        if not isinstance(item, dict) or "bbox" not in item:
            raise PageFormatError(f"{where}[{k}] must be an object with text and bbox")
        text = item.get("text", "")
        if not isinstance(text, str):
            raise PageFormatError(f"{where}[{k}].text must be a string")
        raw = item["bbox"]
        if (not isinstance(raw, list) or len(raw) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)):
            raise PageFormatError(f"{where}[{k}].bbox must be 4 numbers")
        try:
            box = clip_box(raw, dims)
        except InvalidGeometry as exc:
            raise PageFormatError(f"{where}[{k}].bbox: {exc}") from None
        if box is None:
            tally["degenerate_boxes"] += 1
            continue
        if box.as_list() != raw:
            tally["clipped_boxes"] += 1
        spans.append(GroundedSpan(text, box))
    return tuple(spans)


@dataclass(frozen=True)
class PageRecord:
    id: str
    dims: ImageDims
    lines: tuple
    paragraphs: tuple | None = None
    words: tuple | None = None
    dataset: str | None = None
    diagnostics: Counter = field(default_factory=Counter, compare=False, repr=False)

    def granularity(self, name: str) -> tuple:
        spans = getattr(self, name) if name in ("lines", "paragraphs", "words") else None
        if spans is None:
            raise MissingGranularity(f"page {self.id!r} has no {name} annotations")
        return spans

    def to_dict(self) -> dict:
        d: dict = {"id": self.id, "image": self.dims.to_dict(),
                   "lines": [s.to_dict() for s in self.lines]}
        for name in ("paragraphs", "words"):
            spans = getattr(self, name)
            if spans is not None:
                d[name] = [s.to_dict() for s in spans]
        if self.dataset is not None:
            d["dataset"] = self.dataset
        return d

    @classmethod
    def from_dict(cls, d: Any) -> "PageRecord":
        """Validate a page record; out-of-bounds boxes are clipped, degenerate ones dropped."""
        if not isinstance(d, dict):
            raise PageFormatError("page record must be a JSON object")
        for key in ("id", "image", "lines"):
            if key not in d:
                raise PageFormatError(f"page record missing {key!r}")
        if not isinstance(d["id"], str) or not d["id"]:
            raise PageFormatError("page id must be a non-empty string")
        img = d["image"]
        try:
            dims = ImageDims.from_dict(img)
        except (KeyError, TypeError, ValueError) as exc:
            raise PageFormatError(f"bad image dims {img!r}: {exc}") from None
        tally: Counter = Counter()
        lines = _spans_from_json(d["lines"], dims, "lines", tally)
        extra = {}
        for name in ("paragraphs", "words"):
            if d.get(name) is not None:
                extra[name] = _spans_from_json(d[name], dims, name, tally)
        dataset = d.get("dataset")
        if dataset is not None and not isinstance(dataset, str):
            raise PageFormatError("dataset must be a string")
        return cls(d["id"], dims, lines, dataset=dataset, diagnostics=tally, **extra)


# --- tasks ----------------------------------------------------------------------

@dataclass(frozen=True)
class TaskInstance:
    task_id: str
    page_id: str
    family: str
    output_format: str
    prompt: str
    reference: Any
    dims: ImageDims
    query: str | None = None
    region: Box | None = None
    granularity: str | None = None
    dataset: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown task family {self.family!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.family == "conditional_detection" and (self.query is None or self.output_format != "box"):
            raise ValueError("conditional detection needs a query and box output")
        if self.family == "localized_reading" and (self.region is None or not isinstance(self.reference, str)):
            raise ValueError("localized reading needs a region and a plain-text reference")

    @property
    def parse_format(self) -> str:
        """Output format the raw prediction is parsed as."""
        if self.family == "localized_reading":
            return "text"
        return self.output_format

    def reference_json(self) -> Any:
        if isinstance(self.reference, str):
            return self.reference
        return [r.to_dict() if isinstance(r, GroundedSpan) else r.as_list() for r in self.reference]

    def serialized_reference(self) -> str:
        """The reference as a model would emit it (used for self-consistency checks)."""
        ref = self.reference_json()
        return ref if isinstance(ref, str) else json.dumps(ref, ensure_ascii=False)

    def to_dict(self) -> dict:
        d: dict = {
            "task_id": self.task_id,
            "page_id": self.page_id,
            "family": self.family,
            "output_format": self.output_format,
            "prompt": self.prompt,
            "image": self.dims.to_dict(),
        }
        if self.query is not None:
            d["query"] = self.query
        if self.region is not None:
            d["region"] = self.region.as_list()
        if self.granularity is not None:
            d["granularity"] = self.granularity
        if self.dataset is not None:
            d["dataset"] = self.dataset
        d["reference"] = self.reference_json()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskInstance":
        dims = ImageDims.from_dict(d["image"])
        family, fmt = d["family"], d["output_format"]
        ref = d["reference"]
        if family == "localized_reading" or fmt in ("text", "text2d"):
            if not isinstance(ref, str):
                raise ValueError("plain-text task needs a string reference")
            reference: Any = ref
        elif fmt == "box":
            reference = tuple(Box(*r) for r in ref)
        else:
            reference = tuple(GroundedSpan(r["text"], Box(*r["bbox"])) for r in ref)
        region = Box(*d["region"]) if d.get("region") is not None else None
        return cls(d["task_id"], d["page_id"], family, fmt, d["prompt"], reference, dims,
                   query=d.get("query"), region=region, granularity=d.get("granularity"),
                   dataset=d.get("dataset"))


# --- seeding and prompts ----------------------------------------------------------

def derive_seed(seed: int, *parts: Any) -> int:
    """Stable 64-bit seed from a base seed and any identifying parts."""
    h = hashlib.sha256(repr((seed,) + parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


@dataclass(frozen=True)
class TemplateBank:
    templates: dict
    determiners: tuple
    nouns: tuple

    def for_task(self, family: str, output_format: str) -> list:
        key = f"{family}/{output_format}"
        found = self.templates.get(key) or []
        if not found:
            raise KeyError(f"template bank has no templates for {key}")
        return list(found)

    @classmethod
    def from_json(cls, text: str) -> "TemplateBank":
        d = json.loads(text)
        return cls({k: tuple(v) for k, v in d["templates"].items()},
                   tuple(d["determiners"]), tuple(d["nouns"]))


@lru_cache(maxsize=None)
def default_bank() -> TemplateBank:
    return TemplateBank.from_json(
        resources.files("groundocr.data").joinpath("templates.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def system_prompt() -> str:
    """The system prompt shipped for model harnesses, verbatim."""
    return resources.files("groundocr.data").joinpath("system_prompt.txt").read_text(encoding="utf-8")


def render_prompt(task: TaskInstance, templates: TemplateBank | None = None, seed: int = 0) -> str:
    """Pick a template for the task's (family, format) and fill it in.

    The template, determiner and noun are drawn uniformly with a generator
    seeded from ``seed`` and the task id.
    """
    bank = templates or default_bank()
    rng = random.Random(derive_seed(seed, task.task_id, "prompt"))
    template = rng.choice(bank.for_task(task.family, task.output_format))
    image = f"{rng.choice(bank.determiners)} {rng.choice(bank.nouns)}"
    values = {"FORMAT": task.output_format, "IMAGE": image,
              "UNIT": (task.granularity or "lines").upper(), "q": task.query or ""}
    if task.region is not None:
        values.update(zip(("x1", "y1", "x2", "y2"), task.region.as_list()))
    return template.format_map(values)


def _finish(task: TaskInstance, bank: TemplateBank | None, seed: int) -> TaskInstance:
    prompt = render_prompt(task, bank, seed)
    return TaskInstance(task.task_id, task.page_id, task.family, task.output_format, prompt,
                        task.reference, task.dims, task.query, task.region, task.granularity,
                        task.dataset)


def _task(page: PageRecord, task_id: str, family: str, fmt: str, reference, **kw) -> TaskInstance:
    return TaskInstance(task_id, page.id, family, fmt, "", reference, page.dims,
                        dataset=page.dataset, **kw)


# --- builders -------------------------------------------------------------------

def reading_text(spans: Sequence[GroundedSpan]) -> str:
    texts = (normalize(s.text) for s in e2e_reading_order(spans))
    return "\n".join(t for t in texts if t)


def build_reading_tasks(page: PageRecord, formats: Iterable[str], seed: int = 0,
                        bank: TemplateBank | None = None) -> list:
    tasks = []
    for fmt in formats:
        if fmt not in READING_FORMATS:
            raise ValueError(f"not a reading format: {fmt!r}")
        if fmt == "text":
            ref: Any = reading_text(page.lines)
        elif fmt == "text2d":
            ref = render_text2d(page.lines, page.dims)
        else:
            ref = page.granularity(fmt)
        tasks.append(_finish(_task(page, f"{page.id}/reading/{fmt}", "reading", fmt, ref), bank, seed))
    return tasks


def build_detection_tasks(page: PageRecord, granularity: str = "lines", seed: int = 0,
                          bank: TemplateBank | None = None) -> TaskInstance:
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    boxes = tuple(s.bbox for s in page.granularity(granularity))
    task = _task(page, f"{page.id}/detection/{granularity}", "detection", "box", boxes,
                 granularity=granularity)
    return _finish(task, bank, seed)


def conditional_reference(lines: Sequence[GroundedSpan], query: str) -> tuple:
    """Boxes of every line whose normalized text contains the normalized query."""
    q = normalize(query)
    return tuple(s.bbox for s in lines if q and q in normalize(s.text))


def query_candidates(lines: Sequence[GroundedSpan], max_words: int = MAX_QUERY_WORDS) -> list:
    """All distinct word-aligned substrings of 1..max_words words, sorted."""
    found = set()
    for s in lines:
        words = normalize(s.text).split(" ")
        for n in range(1, max_words + 1):
            for k in range(len(words) - n + 1):
                q = " ".join(words[k:k + n])
                if q:
                    found.add(q)
    return sorted(found)


def _negative_query(rng: random.Random, normalized: list, pool: list, taken: set) -> str | None:
    for attempt in range(200):
        if pool and attempt < 100:
            base = list(rng.choice(pool))
            base[rng.randrange(len(base))] = rng.choice(string.ascii_letters)
            q = "".join(base)
        else:
            q = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(6, 10)))
        q = normalize(q)
        if q and q not in taken and not any(q in t for t in normalized):
            return q
    return None


def build_conditional_tasks(page: PageRecord, n_positive: int, n_negative: int, seed: int = 0,
                            bank: TemplateBank | None = None) -> list:
    """Queries sampled from line text (positives) plus absent strings (negatives)."""
    rng = random.Random(derive_seed(seed, page.id, "conditional_detection"))
    pool = query_candidates(page.lines)
    positives = rng.sample(pool, min(n_positive, len(pool)))
    if len(positives) < n_positive:
        logger.warning("page %s: only %d of %d positive queries available",
                       page.id, len(positives), n_positive)
    normalized = [normalize(s.text) for s in page.lines]
    taken = set(positives)
    negatives = []
    for _ in range(n_negative):
        q = _negative_query(rng, normalized, pool, taken)
        if q is None:
            logger.warning("page %s: could not find an absent query", page.id)
            break
        taken.add(q)
        negatives.append(q)

    tasks = []
    for k, q in enumerate(positives + negatives):
        kind = "pos" if k < len(positives) else "neg"
        task = _task(page, f"{page.id}/conditional_detection/{kind}{k}", "conditional_detection",
                     "box", conditional_reference(page.lines, q), query=q, granularity="lines")
        tasks.append(_finish(task, bank, seed))
    return tasks


def select_blocks(spans: Sequence[GroundedSpan], region: Box, rule: str = "iou",
                  threshold: float = 0.5) -> list:
    """Blocks read for a region: IoU with it (or coverage by it) at least ``threshold``."""
    if rule == "iou":
        return [s for s in spans if iou(s.bbox, region) >= threshold]
    if rule == "coverage":
        return [s for s in spans if coverage(s.bbox, region) >= threshold]
    raise ValueError(f"rule must be one of {SELECTION_RULES}, got {rule!r}")


def localized_reference(spans: Sequence[GroundedSpan], region: Box, rule: str = "iou",
                        threshold: float = 0.5) -> str:
    return reading_text(select_blocks(spans, region, rule, threshold))


def make_localized_task(page: PageRecord, region: Box, granularity: str = "lines",
                        rule: str = "iou", threshold: float = 0.5, seed: int = 0,
                        bank: TemplateBank | None = None, task_id: str | None = None) -> TaskInstance:
    spans = page.granularity(granularity)
    ref = localized_reference(spans, region, rule, threshold)
    tid = task_id or f"{page.id}/localized_reading/{granularity}/{'_'.join(map(str, region))}"
    task = _task(page, tid, "localized_reading", granularity, ref, region=region,
                 granularity=granularity)
    return _finish(task, bank, seed)


def build_localized_tasks(page: PageRecord, granularity: str = "lines", n: int = 1, seed: int = 0,
                          rule: str = "iou", threshold: float = 0.5,
                          bank: TemplateBank | None = None) -> list:
    """Regions are ground-truth boxes of ``granularity`` sampled without replacement."""
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    spans = page.granularity(granularity)
    rng = random.Random(derive_seed(seed, page.id, "localized_reading", granularity))
    picks = sorted(rng.sample(range(len(spans)), min(n, len(spans))))
    return [
        make_localized_task(page, spans[k].bbox, granularity, rule, threshold, seed, bank,
                            task_id=f"{page.id}/localized_reading/{granularity}/{k}")
        for k in picks
    ]


@dataclass(frozen=True)
class TaskPlan:
    """What to generate for every page of a corpus."""

    families: tuple = FAMILIES
    reading_formats: tuple = ("text", "text2d", "lines")
    detection_granularities: tuple = ("lines",)
    localized_granularities: tuple = ("lines",)
    n_positive: int = 2
    n_negative: int = 1
    n_localized: int = 2
    rule: str = "iou"
    threshold: float = 0.5


def build_page_tasks(page: PageRecord, plan: TaskPlan = TaskPlan(), seed: int = 0,
                     bank: TemplateBank | None = None) -> list:
    """All tasks for one page, in a fixed family order.

    Formats or granularities the page is not annotated for are skipped.
    """
    tasks: list = []
    for family in plan.families:
        if family not in FAMILIES:
            raise ValueError(f"unknown task family {family!r}")
        if family == "reading":
            fmts = [f for f in plan.reading_formats if f != "paragraphs" or page.paragraphs is not None]
            tasks += build_reading_tasks(page, fmts, seed, bank)
        elif family == "detection":
            for g in plan.detection_granularities:
                if getattr(page, g) is not None:
                    tasks.append(build_detection_tasks(page, g, seed, bank))
        elif family == "conditional_detection":
            tasks += build_conditional_tasks(page, plan.n_positive, plan.n_negative, seed, bank)
        else:
            for g in plan.localized_granularities:
                if getattr(page, g) is not None:
                    tasks += build_localized_tasks(page, g, plan.n_localized, seed,
                                                   plan.rule, plan.threshold, bank)
    return tasks
