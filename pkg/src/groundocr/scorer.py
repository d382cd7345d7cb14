"""Per-task scoring, corpus aggregation and the composite grounded-OCR score."""
from __future__ import annotations

import math
from fractions import Fraction
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .detmatch import detection_scores
from .e2emetrics import cer_e2e, mcer_at
from .outparse import ParseKind, ParsedOutput
from .taskgen import TaskInstance
from .textmetrics import cer, wer

MATCH_THRESHOLD = 0.5

# (family key, metric) pairs feeding the composite, reading errors first
COMPOSITE_READING = (
    ("reading_text", "cer"),
    ("reading_text2d", "cer"),
    ("reading_lines", "cer_e2e"),
    ("localized_reading", "cer"),
)
COMPOSITE_DETECTION = (
    ("detection", "f1"),
    ("conditional_detection", "f1"),
)

ERROR_METRICS = ("cer", "wer", "mcer", "cer_e2e")
DETECTION_METRICS = ("f1", "recall", "precision")


def family_key(family: str, output_format: str) -> str:
    """Aggregation bucket: reading splits by format, other families do not."""
    if family == "reading":
        return f"reading_{output_format}"
    return family


def metric_names(family: str, output_format: str) -> tuple:
    if family == "reading" and output_format in ("text", "text2d"):
        return ("cer", "wer")
    if family == "reading":
        return ("cer_e2e", "mcer", "f1", "recall", "precision")
    if family in ("detection", "conditional_detection"):
        return ("f1", "recall", "precision")
    if family == "localized_reading":
        return ("cer", "wer")
    raise ValueError(f"unknown task family {family!r}")


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    family: str
    output_format: str
    metrics: dict
    parse_kind: str
    diagnostics: tuple = ()
    dataset: str | None = None

    @property
    def key(self) -> str:
        return family_key(self.family, self.output_format)

    def to_dict(self) -> dict:
        d = {"task_id": self.task_id, "family": self.family, "output_format": self.output_format,
             "metrics": dict(self.metrics), "parse_kind": self.parse_kind}
        if self.dataset is not None:
            d["dataset"] = self.dataset
        if self.diagnostics:
            d["diagnostics"] = list(self.diagnostics)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskResult":
        return cls(d["task_id"], d["family"], d["output_format"], dict(d["metrics"]),
                   d["parse_kind"], tuple(d.get("diagnostics", ())), d.get("dataset"))


def _maximal_error(names: Sequence[str]) -> dict:
    return {m: (1.0 if m in ERROR_METRICS else 0.0) for m in names}


def score_task(task: TaskInstance, parsed: ParsedOutput) -> TaskResult:
    """Score one parsed prediction against its task's reference.

    Invalid predictions get error 1 on every error metric and 0 on every
    detection metric.
    """
    names = metric_names(task.family, task.output_format)
    fmt = task.parse_format
    result = lambda metrics: TaskResult(task.task_id, task.family, task.output_format, metrics,
                                        parsed.kind.value, parsed.diagnostics, task.dataset)
    if parsed.is_invalid:
        return result(_maximal_error(names))

    if fmt in ("text", "text2d"):
        if parsed.kind is not ParseKind.PLAIN_TEXT:
            raise ValueError(f"{task.task_id}: {parsed.kind.value} output for a text task")
        return result({"cer": cer(parsed.text, task.reference, two_d=fmt == "text2d"),
                       "wer": wer(parsed.text, task.reference)})

    if fmt == "box":
        if parsed.kind is not ParseKind.BOXES:
            raise ValueError(f"{task.task_id}: {parsed.kind.value} output for a box task")
        d = detection_scores(list(parsed.boxes), list(task.reference), MATCH_THRESHOLD)
        return result({"f1": d.f1, "recall": d.recall, "precision": d.precision})

    if parsed.kind is not ParseKind.SPANS:
        raise ValueError(f"{task.task_id}: {parsed.kind.value} output for a span task")
    preds, refs = list(parsed.spans), list(task.reference)
    d = detection_scores([s.bbox for s in preds], [s.bbox for s in refs], MATCH_THRESHOLD)
    return result({
        "cer_e2e": cer_e2e(preds, refs, task.dims),
        "mcer": mcer_at(preds, refs, MATCH_THRESHOLD),
        "f1": d.f1, "recall": d.recall, "precision": d.precision,
    })


@dataclass
class MetricAccumulator:
    """Metric values and task counts per bucket; merging shards is exact and order-free."""

    sums: dict = field(default_factory=lambda: defaultdict(list))
    tasks: dict = field(default_factory=lambda: defaultdict(int))

    def add(self, bucket: str, metrics: Mapping[str, float]):
        self.tasks[bucket] += 1
        for name, value in metrics.items():
            self.sums[(bucket, name)].append(float(value))

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        out = MetricAccumulator()
        for src in (self, other):
            for k, v in src.sums.items():
                out.sums[k].extend(v)
            for k, v in src.tasks.items():
                out.tasks[k] += v
        return out

    def means(self) -> dict:
        out: dict = {}
        for (bucket, name), values in sorted(self.sums.items()):
            # fsum keeps the mean independent of the order shards were merged in
            out.setdefault(bucket, {})[name] = math.fsum(values) / len(values)
        for bucket, n in self.tasks.items():
            out.setdefault(bucket, {})["count"] = n
        return out


def aggregate(results: Iterable[TaskResult]) -> dict:
    """Unweighted mean of every metric per family bucket, plus task counts."""
    acc = MetricAccumulator()
    for r in results:
        acc.add(r.key, r.metrics)
    return acc.means()


def aggregate_by_dataset(results: Iterable[TaskResult]) -> dict:
    groups: dict = defaultdict(list)
    for r in results:
        groups[r.dataset or "default"].append(r)
    return {ds: aggregate(rs) for ds, rs in sorted(groups.items())}


def macro_means(per_dataset: Mapping[str, Mapping[str, Mapping[str, float]]]) -> dict:
    """Per-family means averaged over datasets (each dataset weighted equally)."""
    collected: dict = defaultdict(lambda: defaultdict(list))
    for fam in per_dataset.values():
        for bucket, metrics in fam.items():
            for name, value in metrics.items():
                if name != "count":
                    collected[bucket][name].append(value)
    out = {}
    for bucket, metrics in sorted(collected.items()):
        out[bucket] = {name: math.fsum(v) / len(v) for name, v in sorted(metrics.items())}
        out[bucket]["datasets"] = len(next(iter(metrics.values())))
    return out


def composite_exact(reading_errors: Sequence, detection_f1, conditional_f1) -> Fraction:
    """Composite as an exact rational.

    Inputs may be floats, ints, Fractions or Decimals; each is converted
    exactly, so decimal inputs such as ``Fraction("0.202")`` stay exact.
    """
    if len(reading_errors) != 4:
        raise ValueError(f"expected 4 reading errors, got {len(reading_errors)}")
    values = [Fraction(v) for v in list(reading_errors) + [detection_f1, conditional_f1]]
    for v in values:
        if not (0 <= v <= 1):
            raise ValueError(f"composite inputs must lie in [0, 1], got {float(v)}")
    scores = [1 - e for e in values[:4]] + values[4:]
    return sum(scores, Fraction(0)) / len(scores)


def composite(reading_errors: Sequence[float], detection_f1: float, conditional_f1: float) -> float:
    """Mean of the four reading scores ``1 - error`` and the two detection F1 values.

    Reading errors are, in order: page ``text`` CER, ``text2d`` CER, ``lines``
    CER_e2e and localized-reading CER.

    >>> round(composite([0.333, 0.522, 0.633, 0.530], 0.111, 0.285), 3)
    0.396
    """
    # exact rational mean, rounded once, so boundary values do not drift
    return float(composite_exact(reading_errors, detection_f1, conditional_f1))


def composite_from_means(means: Mapping[str, Mapping[str, float]]) -> float | None:
    """Composite from per-family means; ``None`` if an ingredient is missing."""
    try:
        errors = [means[b][m] for b, m in COMPOSITE_READING]
        det, cond = (means[b][m] for b, m in COMPOSITE_DETECTION)
    except KeyError:
        return None
    return composite(errors, det, cond)


@dataclass(frozen=True)
class CompositeReport:
    families: dict
    per_dataset: dict
    macro: dict
    composite_macro: float | None
    composite_micro: float | None
    counts: dict = field(default_factory=dict)

    @property
    def composite(self) -> float | None:
        return self.composite_macro

    def to_dict(self) -> dict:
        return {
            "composite": self.composite_macro,
            "composite_macro": self.composite_macro,
            "composite_micro": self.composite_micro,
            "composite_ingredients": [f"{b}.{m}" for b, m in COMPOSITE_READING + COMPOSITE_DETECTION],
            "families": self.families,
            "macro_over_datasets": self.macro,
            "per_dataset": self.per_dataset,
            "counts": self.counts,
        }


def build_report(results: Sequence[TaskResult], counts: Mapping[str, int] | None = None) -> CompositeReport:
    """Per-family (micro), per-dataset and macro-over-dataset means plus composites."""
    families = aggregate(results)
    per_dataset = aggregate_by_dataset(results)
    macro = macro_means(per_dataset)
    return CompositeReport(families, per_dataset, macro, composite_from_means(macro),
                           composite_from_means(families), dict(counts or {}))
