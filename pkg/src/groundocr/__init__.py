"""Evaluation and task construction for grounded OCR.

The package scores page transcriptions, line/paragraph detections and
text-with-box outputs, and builds seeded task sets from annotated pages.
"""
from .geometry import Box, GroundedSpan, ImageDims, InvalidGeometry, iou
from .textnorm import normalize, normalize_2d
from .textmetrics import cer, levenshtein, wer
from .detmatch import DetectionScores, Matching, assign, detection_scores, match_boxes
from .text2d import DEFAULT_CONFIG, Text2DConfig, render_text2d
from .e2emetrics import cer_e2e, mcer_at
from .outparse import ParseKind, ParsedOutput, parse_prediction, repair
from .taskgen import PageRecord, TaskInstance, TaskPlan, build_page_tasks
from .scorer import TaskResult, build_report, composite, score_task

__version__ = "0.1.0"

__all__ = [
    "Box", "GroundedSpan", "ImageDims", "InvalidGeometry", "iou",
    "normalize", "normalize_2d", "cer", "levenshtein", "wer",
    "DetectionScores", "Matching", "assign", "detection_scores", "match_boxes",
    "DEFAULT_CONFIG", "Text2DConfig", "render_text2d", "cer_e2e", "mcer_at",
    "ParseKind", "ParsedOutput", "parse_prediction", "repair",
    "PageRecord", "TaskInstance", "TaskPlan", "build_page_tasks",
    "TaskResult", "build_report", "composite", "score_task",
]
