"""Scoring predictions and computing the composite score.

Run: python tutorials/06_scoring_a_model.py
"""
import random

from groundocr import build_report, composite, parse_prediction, score_task
from groundocr.fixtures import generate_pages
from groundocr.taskgen import build_page_tasks

rng = random.Random(0)


def noisy_model(task):
    """A stand-in model: usually echoes the reference, sometimes garbles it."""
    raw = task.serialized_reference()
    roll = rng.random()
    if roll < 0.1:
        return "Sorry, I cannot read this."
    if roll < 0.3 and isinstance(task.reference, str):
        return raw.replace("e", "c")
    return raw


results = []
for page in generate_pages(seed=1, n=40):
    for task in build_page_tasks(page, seed=1):
        parsed = parse_prediction(noisy_model(task), task.parse_format, task.dims)
        results.append(score_task(task, parsed))

report = build_report(results)
for family, metrics in report.macro.items():
    shown = {k: round(v, 3) for k, v in metrics.items() if k != "datasets"}
    print(f"{family:24s} {shown}")
print("composite (macro over datasets):", round(report.composite_macro, 4))
print("composite (micro over tasks):   ", round(report.composite_micro, 4))

# The composite on its own: four reading errors, then two F1 values.
print(round(composite([0.333, 0.522, 0.633, 0.530], 0.111, 0.285), 3))
