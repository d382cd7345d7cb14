"""Building evaluation tasks from annotated pages.

Run: python tutorials/05_building_tasks.py
"""
import json
import random

from groundocr.fixtures import synthetic_page
from groundocr.taskgen import TaskPlan, build_page_tasks, make_localized_task, system_prompt
from groundocr.geometry import union_box

page = synthetic_page(random.Random(7), "demo-page", style="form", max_lines=12)
print(page.id, page.dims, len(page.lines), "lines")

plan = TaskPlan(n_positive=2, n_negative=1, n_localized=1)
tasks = build_page_tasks(page, plan, seed=42)
for t in tasks:
    ref = t.reference if isinstance(t.reference, str) else f"{len(t.reference)} items"
    print(f"{t.task_id:48s} {t.output_format:6s} {ref!r:.40}")
    print("    prompt:", t.prompt)

# A task line as written by the harness.
print(json.dumps(tasks[0].to_dict(), ensure_ascii=False)[:200], "...")

# A user region covering two lines. IoU selects little; coverage selects both.
region = union_box([page.lines[0].bbox, page.lines[1].bbox])
for rule in ("iou", "coverage"):
    print(rule, repr(make_localized_task(page, region, rule=rule).reference))

print(system_prompt()[:120], "...")
