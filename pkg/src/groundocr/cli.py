"""Command-line harness: build tasks, score predictions, inspect outputs.

All files are JSON Lines (one record per line) except the report, which is a
single JSON document. Exit status is 0 on success, 1 for bad input and 2 for
internal errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

from .fixtures import generate_pages
from .outparse import COORD_MODES, OUTPUT_FORMATS, ParsedOutput, parse_prediction
from .scorer import TaskResult, build_report, score_task
from .taskgen import (FAMILIES, GRANULARITIES, READING_FORMATS, SELECTION_RULES,
                      MissingGranularity, PageFormatError, PageRecord, TaskInstance, TaskPlan,
                      build_page_tasks, system_prompt)
from .text2d import render_text2d
from .geometry import ImageDims

logger = logging.getLogger("groundocr")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported without a traceback and exit status 1."""


# --- file helpers ---------------------------------------------------------------

def read_jsonl(path: str) -> Iterator[tuple]:
    """Yield ``(line_number, record)``; blank lines are skipped."""
    try:
        fh = sys.stdin if path == "-" else open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def write_jsonl(path: str, records: Iterable[dict]) -> int:
    n = 0
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
            n += 1
    return n


def load_pages(path: str) -> list:
    pages, seen = [], set()
    for lineno, rec in read_jsonl(path):
        try:
            page = PageRecord.from_dict(rec)
        except PageFormatError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
        if page.id in seen:
            raise InputError(f"{path}:{lineno}: duplicate page id {page.id!r}")
        seen.add(page.id)
        if page.diagnostics:
            logger.info("%s:%d: %s", path, lineno, dict(page.diagnostics))
        pages.append(page)
    return pages


def load_manifest(path: str) -> tuple:
    """``{"seed": int, "files": [{"path": ..., "dataset": ...}, ...]}`` -> (pages, seed)."""
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = manifest["files"]
        seed = int(manifest.get("seed", 0))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad manifest ({exc})") from None
    pages, seen = [], set()
    base = Path(path).parent
    for entry in entries:
        entry = {"path": entry} if isinstance(entry, str) else entry
        file = str(base / entry["path"])
        for page in load_pages(file):
            if page.id in seen:
                raise InputError(f"{file}: page id {page.id!r} repeats across the manifest")
            seen.add(page.id)
            if entry.get("dataset") and page.dataset is None:
                page = PageRecord(page.id, page.dims, page.lines, page.paragraphs, page.words,
                                  entry["dataset"], page.diagnostics)
            pages.append(page)
    return pages, seed


def load_tasks(path: str) -> list:
    tasks, seen = [], set()
    for lineno, rec in read_jsonl(path):
        try:
            task = TaskInstance.from_dict(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: bad task record ({exc})") from None
        if task.task_id in seen:
            raise InputError(f"{path}:{lineno}: duplicate task_id {task.task_id!r}")
        seen.add(task.task_id)
        tasks.append(task)
    return tasks


def load_predictions(path: str) -> dict:
    preds: dict = {}
    for lineno, rec in read_jsonl(path):
        if not isinstance(rec, dict) or "task_id" not in rec or "raw_output" not in rec:
            raise InputError(f"{path}:{lineno}: prediction needs task_id and raw_output")
        if not isinstance(rec["raw_output"], str):
            raise InputError(f"{path}:{lineno}: raw_output must be a string")
        if rec["task_id"] in preds:
            raise InputError(f"{path}:{lineno}: duplicate prediction for {rec['task_id']!r}")
        preds[rec["task_id"]] = rec["raw_output"]
    return preds


def _pool_map(fn: Callable, items: list, workers: int) -> list:
    # results come back in input order regardless of completion order
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (workers * 4))))


# --- commands ---------------------------------------------------------------------

def _page_tasks(page: PageRecord, plan: TaskPlan, seed: int) -> list:
    try:
        return [t.to_dict() for t in build_page_tasks(page, plan, seed)]
    except MissingGranularity as exc:
        raise InputError(str(exc)) from None


def cmd_make_tasks(args) -> int:
    if args.manifest:
        pages, seed = load_manifest(args.manifest)
        if args.seed is not None:
            seed = args.seed
    else:
        pages, seed = load_pages(args.pages), args.seed or 0
    plan = TaskPlan(
        families=tuple(args.families),
        reading_formats=tuple(args.formats),
        detection_granularities=tuple(args.detection),
        localized_granularities=tuple(args.localized),
        n_positive=args.n_positive,
        n_negative=args.n_negative,
        n_localized=args.n_localized,
        rule=args.rule,
    )
    per_page = _pool_map(partial(_page_tasks, plan=plan, seed=seed), pages, args.workers)
    n = write_jsonl(args.out, (t for tasks in per_page for t in tasks))
    logger.info("wrote %d tasks for %d pages to %s", n, len(pages), args.out)
    return EXIT_OK


def _score_one(item: tuple, coords: str) -> dict:
    task, raw = item
    if raw is None:
        parsed = ParsedOutput.invalid("missing prediction")
    else:
        parsed = parse_prediction(raw, task.parse_format, task.dims, coords)
    return score_task(task, parsed).to_dict()


def score_files(tasks_path: str, preds_path: str, coords: str = "pixel", workers: int = 1) -> tuple:
    """Score a prediction file against a task file; returns (results, counts)."""
    tasks = load_tasks(tasks_path)
    preds = load_predictions(preds_path)
    known = {t.task_id for t in tasks}
    unknown = sorted(set(preds) - known)
    if unknown:
        logger.warning("%d predictions for unknown task ids, e.g. %s", len(unknown), unknown[0])
    items = [(t, preds.get(t.task_id)) for t in tasks]
    results = [TaskResult.from_dict(d)
               for d in _pool_map(partial(_score_one, coords=coords), items, workers)]
    counts = {
        "tasks": len(tasks),
        "missing_predictions": sum(1 for _, raw in items if raw is None),
        "invalid_predictions": sum(1 for r in results if r.parse_kind == "Invalid"),
        "unknown_predictions": len(unknown),
    }
    return results, counts


def write_report(path: str, report) -> None:
    try:
        Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def cmd_score(args) -> int:
    results, counts = score_files(args.tasks, args.predictions, args.coords, args.workers)
    write_jsonl(args.results, (r.to_dict() for r in results))
    report = build_report(results, counts)
    write_report(args.report, report)
    logger.info("composite %s over %d tasks (%d missing, %d invalid)", report.composite,
                counts["tasks"], counts["missing_predictions"], counts["invalid_predictions"])
    return EXIT_OK


def cmd_report(args) -> int:
    results = []
    for lineno, rec in read_jsonl(args.results):
        try:
            results.append(TaskResult.from_dict(rec))
        except (KeyError, TypeError) as exc:
            raise InputError(f"{args.results}:{lineno}: bad result record ({exc})") from None
    write_report(args.out, build_report(results, {"tasks": len(results)}))
    return EXIT_OK


def cmd_text2d(args) -> int:
    for page in load_pages(args.pages):
        if page.id == args.page_id:
            sys.stdout.write(render_text2d(page.lines, page.dims) + "\n")
            return EXIT_OK
    raise InputError(f"{args.pages}: no page with id {args.page_id!r}")


def cmd_repair(args) -> int:
    try:
        raw = sys.stdin.read() if args.input == "-" else Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{args.input}: {exc.strerror}") from None
    parsed = parse_prediction(raw, args.expect, ImageDims(args.width, args.height), args.coords)
    out: dict[str, Any] = {"kind": parsed.kind.value, "diagnostics": list(parsed.diagnostics)}
    if parsed.text is not None:
        out["text"] = parsed.text
    if parsed.spans is not None:
        out["value"] = [s.to_dict() for s in parsed.spans]
    if parsed.boxes is not None:
        out["value"] = [b.as_list() for b in parsed.boxes]
    sys.stdout.write(json.dumps(out, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_gen_fixtures(args) -> int:
    write_jsonl(args.out, (p.to_dict() for p in generate_pages(args.seed, args.n, args.max_lines)))
    return EXIT_OK


def cmd_echo_references(args) -> int:
    """Write each task's own reference as its prediction (a perfect model)."""
    tasks = load_tasks(args.tasks)
    write_jsonl(args.out, ({"task_id": t.task_id, "raw_output": t.serialized_reference()}
                           for t in tasks))
    return EXIT_OK


def cmd_system_prompt(args) -> int:
    sys.stdout.write(system_prompt())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groundocr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-tasks", help="build task records from page records")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pages", help="page records (JSONL)")
    src.add_argument("--manifest", help="corpus manifest (JSON)")
    p.add_argument("--out", required=True)
    p.add_argument("--families", nargs="+", choices=FAMILIES, default=list(FAMILIES))
    p.add_argument("--formats", nargs="+", choices=READING_FORMATS, default=["text", "text2d", "lines"])
    p.add_argument("--detection", nargs="+", choices=GRANULARITIES, default=["lines"])
    p.add_argument("--localized", nargs="+", choices=GRANULARITIES, default=["lines"])
    p.add_argument("--n-positive", type=int, default=2)
    p.add_argument("--n-negative", type=int, default=1)
    p.add_argument("--n-localized", type=int, default=2)
    p.add_argument("--rule", choices=SELECTION_RULES, default="iou",
                   help="localized-reading block selection rule")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_make_tasks)

    p = sub.add_parser("score", help="score predictions against tasks")
    p.add_argument("tasks")
    p.add_argument("predictions")
    p.add_argument("--results", required=True, help="per-task results (JSONL)")
    p.add_argument("--report", required=True, help="aggregate report (JSON)")
    p.add_argument("--coords", choices=COORD_MODES, default="pixel",
                   help="coordinate space of predicted boxes")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="rebuild the aggregate report from a results file")
    p.add_argument("results")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("text2d", help="print the text2d rendering of one page")
    p.add_argument("pages")
    p.add_argument("page_id")
    p.set_defaults(func=cmd_text2d)

    p = sub.add_parser("repair", help="parse and repair one raw model output")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--expect", choices=OUTPUT_FORMATS, default="lines")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--coords", choices=COORD_MODES, default="pixel")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("gen-fixtures", help="write synthetic page records")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--max-lines", type=int, default=40)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_fixtures)

    p = sub.add_parser("echo-references", help="write references as predictions")
    p.add_argument("tasks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_echo_references)

    p = sub.add_parser("system-prompt", help="print the system prompt asset")
    p.set_defaults(func=cmd_system_prompt)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"groundocr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
