import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from groundocr.geometry import Box, GroundedSpan, ImageDims
from groundocr.outparse import ParsedOutput, parse_prediction
from groundocr.scorer import (MetricAccumulator, TaskResult, aggregate, build_report, composite,
                              composite_exact, metric_names, score_task)
from groundocr.taskgen import PageRecord, TaskInstance, build_page_tasks

D = ImageDims(300, 200)
LINES = (GroundedSpan("alpha beta", Box(10, 10, 110, 25)), GroundedSpan("gamma", Box(10, 40, 60, 55)))


def task(family, fmt, reference, **kw):
    return TaskInstance(f"t/{family}/{fmt}", "p", family, fmt, "prompt", reference, D, **kw)


def test_metric_sets():
    assert metric_names("reading", "text") == ("cer", "wer")
    assert set(metric_names("reading", "lines")) == {"cer_e2e", "mcer", "f1", "recall", "precision"}
    assert metric_names("detection", "box") == ("f1", "recall", "precision")
    assert metric_names("localized_reading", "lines") == ("cer", "wer")


def test_perfect_structured_prediction():
    t = task("reading", "lines", LINES)
    r = score_task(t, parse_prediction(t.serialized_reference(), "lines", D))
    assert r.metrics == {"cer_e2e": 0.0, "mcer": 0.0, "f1": 1.0, "recall": 1.0, "precision": 1.0}


def test_invalid_is_maximal_error():
    t = task("reading", "lines", LINES)
    r = score_task(t, ParsedOutput.invalid("x"))
    assert r.metrics == {"cer_e2e": 1.0, "mcer": 1.0, "f1": 0.0, "recall": 0.0, "precision": 0.0}
    assert r.parse_kind == "Invalid"
    t = task("reading", "text", "abc")
    assert score_task(t, ParsedOutput.invalid("x")).metrics == {"cer": 1.0, "wer": 1.0}


def test_empty_conditional():
    t = task("conditional_detection", "box", (), query="zzz")
    assert score_task(t, parse_prediction("[]", "box", D)).metrics["f1"] == 1.0
    assert score_task(t, parse_prediction("[[1,1,5,5]]", "box", D)).metrics["f1"] == 0.0


def test_mismatched_parse_is_rejected():
    t = task("reading", "text", "abc")
    with pytest.raises(ValueError):
        score_task(t, parse_prediction("[[1,2,3,4]]", "box", D))


def test_localized_scored_as_text():
    t = task("localized_reading", "lines", "alpha beta", region=Box(10, 10, 110, 25))
    r = score_task(t, parse_prediction("alpha bet", t.parse_format, D))
    assert r.metrics == {"cer": 0.1, "wer": 0.5}


def _r(tid, family, fmt, metrics, dataset=None):
    return TaskResult(tid, family, fmt, metrics, "PlainText", (), dataset)


def test_aggregate_examples():
    one = _r("a", "reading", "text", {"cer": 0.2, "wer": 0.5})
    assert aggregate([one]) == {"reading_text": {"cer": 0.2, "wer": 0.5, "count": 1}}
    two = _r("b", "reading", "text", {"cer": 0.4, "wer": 0.5})
    assert aggregate([one, two])["reading_text"]["cer"] == pytest.approx(0.3)
    det = _r("c", "detection", "box", {"f1": 1.0})
    agg = aggregate([one, det])
    assert agg["reading_text"]["cer"] == 0.2 and agg["detection"] == {"f1": 1.0, "count": 1}


def test_composite_examples():
    assert round(composite([0.333, 0.522, 0.633, 0.530], 0.111, 0.285), 3) == 0.396
    assert composite([0, 0, 0, 0], 1, 1) == 1.0
    exact = composite_exact([Fraction(x) for x in ("0.202", "0.280", "0.147", "0.129")],
                            Fraction("0.787"), Fraction("0.882"))
    assert exact == Fraction("0.8185")
    with pytest.raises(ValueError):
        composite([0, 0, 0, 1.5], 1, 1)
    with pytest.raises(ValueError):
        composite([0, 0, 0], 1, 1)


unit = st.floats(0, 1)


@given(st.lists(unit, min_size=6, max_size=6), st.integers(0, 5), unit)
def test_composite_monotone(vals, k, new):
    errs, det, cond = vals[:4], vals[4], vals[5]
    base = composite_exact(errs, det, cond)
    v = list(vals)
    if k < 4:
        v[k] = min(v[k], new)
    else:
        v[k] = max(v[k], new)
    assert composite_exact(v[:4], v[4], v[5]) >= base


@given(st.lists(st.tuples(st.sampled_from(["reading_text", "detection"]), unit), max_size=30),
       st.integers(0, 30), st.randoms())
def test_accumulator_sharding(items, cut, r):
    whole = MetricAccumulator()
    left, right = MetricAccumulator(), MetricAccumulator()
    for k, (bucket, v) in enumerate(items):
        whole.add(bucket, {"m": v})
        (left if k < cut else right).add(bucket, {"m": v})
    assert left.merge(right).means() == whole.means() == right.merge(left).means()
    shuffled = items[:]
    r.shuffle(shuffled)
    again = MetricAccumulator()
    for bucket, v in shuffled:
        again.add(bucket, {"m": v})
    assert again.means() == whole.means()


def test_report_macro_and_micro():
    rows = []
    for ds, cer_vals in (("a", [0.0, 0.0, 0.0]), ("b", [1.0])):
        for k, v in enumerate(cer_vals):
            rows.append(_r(f"{ds}{k}", "reading", "text", {"cer": v, "wer": v}, ds))
    rep = build_report(rows)
    assert rep.families["reading_text"]["cer"] == 0.25
    assert rep.macro["reading_text"]["cer"] == 0.5
    assert rep.composite is None
    d = rep.to_dict()
    assert set(d["per_dataset"]) == {"a", "b"}


def test_perfect_predictions_score_one(pages):
    results = []
    for page in pages:
        for t in build_page_tasks(page, seed=2):
            parsed = parse_prediction(t.serialized_reference(), t.parse_format, t.dims)
            r = score_task(t, parsed)
            for name, v in r.metrics.items():
                assert v == (0.0 if name in ("cer", "wer", "mcer", "cer_e2e") else 1.0), (t.task_id, name)
            results.append(r)
    rep = build_report(results)
    assert rep.composite == 1.0 and rep.composite_micro == 1.0
