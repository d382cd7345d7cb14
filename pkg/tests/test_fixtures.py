import random

import numpy as np

from groundocr.detmatch import iou_matrix
from groundocr.fixtures import STYLES, generate_pages, synthetic_page
from groundocr.geometry import coverage
from groundocr.taskgen import PageRecord


def test_pages_are_valid_and_non_overlapping():
    for page in generate_pages(1, 150):
        assert page.dataset in STYLES
        assert PageRecord.from_dict(page.to_dict()) == page
        boxes = [s.bbox for s in page.lines]
        overlap = iou_matrix(boxes, boxes) - np.eye(len(boxes))
        assert (overlap <= 0).all()
        for w in page.words:
            assert any(coverage(w.bbox, s.bbox) == 1.0 for s in page.lines)
        for para in page.paragraphs:
            assert para.text


def test_generation_is_per_index():
    a = list(generate_pages(4, 10))
    b = list(generate_pages(4, 5))
    assert a[:5] == b
    assert synthetic_page(random.Random(1), "x", "form") == synthetic_page(random.Random(1), "x", "form")
