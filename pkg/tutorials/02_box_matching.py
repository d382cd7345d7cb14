"""Matching predicted boxes to ground truth and scoring detection.

Run: python tutorials/02_box_matching.py
"""
import numpy as np

from groundocr import Box, assign, detection_scores, iou, match_boxes

gt = [Box(20, 0, 40, 10), Box(35, 0, 50, 10)]
pred = [Box(22, 0, 50, 10), Box(13, 0, 35, 10)]

for i, p in enumerate(pred):
    print(f"pred {i}:", [round(iou(p, g), 3) for g in gt])

# A greedy matcher takes the single best pair (pred 0, gt 0) and is then stuck.
# The assignment maximizes total IoU and finds both matches.
m = match_boxes(pred, gt, 0.5)
print("pairs:", m.pairs, "total IoU:", round(m.total, 3))

# Same on a raw weight matrix; ties go to the lexicographically smallest pairs.
print(assign(np.array([[0.6, 0.55], [0.55, 0.0]]), 0.5).pairs)
print(assign(np.full((2, 2), 0.5), 0.5).pairs)

s = detection_scores(pred, gt, 0.5)
print(f"tp={s.tp} fp={s.fp} fn={s.fn} P={s.precision:.2f} R={s.recall:.2f} F1={s.f1:.2f}")

# Empty sets have fixed conventions.
for preds, gts in (([], []), ([Box(0, 0, 1, 1)], []), ([], [Box(0, 0, 1, 1)])):
    s = detection_scores(preds, gts, 0.5)
    print(f"|P|={len(preds)} |G|={len(gts)}: P={s.precision} R={s.recall} F1={s.f1}")
