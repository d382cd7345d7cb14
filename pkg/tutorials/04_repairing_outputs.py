"""Turning messy model output into spans or boxes.

Run: python tutorials/04_repairing_outputs.py
"""
from groundocr import ImageDims, parse_prediction
from groundocr.outparse import extract_candidate, repair_text

dims = ImageDims(800, 600)

raw = """Sure! Here is what I found:
```json
[{'text': 'Total', box: [10, 20, 90, 40]},
 {"label": "2.50", "bbox": [600, 20, 9999, 40]},
```"""

candidate = extract_candidate(raw)
print(candidate)
text, notes = repair_text(candidate)
print(text)
for n in notes:
    print("  repair:", n)

parsed = parse_prediction(raw, "lines", dims)
print(parsed.kind.value, parsed.spans)
print("diagnostics:", parsed.diagnostics)

# Same output for a box-only task keeps just the boxes.
print(parse_prediction(raw, "box", dims).boxes)

# Prose where JSON was expected is Invalid and scores as maximal error.
bad = parse_prediction("I could not find any text.", "lines", dims)
print(bad.kind.value, bad.diagnostics)

# Outputs in 0-1000 normalized space can be rescaled on ingestion.
print(parse_prediction("[[0, 0, 500, 500]]", "box", dims, coords="normalized:1000").boxes)
