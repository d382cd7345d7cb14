"""Rendering line boxes as layout-preserving plain text.

Run: python tutorials/03_text2d_layout.py
"""
from groundocr import Box, GroundedSpan, ImageDims, render_text2d
from groundocr.text2d import Text2DConfig, estimate_layout, order_lines_2d

lines = [
    GroundedSpan("INVOICE", Box(40, 10, 110, 26)),
    GroundedSpan("No. 17", Box(300, 12, 350, 24)),
    GroundedSpan("Item", Box(10, 60, 50, 74)),
    GroundedSpan("Price", Box(300, 61, 350, 75)),
    GroundedSpan("Tea — green", Box(10, 80, 120, 94)),
    GroundedSpan("2.50", Box(310, 81, 350, 95)),
    GroundedSpan("Total", Box(10, 150, 60, 164)),
    GroundedSpan("2.50", Box(310, 150, 350, 164)),
]
dims = ImageDims(400, 200)

# Page-wide statistics pick the grid scale.
stats = estimate_layout(lines, dims)
print(stats)

# Rows come from vertical centers; within a row, left to right.
print([s.text for s in order_lines_2d(lines, stats)])

print(render_text2d(lines, dims))
print("-" * 40)

# The constants are pinned in one config record. Fewer blank lines:
print(render_text2d(lines, dims, Text2DConfig(max_blank_lines=1)))
