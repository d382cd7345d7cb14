"""Character and word error rates on normalized text.

Run: python tutorials/01_text_metrics.py
"""
from groundocr import cer, levenshtein, normalize, normalize_2d, wer
from groundocr.textmetrics import word_align_counts

# Every metric normalizes first: NFKC, a small quote/dash/bullet table,
# whitespace collapsed. Case is left alone.
print(repr(normalize("  “Total” — ﬁnal  amount  ")))

# The 2-D variant keeps newlines and inner spacing, trimming only row ends.
print(repr(normalize_2d("Name:   Ada   \nRole:  ‘eng’  \n\n")))

# Raw edit distance is plain Levenshtein on code points.
print("kitten -> sitting:", levenshtein("kitten", "sitting"))

# CER divides by the longer of the two strings, so it stays in [0, 1].
print("cer:", cer("invoice tota1", "Invoice total"))
print("cer, one side empty:", cer("", "anything"))

# WER is (S + D + I) / N and is not clipped; extra words can push it past 1.
print("wer:", wer("the quick brown fox", "the quick fox"))
print("counts (S, D, I, N):", word_align_counts("x", "a b").as_tuple())
print("wer with insertions:", wer("a b c d e", "a"))
