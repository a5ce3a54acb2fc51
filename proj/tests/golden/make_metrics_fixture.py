"""Regenerates metrics_fixture.csv/.json.

The expected values are computed here, independently of the C++ code, and
are shared with the fine-tuning harness for its metric comparison.
"""
import json
import random

random.seed(20240611)
rows = [(round(random.random(), 6), random.randint(0, 1)) for _ in range(24)]
rows += [(0.5, 1), (0.5, 0)]  # 0.5 counts as positive

with open("metrics_fixture.csv", "w") as f:
    f.write("probability,label\n")
    for p, y in rows:
        f.write(f"{p},{y}\n")

tp = sum(1 for p, y in rows if p >= 0.5 and y == 1)
fp = sum(1 for p, y in rows if p >= 0.5 and y == 0)
fn = sum(1 for p, y in rows if p < 0.5 and y == 1)
tn = sum(1 for p, y in rows if p < 0.5 and y == 0)
precision = tp / (tp + fp)
recall = tp / (tp + fn)
out = {
    "threshold": 0.5,
    "tp": tp,
    "fp": fp,
    "fn": fn,
    "tn": tn,
    "accuracy": (tp + tn) / len(rows),
    "precision": precision,
    "recall": recall,
    "f1": 2 * precision * recall / (precision + recall),
}
with open("metrics_fixture.json", "w") as f:
    json.dump(out, f, indent=2)
