#!/usr/bin/env python3
"""Standalone whole-image baseline scorer. Deliberately self-contained:
no package imports, its own box arithmetic, so it can vouch for the engine.

Usage: baseline_accuracy_oracle.py QUERIES_TSV
Prints the accuracy of always predicting the full image, as a fraction.
"""

import csv
import sys


def main(path):
    total = 0
    hits = 0
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh, delimiter="\t"):
            if not row:
                continue
            width, height = int(row[1]), int(row[2])
            gts = [tuple(int(v) for v in t.split(",")) for t in row[5].split(";") if t]
            if not gts:
                continue
            # merge annotated boxes into their enclosing box
            gx0 = min(b[0] for b in gts)
            gy0 = min(b[1] for b in gts)
            gx1 = max(b[2] for b in gts)
            gy1 = max(b[3] for b in gts)
            # prediction is the whole image; intersection is the gt itself
            inter = (gx1 - gx0) * (gy1 - gy0)
            union = width * height
            total += 1
            if inter / union >= 0.5:
                hits += 1
    print(f"{hits}/{total} = {hits / total:.10f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
