#!/usr/bin/env python3
"""Generate the frozen 200-query fixture used by the always-on baseline test.

Deterministic by construction (fixed seed); rerunning must reproduce the
committed tests/fixtures/whole_image_200.tsv byte for byte.
"""

import csv
import random
import sys
from pathlib import Path

SEED = 20190417
N_QUERIES = 200

CATEGORIES = [
    "people", "clothing", "bodyparts", "animals",
    "vehicles", "instruments", "scene", "other", "",
]
NOUNS = [
    "dog", "man", "woman", "guitar", "truck", "skyline", "jacket",
    "hand", "horse", "bench", "lamp", "kite", "boat", "drummer",
]
MODIFIERS = [
    "a", "the", "two", "small", "large", "blue", "red", "green",
    "striped", "old", "young", "wooden", "shiny",
]


def make_query(rng: random.Random):
    width = rng.randrange(60, 641)
    height = rng.randrange(60, 641)
    n_boxes = rng.choice([1, 1, 1, 2, 3])
    boxes = []
    for _ in range(n_boxes):
        bw = max(1, int(width * rng.uniform(0.08, 0.95)))
        bh = max(1, int(height * rng.uniform(0.08, 0.95)))
        x0 = rng.randrange(0, width - bw + 1)
        y0 = rng.randrange(0, height - bh + 1)
        boxes.append((x0, y0, x0 + bw, y0 + bh))
    phrase = " ".join(rng.sample(MODIFIERS, rng.randrange(1, 3)) + [rng.choice(NOUNS)])
    category = rng.choice(CATEGORIES)
    return width, height, phrase, category, boxes


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(
        __file__).resolve().parent.parent / "tests" / "fixtures" / "whole_image_200.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for i in range(N_QUERIES):
            width, height, phrase, category, boxes = make_query(rng)
            writer.writerow(
                [
                    f"fx{i:04d}",
                    width,
                    height,
                    phrase,
                    category,
                    ";".join(",".join(map(str, b)) for b in boxes),
                ]
            )
    print(f"wrote {N_QUERIES} queries to {out}")


if __name__ == "__main__":
    main()
