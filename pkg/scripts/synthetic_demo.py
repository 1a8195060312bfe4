#!/usr/bin/env python3
"""End-to-end demo on synthetic data; no datasets or model checkpoints needed.

Builds a world where the engine has real signal: each query names a synonym
of some detected object's label (embeddings place synonyms near their base
label), and the ground-truth box is a jittered copy of that object's box.
Then a sweep compares detector sets, similarity modes and strategies, so the
printed table shows concept selection genuinely beating unfiltered picks.

Usage: synthetic_demo.py [--out-dir DIR] [--images N] [--queries N] [--seed S]
"""

import argparse
import csv
import json
import random
from pathlib import Path

from groundcast import cli

LABELS = ["person", "dog", "cat", "car", "boat", "bench", "kite", "shirt"]
SYNONYMS = {
    "person": ["man", "woman", "dancer"],
    "dog": ["puppy", "hound"],
    "cat": ["kitten"],
    "car": ["vehicle", "sedan"],
    "boat": ["sailboat"],
    "bench": ["seat"],
    "kite": ["kite"],
    "shirt": ["jersey"],
}
SCENES = ["beach", "street", "forest"]
FILLER = ["a", "the", "two", "big", "small", "bright"]

SWEEP = """\
[cc_nofilter_random]
detectors = tfcoco
similarity = no_filter
strategy = random

[cc_nofilter_largest]
detectors = tfcoco
similarity = no_filter
strategy = largest

[cc_max_union]
detectors = tfcoco
similarity = w2v_max
strategy = union

[cc_oi_max_union]
detectors = tfcoco,tfoid
similarity = w2v_max
strategy = union

[cc_oi_pl_max_largest]
detectors = tfcoco,tfoid,places365
similarity = w2v_max
strategy = largest

[cc_oi_pl_avg_consensus]
detectors = tfcoco,tfoid,places365
similarity = w2v_avg
strategy = consensus

[cc_oi_pl_last_union]
detectors = tfcoco,tfoid,places365
similarity = w2v_last
strategy = union
"""


def write_embeddings(path: Path, rng: random.Random, dim: int = 24):
    def vec():
        return [rng.gauss(0, 1) for _ in range(dim)]

    rows = {}
    for label in LABELS + SCENES:
        base = vec()
        rows[label] = base
        for syn in SYNONYMS.get(label, []):
            rows.setdefault(syn, [b + rng.gauss(0, 0.15) for b in base])
    for word in FILLER:
        rows[word] = vec()
    with open(path, "w") as fh:
        fh.write(f"{len(rows)} {dim}\n")
        for token, values in rows.items():
            fh.write(token + " " + " ".join(f"{v:.5f}" for v in values) + "\n")


def jitter_box(rng, box, width, height, scale=0.15):
    x0, y0, x1, y1 = box
    w, h = x1 - x0, y1 - y0
    dx = int(rng.gauss(0, scale * w))
    dy = int(rng.gauss(0, scale * h))
    nx0 = min(max(0, x0 + dx), width - 2)
    ny0 = min(max(0, y0 + dy), height - 2)
    nx1 = max(nx0 + 1, min(width, x1 + dx))
    ny1 = max(ny0 + 1, min(height, y1 + dy))
    return [nx0, ny0, nx1, ny1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("demo_run"))
    ap.add_argument("--images", type=int, default=150)
    ap.add_argument("--queries", type=int, default=800)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    write_embeddings(out / "emb.txt", rng)

    def rand_box(width, height):
        x0 = rng.randrange(0, width - 20)
        y0 = rng.randrange(0, height - 20)
        return [x0, y0, x0 + rng.randrange(20, width - x0 + 1),
                y0 + rng.randrange(20, height - y0 + 1)]

    tfcoco, tfoid, places = [], [], []
    world = {}
    for i in range(args.images):
        image_id = f"demo{i:04d}"
        width, height = rng.randrange(320, 640), rng.randrange(240, 640)
        objects = [
            (rng.choice(LABELS), rand_box(width, height))
            for _ in range(rng.randrange(2, 7))
        ]
        world[image_id] = (width, height, objects)

        def noisy(dets, hit_rate):
            found = []
            for label, box in dets:
                if rng.random() < hit_rate:
                    found.append(
                        {"label": label,
                         "box": jitter_box(rng, box, width, height, 0.05),
                         "confidence": round(rng.uniform(0.2, 0.99), 3)}
                    )
            # plus some false positives
            for _ in range(rng.randrange(0, 3)):
                found.append({"label": rng.choice(LABELS),
                              "box": rand_box(width, height),
                              "confidence": round(rng.uniform(0.1, 0.6), 3)})
            return found

        tfcoco.append({"image_id": image_id, "width": width, "height": height,
                       "detections": noisy(objects, 0.7)})
        tfoid.append({"image_id": image_id, "width": width, "height": height,
                      "detections": noisy(objects, 0.5)})
        places.append({"image_id": image_id, "width": width, "height": height,
                       "detections": [{"label": rng.choice(SCENES),
                                       "confidence": round(rng.uniform(0.1, 0.9), 3)}]})

    for name, dump in (("tfcoco", tfcoco), ("tfoid", tfoid), ("places365", places)):
        (out / f"{name}.json").write_text(json.dumps(dump))

    with open(out / "queries.tsv", "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        ids = sorted(world)
        for _ in range(args.queries):
            image_id = rng.choice(ids)
            width, height, objects = world[image_id]
            label, box = rng.choice(objects)
            phrase = " ".join(
                rng.sample(FILLER, rng.randrange(0, 2))
                + [rng.choice(SYNONYMS[label])]
            )
            gt = jitter_box(rng, box, width, height, 0.08)
            writer.writerow([image_id, width, height, phrase, "",
                             ",".join(map(str, gt))])

    (out / "sweep.cfg").write_text(SWEEP)
    rc = cli.main([
        "sweep",
        "--sweep-file", str(out / "sweep.cfg"),
        "--embeddings", str(out / "emb.txt"),
        "--detections", f"tfcoco={out / 'tfcoco.json'}",
        "--detections", f"tfoid={out / 'tfoid.json'}",
        "--detections", f"places365={out / 'places365.json'}",
        "--queries", str(out / "queries.tsv"),
        "--out", str(out / "sweep.csv"),
    ])
    print(f"\nfull CSV: {out / 'sweep.csv'}")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
