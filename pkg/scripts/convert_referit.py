#!/usr/bin/env python3
"""Convert ReferItGame (refclef) referring expressions to the query TSV.

Expects the `refer` data layout for the refclef dataset:
  --refs FILE        refs pickle (e.g. refs(berkeley).p) with per-ref split,
                     sentences and annotation id
  --instances FILE   instances.json with images (file_name, width, height)
                     and annotations (id, image_id, bbox [x, y, w, h])
  --split NAME       which refs to keep (default: test)
  --out FILE         query TSV

Every sentence of every split ref becomes one query; bbox floats are rounded
outward to max-exclusive integer pixels. ReferIt has no phrase-type
categories, so the category column stays empty.
"""

import argparse
import json
import math
import pickle
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--refs", required=True)
    ap.add_argument("--instances", required=True)
    ap.add_argument("--split", default="test")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    with open(args.refs, "rb") as fh:
        refs = pickle.load(fh)
    with open(args.instances, encoding="utf-8") as fh:
        instances = json.load(fh)
    images = {im["id"]: im for im in instances["images"]}
    anns = {ann["id"]: ann for ann in instances["annotations"]}

    import csv

    n_rows = 0
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for ref in refs:
            if ref.get("split") != args.split:
                continue
            ann = anns[ref["ann_id"]]
            image = images[ref["image_id"]]
            width, height = int(image["width"]), int(image["height"])
            x, y, w, h = ann["bbox"]
            x0 = max(0, int(math.floor(x)))
            y0 = max(0, int(math.floor(y)))
            x1 = min(width, max(x0 + 1, int(math.ceil(x + w))))
            y1 = min(height, max(y0 + 1, int(math.ceil(y + h))))
            image_id = str(image.get("file_name", image["id"])).removesuffix(".jpg")
            for sent in ref["sentences"]:
                phrase = sent["sent"].strip() or sent.get("raw", "").strip()
                if not phrase:
                    continue
                writer.writerow(
                    [image_id, width, height, phrase, "", f"{x0},{y0},{x1},{y1}"]
                )
                n_rows += 1
    print(f"wrote {n_rows} queries to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
