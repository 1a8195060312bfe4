#!/usr/bin/env python3
"""Convert Flickr30kEntities annotations to the engine's query TSV.

Inputs (from the public Flickr30kEntities release):
  --annotations DIR   per-image XML files (box coordinates, image size)
  --sentences DIR     per-image sentence files with [/EN#id/type phrase] markup
  --split FILE        image ids (one per line) selecting the evaluation split
  --out FILE          query TSV

Protocol notes:
  - every phrase occurrence in every caption of a split image yields one
    query, provided at least one box is annotated for its entity id
    ("notvisual" and box-less entities are skipped);
  - multiple boxes for one entity stay separate in the TSV; the evaluator
    merges them to their union at scoring time;
  - XML boxes are 1-based with inclusive corners and are converted to
    0-based, max-exclusive pixel coordinates;
  - the first listed entity type becomes the category column.
"""

import argparse
import csv
import re
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

CHUNK = re.compile(r"\[/EN#(\d+)(/[^\s\]]+)?\s+([^\]]*)\]")

CATEGORIES = {
    "people", "clothing", "bodyparts", "animals",
    "vehicles", "instruments", "scene", "other",
}


def parse_annotation(path: Path):
    root = ET.parse(path).getroot()
    size = root.find("size")
    width = int(size.find("width").text)
    height = int(size.find("height").text)
    boxes: dict[str, list[tuple[int, int, int, int]]] = {}
    for obj in root.iter("object"):
        bndbox = obj.find("bndbox")
        if bndbox is None:
            continue
        x0 = int(float(bndbox.find("xmin").text)) - 1
        y0 = int(float(bndbox.find("ymin").text)) - 1
        x1 = int(float(bndbox.find("xmax").text))
        y1 = int(float(bndbox.find("ymax").text))
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(width, x1), min(height, y1)
        if x0 >= x1 or y0 >= y1:
            continue
        for name in obj.iter("name"):
            boxes.setdefault(name.text.strip(), []).append((x0, y0, x1, y1))
    return width, height, boxes


def parse_sentences(path: Path):
    """(entity_id, types, phrase) per phrase occurrence, caption order."""
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        for ent_id, types, phrase in CHUNK.findall(line):
            type_list = [t for t in (types or "").strip("/").split("/") if t]
            out.append((ent_id, type_list, phrase.strip()))
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--annotations", required=True, type=Path)
    ap.add_argument("--sentences", required=True, type=Path)
    ap.add_argument("--split", required=True, type=Path)
    ap.add_argument("--out", required=True, type=Path)
    args = ap.parse_args()

    image_ids = [
        line.strip().removesuffix(".jpg")
        for line in args.split.read_text().splitlines()
        if line.strip()
    ]
    n_rows = 0
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for image_id in image_ids:
            ann = args.annotations / f"{image_id}.xml"
            sen = args.sentences / f"{image_id}.txt"
            if not ann.exists() or not sen.exists():
                print(f"warning: missing files for {image_id}", file=sys.stderr)
                continue
            width, height, boxes = parse_annotation(ann)
            for ent_id, types, phrase in parse_sentences(sen):
                if "notvisual" in types or ent_id not in boxes or not phrase:
                    continue
                category = next((t for t in types if t in CATEGORIES), "other")
                writer.writerow(
                    [
                        image_id,
                        width,
                        height,
                        phrase,
                        category,
                        ";".join(",".join(map(str, b)) for b in boxes[ent_id]),
                    ]
                )
                n_rows += 1
    print(f"wrote {n_rows} queries to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
