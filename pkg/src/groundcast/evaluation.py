"""Accuracy, upperbound and report pivots.

A prediction is correct when its IoU with the (union-merged) ground-truth
box reaches 0.5; the comparison is done in integer arithmetic so boundary
cases never depend on float rounding. The upperbound is the fraction of
queries for which any candidate box (optionally also the union of all
candidates) would have been correct.

Query file format: TSV with columns image_id, width, height, phrase,
category (may be empty) and ground-truth boxes as semicolon-separated
``x_min,y_min,x_max,y_max`` tuples (may be empty for localization-only
runs). Report output: CSV with columns config, category, count, accuracy,
upperbound_minus_union, upperbound_plus_union, percentages to 2 decimals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

from groundcast.colour_detector import COLOUR_TERMS
from groundcast.embedding_store import tokenize
from groundcast.geometry import BoundingBox, iou, iou_at_least, union_box

CATEGORIES = (
    "people", "clothing", "bodyparts", "animals",
    "vehicles", "instruments", "scene", "other",
)

IOU_CORRECT_NUM, IOU_CORRECT_DEN = 1, 2  # correct iff IoU >= 1/2


@dataclass
class Query:
    image_id: str
    width: int
    height: int
    phrase: str
    gt_boxes: list[BoundingBox] = field(default_factory=list)
    category: str | None = None

    @cached_property
    def merged_gt(self) -> BoundingBox:
        """Union of the annotated boxes; multi-box phrases score against it."""
        if not self.gt_boxes:
            raise ValueError(f"query {self.image_id!r}/{self.phrase!r} has no ground truth")
        return union_box(self.gt_boxes)

    @property
    def effective_category(self) -> str:
        return self.category if self.category in CATEGORIES else "other"


@dataclass
class EvalRecord:
    query: Query
    predicted: BoundingBox
    candidates: list[BoundingBox]
    iou: float
    correct: bool


def make_record(
    query: Query, predicted: BoundingBox, candidates: list[BoundingBox] | None = None
) -> EvalRecord:
    gt = query.merged_gt
    return EvalRecord(
        query=query,
        predicted=predicted,
        candidates=list(candidates or []),
        iou=iou(gt, predicted),
        correct=iou_at_least(gt, predicted, IOU_CORRECT_NUM, IOU_CORRECT_DEN),
    )


def accuracy(records: list[EvalRecord]) -> float:
    if not records:
        raise ValueError("no records")
    return sum(1 for r in records if r.correct) / len(records)


def upperbound(
    queries: list[Query],
    candidate_sets: list[list[BoundingBox]],
    include_union: bool = False,
) -> float:
    """Fraction of queries where some candidate would be correct.

    With include_union, the minimal box enclosing all candidates counts as
    one extra candidate (the "+union" column); an empty candidate set
    contributes 0 either way.
    """
    if len(queries) != len(candidate_sets):
        raise ValueError("queries and candidate sets differ in length")
    if not queries:
        raise ValueError("no records")
    hits = 0
    for query, candidates in zip(queries, candidate_sets):
        gt = query.merged_gt
        pool = list(candidates)
        if include_union and candidates:
            pool.append(union_box(candidates))
        if any(iou_at_least(gt, b, IOU_CORRECT_NUM, IOU_CORRECT_DEN) for b in pool):
            hits += 1
    return hits / len(queries)


def per_category_report(records: list[EvalRecord]) -> list[tuple[str, int, float]]:
    """(category, count, accuracy) rows in canonical order plus overall.

    Queries without a recognized category fall into "other"; categories with
    no records are omitted.
    """
    if not records:
        raise ValueError("no records")
    buckets: dict[str, list[EvalRecord]] = {}
    for record in records:
        buckets.setdefault(record.query.effective_category, []).append(record)
    rows = [
        (category, len(buckets[category]), accuracy(buckets[category]))
        for category in CATEGORIES
        if category in buckets
    ]
    rows.append(("overall", len(records), accuracy(records)))
    return rows


def colour_subset_filter(queries: list[Query]) -> list[Query]:
    """Queries whose phrase contains at least one of the 11 basic colour terms."""
    terms = set(COLOUR_TERMS)
    return [q for q in queries if any(tok in terms for tok in tokenize(q.phrase))]


def parse_box(text: str) -> BoundingBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"box {text!r} must be x_min,y_min,x_max,y_max")
    return BoundingBox(*(int(p) for p in parts))


def format_box(box: BoundingBox) -> str:
    return f"{box.x_min},{box.y_min},{box.x_max},{box.y_max}"


def load_queries(path) -> list[Query]:
    queries = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise ValueError(f"{path}: line {lineno}: expected 6 TSV columns, got {len(row)}")
            image_id, width_s, height_s, phrase, category, gt_field = row
            width, height = int(width_s), int(height_s)
            if width <= 0 or height <= 0:
                raise ValueError(f"{path}: line {lineno}: non-positive image size")
            gt_boxes = []
            for token in filter(None, (t.strip() for t in gt_field.split(";"))):
                box = parse_box(token)
                clamped = _clamp_gt(box, width, height)
                if clamped is None:
                    raise ValueError(
                        f"{path}: line {lineno}: ground-truth box {token} outside image"
                    )
                gt_boxes.append(clamped)
            queries.append(
                Query(
                    image_id=image_id,
                    width=width,
                    height=height,
                    phrase=phrase,
                    gt_boxes=gt_boxes,
                    category=category.strip() or None,
                )
            )
    return queries


def _clamp_gt(box: BoundingBox, width: int, height: int) -> BoundingBox | None:
    x0, y0 = max(0, box.x_min), max(0, box.y_min)
    x1, y1 = min(width, box.x_max), min(height, box.y_max)
    if x0 >= x1 or y0 >= y1:
        return None
    return BoundingBox(x0, y0, x1, y1)


def save_queries(queries: list[Query], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for q in queries:
            writer.writerow(
                [
                    q.image_id,
                    q.width,
                    q.height,
                    q.phrase,
                    q.category or "",
                    ";".join(format_box(b) for b in q.gt_boxes),
                ]
            )


def fmt_pct(value: float | None) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


@dataclass
class ReportRow:
    config: str
    category: str
    count: int
    accuracy: float
    upperbound_minus_union: float | None = None
    upperbound_plus_union: float | None = None


def build_report(
    config_name: str,
    records: list[EvalRecord],
    candidate_sets: list[list[BoundingBox]] | None = None,
) -> list[ReportRow]:
    """Per-category rows plus overall, with upperbounds when candidates exist."""
    rows = []
    with_candidates = candidate_sets is not None
    by_category: dict[str, list[int]] = {}
    for i, record in enumerate(records):
        by_category.setdefault(record.query.effective_category, []).append(i)
    order = [c for c in CATEGORIES if c in by_category] + ["overall"]
    for category in order:
        idx = by_category[category] if category != "overall" else list(range(len(records)))
        subset = [records[i] for i in idx]
        ub_minus = ub_plus = None
        if with_candidates:
            qs = [r.query for r in subset]
            cands = [candidate_sets[i] for i in idx]
            ub_minus = upperbound(qs, cands, include_union=False)
            ub_plus = upperbound(qs, cands, include_union=True)
        rows.append(
            ReportRow(
                config=config_name,
                category=category,
                count=len(subset),
                accuracy=accuracy(subset),
                upperbound_minus_union=ub_minus,
                upperbound_plus_union=ub_plus,
            )
        )
    return rows


def write_report_csv(rows: list[ReportRow], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["config", "category", "count", "accuracy",
             "upperbound_minus_union", "upperbound_plus_union"]
        )
        for row in rows:
            writer.writerow(
                [row.config, row.category, row.count, fmt_pct(row.accuracy),
                 fmt_pct(row.upperbound_minus_union), fmt_pct(row.upperbound_plus_union)]
            )


def format_report_table(rows: list[ReportRow]) -> str:
    header = ["config", "category", "count", "acc%", "ub-%", "ub+%"]
    cells = [header] + [
        [row.config, row.category, str(row.count), fmt_pct(row.accuracy),
         fmt_pct(row.upperbound_minus_union), fmt_pct(row.upperbound_plus_union)]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip()
        for line in cells
    ]
    return "\n".join(lines)
