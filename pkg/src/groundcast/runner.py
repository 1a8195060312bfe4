"""End-to-end localization runs: load inputs, process queries, write predictions.

A run is (detector set, similarity mode, strategy) plus consensus settings
and a seed. Detector dumps are per-detector files merged by image id; the
tfcoco20 detector is a tfcoco dump tagged tfcoco20, reduced to the VOC-20
category subset at ingest. Queries referencing images with no detections
fall back to the whole image with a warning rather than failing, so
dataset-scale runs survive partial dumps.

The predictions file is TSV: image_id, query_index (0-based position in the
query file), predicted box, chosen concept label ("-" on fallback), score,
strategy, and the candidate boxes the similarity mode exposed (semicolon
separated; the upperbound columns of reports are computed from these).
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from groundcast import concept_selection, detection_ingest, spell_correct
from groundcast.concept_selection import SimilarityMode
from groundcast.detection_ingest import DETECTOR_IDS, Detection, ImageDetections
from groundcast.embedding_store import EmbeddingTable, load_table
from groundcast.evaluation import Query, format_box, parse_box
from groundcast.geometry import BoundingBox, union_box
from groundcast.localization import (
    ConsensusConfig,
    Prediction,
    Strategy,
    derive_seed,
    localize_detailed,
    strategy_confidence,
    strategy_largest,
    strategy_random,
)

log = logging.getLogger("groundcast")

DEFAULT_CONFIDENCE_THRESHOLD = 0.1


@dataclass
class RunConfig:
    detectors: set[str] = field(default_factory=lambda: set(DETECTOR_IDS))
    similarity: SimilarityMode = SimilarityMode.W2V_MAX
    strategy: Strategy = Strategy.UNION
    consensus: ConsensusConfig = field(default_factory=ConsensusConfig)
    spell_correct: bool = True
    seed: int = 0
    confidence_thresholds: dict[str, float] = field(
        default_factory=lambda: {d: DEFAULT_CONFIDENCE_THRESHOLD for d in DETECTOR_IDS}
    )
    category_subset: set[str] = field(
        default_factory=lambda: set(detection_ingest.VOC20_LABELS)
    )

    def validate(self):
        unknown = self.detectors - DETECTOR_IDS
        if unknown:
            raise ValueError(f"unknown detector ids: {sorted(unknown)}")
        if (
            self.strategy is Strategy.CONSENSUS
            and self.similarity is SimilarityMode.NO_FILTER
        ):
            raise ValueError("consensus strategy requires a similarity mode")


@dataclass
class PredictionRow:
    image_id: str
    query_index: int
    box: BoundingBox
    concept: str | None
    score: float | None
    strategy: str
    candidates: list[BoundingBox] = field(default_factory=list)


def load_detection_files(
    files: list[tuple[str, str]],
    config: RunConfig,
) -> tuple[dict[str, ImageDetections], int]:
    """Merge per-detector dumps into one ImageDetections per image.

    `files` pairs each path with its detector id. Returns the merged map and
    the count of degenerate boxes dropped at ingest.
    """
    merged: dict[str, ImageDetections] = {}
    dropped = 0
    for detector_id, path in files:
        if detector_id not in DETECTOR_IDS:
            raise ValueError(f"unknown detector_id {detector_id!r} for {path}")
        load = detection_ingest.load_detections(path, default_detector=detector_id)
        dropped += load.dropped
        for img in load.images:
            if img.image_id in merged:
                base = merged[img.image_id]
                if (base.width, base.height) != (img.width, img.height):
                    raise ValueError(
                        f"image {img.image_id!r}: size mismatch across dumps "
                        f"({base.width}x{base.height} vs {img.width}x{img.height})"
                    )
                base.detections.extend(img.detections)
            else:
                merged[img.image_id] = img
    for img in merged.values():
        img.detections = _prepare(img, config).detections
    return merged, dropped


def _prepare(img: ImageDetections, config: RunConfig) -> ImageDetections:
    """Detector selection, VOC subsetting for tfcoco20, confidence thresholds."""
    selected = ImageDetections(
        img.image_id,
        img.width,
        img.height,
        [d for d in img.detections if d.detector_id in config.detectors],
    )
    if "tfcoco20" in config.detectors:
        in_subset = detection_ingest.subset_categories(
            ImageDetections(
                img.image_id, img.width, img.height,
                [d for d in selected.detections if d.detector_id == "tfcoco20"],
            ),
            config.category_subset,
        )
        selected.detections = [
            d for d in selected.detections if d.detector_id != "tfcoco20"
        ] + in_subset.detections
    return detection_ingest.threshold_confidence(selected, config.confidence_thresholds)


class Engine:
    """Per-run state shared across queries; immutable once built."""

    def __init__(
        self,
        config: RunConfig,
        table: EmbeddingTable | None,
        images: dict[str, ImageDetections],
    ):
        config.validate()
        if table is None and images and config.similarity is not SimilarityMode.NO_FILTER:
            raise ValueError(
                f"similarity mode {config.similarity.value} needs an embedding table"
            )
        self.config = config
        self.table = table
        self.images = images
        self.corrector = spell_correct.correct if config.spell_correct else None
        self._groups_cache: dict[str, list] = {}
        self._size_warned: set[str] = set()

    def _groups(self, image_id: str):
        if image_id not in self._groups_cache:
            self._groups_cache[image_id] = detection_ingest.build_concept_groups(
                self.images[image_id], self.table, self.corrector
            )
        return self._groups_cache[image_id]

    def run_query(self, index: int, query: Query) -> PredictionRow:
        config = self.config
        whole = BoundingBox(0, 0, query.width, query.height)
        image = self.images.get(query.image_id)
        if image is None or not image.detections:
            if image is None and self.images:
                log.warning("no detections loaded for image %s; whole-image fallback",
                            query.image_id)
            return PredictionRow(
                query.image_id, index, whole, None, None, config.strategy.value
            )
        if (image.width, image.height) != (query.width, query.height) and (
            query.image_id not in self._size_warned
        ):
            self._size_warned.add(query.image_id)
            log.warning(
                "image %s: query file says %dx%d but dumps say %dx%d",
                query.image_id, query.width, query.height, image.width, image.height,
            )
        seed = derive_seed(config.seed, query.image_id, index)
        if config.similarity is SimilarityMode.NO_FILTER:
            prediction, candidates = self._run_unfiltered(image, seed)
        else:
            prediction, candidates = self._run_filtered(image, query, seed)
        return PredictionRow(
            query.image_id,
            index,
            prediction.box,
            prediction.concept,
            prediction.score,
            config.strategy.value,
            candidates,
        )

    def _run_unfiltered(self, image: ImageDetections, seed: int):
        pool = image.detections
        strategy = self.config.strategy
        if strategy is Strategy.RANDOM:
            box = strategy_random(pool, seed)
        elif strategy is Strategy.LARGEST:
            box = strategy_largest(pool)
        elif strategy is Strategy.CONFIDENCE:
            box = strategy_confidence(pool)
        else:
            box = union_box([d.box for d in pool])
        return Prediction(box=box), [d.box for d in pool]

    def _run_filtered(self, image: ImageDetections, query: Query, seed: int):
        rep = concept_selection.represent_query(
            self.table, self.corrector, query.phrase, self.config.similarity
        )
        whole = BoundingBox(0, 0, image.width, image.height)
        if rep.is_empty:
            return Prediction(box=whole, note="no_vocabulary_fallback"), []
        scored = concept_selection.score_concepts(rep, self._groups(query.image_id))
        prediction = localize_detailed(
            scored,
            self.config.strategy,
            image.width,
            image.height,
            self.config.consensus,
            seed,
        )
        # Candidate set for upperbounds: what concept selection narrowed the
        # image down to, i.e. the top-ranked concept's instances. It depends
        # on the similarity mode only, never the strategy.
        candidates = [d.box for d in scored[0].group.instances] if scored else []
        return prediction, candidates


def worker_count() -> int:
    env = os.environ.get("GROUNDCAST_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_queries(engine: Engine, queries: list[Query]) -> list[PredictionRow]:
    """Process all queries; output order always matches input order."""
    workers = worker_count()
    indexed = list(enumerate(queries))
    if workers == 1:
        return [engine.run_query(i, q) for i, q in indexed]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda iq: engine.run_query(*iq), indexed))


def write_predictions(rows: list[PredictionRow], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for row in rows:
            writer.writerow(
                [
                    row.image_id,
                    row.query_index,
                    format_box(row.box),
                    row.concept if row.concept is not None else "-",
                    f"{row.score:.6f}" if row.score is not None else "-",
                    row.strategy,
                    ";".join(format_box(b) for b in row.candidates),
                ]
            )


def read_predictions(path) -> list[PredictionRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not rec:
                continue
            if len(rec) not in (6, 7):
                raise ValueError(f"{path}: line {lineno}: expected 6 or 7 TSV columns")
            candidates = []
            if len(rec) == 7 and rec[6]:
                candidates = [parse_box(t) for t in rec[6].split(";") if t]
            rows.append(
                PredictionRow(
                    image_id=rec[0],
                    query_index=int(rec[1]),
                    box=parse_box(rec[2]),
                    concept=None if rec[3] == "-" else rec[3],
                    score=None if rec[4] == "-" else float(rec[4]),
                    strategy=rec[5],
                    candidates=candidates,
                )
            )
    return rows


def build_engine(
    config: RunConfig,
    embeddings_path=None,
    frequency_path=None,
    detection_files: list[tuple[str, str]] | None = None,
    table: EmbeddingTable | None = None,
) -> Engine:
    if table is None and embeddings_path is not None:
        table = load_table(embeddings_path, frequency_path)
    images: dict[str, ImageDetections] = {}
    if detection_files:
        images, dropped = load_detection_files(detection_files, config)
        if dropped:
            log.warning("dropped %d degenerate detection boxes at ingest", dropped)
    return Engine(config, table, images)
