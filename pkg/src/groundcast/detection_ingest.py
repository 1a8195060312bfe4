"""Load per-image detector dumps and materialize concept groups.

Detection JSON schema (one file per detector per split): a top-level list of
objects ``{image_id, width, height, detections: [...]}`` where each detection
is ``{label | synset: [...], box: [x_min, y_min, x_max, y_max], confidence}``
plus an optional ``detector_id`` overriding the file-level default. Scene
classifier dumps (places365) use the same schema with ``box`` omitted; those
records are turned into whole-image boxes at load time, keeping the top-k
highest-confidence labels.

Boxes are clamped to image bounds; records that collapse to zero area are
dropped and counted, never silently ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from groundcast import embedding_store
from groundcast.embedding_store import Corrector, EmbeddingTable, PhraseVector
from groundcast.geometry import BoundingBox

DETECTOR_IDS = frozenset(
    {"tfcoco", "tfcoco20", "tfoid", "places365", "yolo9000", "colour"}
)

# Default category subset for deriving tfcoco20 from a tfcoco dump: the 20
# PASCAL VOC categories under both VOC and COCO label spellings, so dumps in
# either convention filter correctly. Override with a category file when a
# dataset uses different strings.
VOC20_LABELS = frozenset(
    {
        "aeroplane", "airplane",
        "bicycle",
        "bird",
        "boat",
        "bottle",
        "bus",
        "car",
        "cat",
        "chair",
        "cow",
        "diningtable", "dining table",
        "dog",
        "horse",
        "motorbike", "motorcycle",
        "person",
        "pottedplant", "potted plant",
        "sheep",
        "sofa", "couch",
        "train",
        "tvmonitor", "tv",
    }
)


@dataclass(frozen=True)
class Detection:
    label: str
    box: BoundingBox
    confidence: float
    detector_id: str
    synset: tuple[str, ...] | None = None

    @property
    def concept_key(self):
        """Grouping identity: lowercased label, or the synset term tuple."""
        if self.synset is not None:
            return ("synset", self.synset)
        return ("label", self.label.lower())


@dataclass
class ImageDetections:
    image_id: str
    width: int
    height: int
    detections: list[Detection] = field(default_factory=list)


@dataclass
class ConceptGroup:
    label: str
    label_vector: PhraseVector
    instances: list[Detection]

    @property
    def scoreable(self) -> bool:
        return not self.label_vector.is_empty


@dataclass
class DetectionLoad:
    images: list[ImageDetections]
    dropped: int = 0  # degenerate boxes removed by clamping


class SchemaError(ValueError):
    pass


def load_category_file(path) -> set[str]:
    """One label per line; blank lines and #-comments skipped; lowercased."""
    allowed = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            label = line.strip()
            if label and not label.startswith("#"):
                allowed.add(label.lower())
    return allowed


def _require(record: dict, key: str, image_id: str, path: str):
    if key not in record:
        raise SchemaError(f"image {image_id!r}: missing field {path}{key}")
    return record[key]


def load_detections(
    path,
    default_detector: str | None = None,
    places_top_k: int = 20,
    places_min_conf: float = 0.1,
) -> DetectionLoad:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: top level must be a list of image records")

    images: list[ImageDetections] = []
    dropped = 0
    for record in raw:
        image_id = str(record.get("image_id", "<missing>"))
        if "image_id" not in record:
            raise SchemaError("missing field image_id")
        width = int(_require(record, "width", image_id, ""))
        height = int(_require(record, "height", image_id, ""))
        if width <= 0 or height <= 0:
            raise SchemaError(f"image {image_id!r}: non-positive width/height")
        dets: list[Detection] = []
        scene_scores: list[tuple[str, float]] = []
        for i, d in enumerate(_require(record, "detections", image_id, "")):
            prefix = f"detections[{i}]."
            detector = d.get("detector_id", default_detector)
            if detector is None:
                raise SchemaError(
                    f"image {image_id!r}: missing field {prefix}detector_id "
                    "(and no file-level detector given)"
                )
            if detector not in DETECTOR_IDS:
                raise SchemaError(
                    f"image {image_id!r}: unknown detector_id {detector!r}"
                )
            synset = None
            if "synset" in d:
                synset = tuple(str(t) for t in d["synset"])
                if not synset:
                    raise SchemaError(f"image {image_id!r}: empty {prefix}synset")
                label = "/".join(synset)
            else:
                label = str(_require(d, "label", image_id, prefix))
            confidence = float(_require(d, "confidence", image_id, prefix))
            if not 0.0 <= confidence <= 1.0:
                raise SchemaError(
                    f"image {image_id!r}: {prefix}confidence outside [0,1]"
                )
            if "box" not in d:
                if detector != "places365":
                    raise SchemaError(f"image {image_id!r}: missing field {prefix}box")
                scene_scores.append((label, confidence))
                continue
            box = d["box"]
            if not (isinstance(box, list) and len(box) == 4):
                raise SchemaError(
                    f"image {image_id!r}: {prefix}box must be [x_min,y_min,x_max,y_max]"
                )
            clamped = _clamp_box(*(int(v) for v in box), width, height)
            if clamped is None:
                dropped += 1
                continue
            dets.append(
                Detection(
                    label=label,
                    box=clamped,
                    confidence=confidence,
                    detector_id=detector,
                    synset=synset,
                )
            )
        if scene_scores:
            dets.extend(
                places_to_boxes(
                    scene_scores, width, height,
                    top_k=places_top_k, min_conf=places_min_conf,
                )
            )
        images.append(ImageDetections(image_id, width, height, dets))
    return DetectionLoad(images=images, dropped=dropped)


def _clamp_box(x0: int, y0: int, x1: int, y1: int, width: int, height: int):
    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(width, x1), min(height, y1)
    if x0 >= x1 or y0 >= y1:
        return None
    return BoundingBox(x0, y0, x1, y1)


def threshold_confidence(
    dets: ImageDetections, per_detector_threshold: dict[str, float]
) -> ImageDetections:
    """Keep detections with confidence >= their detector's threshold.

    The boundary is inclusive; detectors absent from the map keep everything.
    """
    kept = [
        d
        for d in dets.detections
        if d.confidence >= per_detector_threshold.get(d.detector_id, 0.0)
    ]
    return ImageDetections(dets.image_id, dets.width, dets.height, kept)


def subset_categories(dets: ImageDetections, allowed: set[str]) -> ImageDetections:
    """Keep detections whose (lowercased) label is in `allowed`."""
    allowed_lower = {a.lower() for a in allowed}
    kept = [d for d in dets.detections if d.label.lower() in allowed_lower]
    return ImageDetections(dets.image_id, dets.width, dets.height, kept)


def places_to_boxes(
    scores: list[tuple[str, float]],
    width: int,
    height: int,
    top_k: int = 20,
    min_conf: float = 0.1,
) -> list[Detection]:
    """Whole-image detections for the top_k scene labels scoring >= min_conf."""
    qualifying = [(label, conf) for label, conf in scores if conf >= min_conf]
    qualifying.sort(key=lambda lc: (-lc[1], lc[0]))
    return [
        Detection(
            label=label,
            box=BoundingBox(0, 0, width, height),
            confidence=conf,
            detector_id="places365",
        )
        for label, conf in qualifying[:top_k]
    ]


def build_concept_groups(
    dets: ImageDetections,
    table: EmbeddingTable,
    corrector: Corrector | None = None,
) -> list[ConceptGroup]:
    """Group detections by concept label and attach each label's vector.

    Plain labels are lowercased and embedded by phrase rules; synset labels
    sum their terms. Groups whose label has no representation are kept but
    flagged unscoreable (they still count for no-filter upperbounds).
    """
    by_key: dict[tuple, list[Detection]] = {}
    for det in dets.detections:
        by_key.setdefault(det.concept_key, []).append(det)
    groups = []
    for key, instances in by_key.items():
        first = instances[0]
        if first.synset is not None:
            label = "/".join(first.synset)
            vector = embedding_store.synset_vector(table, list(first.synset), corrector)
        else:
            label = first.label.lower()
            vector = embedding_store.phrase_vector(
                table, embedding_store.tokenize(label), corrector
            )
        groups.append(ConceptGroup(label=label, label_vector=vector, instances=instances))
    return groups
