"""Batch inference over image folders, dumping groundcast detection JSON.

Detection models emit one record per box in engine coordinates (integer
pixels, max-exclusive corners, clamped to the image). Classification models
(scene classifiers) emit box-less records, one per class; the engine's
ingest turns those into whole-image boxes and applies the top-k/threshold
rules. No thresholding or NMS happens here beyond the model's own defaults,
so a single dump supports every engine-side experiment.

Next to the dump, a ``<output>.report.json`` records the model identifier,
weights provenance and any skipped images.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torchvision.models import get_model, get_model_weights

from detector_export.manifest import (
    WEIGHTS_DEFAULT,
    WEIGHTS_UNTRAINED,
    ExportManifest,
    load_labels,
)

log = logging.getLogger("detexport")

SKIP_LABELS = {"__background__", "N/A"}


class ModelLoadError(RuntimeError):
    def __init__(self, model: str, cause: Exception):
        super().__init__(f"failed to load model {model!r}: {cause}")
        self.model = model


def build_model(manifest: ExportManifest, num_classes: int):
    kwargs = dict(manifest.model_kwargs)
    try:
        if manifest.weights == WEIGHTS_DEFAULT:
            weights = get_model_weights(manifest.model).DEFAULT
            model = get_model(manifest.model, weights=weights, **kwargs)
            provenance = f"torchvision default weights ({weights})"
        elif manifest.weights == WEIGHTS_UNTRAINED:
            if manifest.kind == "classification":
                kwargs.setdefault("num_classes", num_classes)
            else:
                kwargs.setdefault("weights_backbone", None)
            model = get_model(manifest.model, weights=None, **kwargs)
            provenance = "UNTRAINED (random init; plumbing runs only)"
        else:
            if manifest.kind == "classification":
                kwargs.setdefault("num_classes", num_classes)
            else:
                kwargs.setdefault("weights_backbone", None)
            model = get_model(manifest.model, weights=None, **kwargs)
            state = torch.load(manifest.weights, map_location="cpu")
            model.load_state_dict(state.get("state_dict", state))
            provenance = f"checkpoint {manifest.weights}"
    except Exception as exc:  # surface the model id, per contract
        raise ModelLoadError(manifest.model, exc) from exc
    model.eval()
    return model, provenance


def load_image(path: Path) -> torch.Tensor:
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(rgb).permute(2, 0, 1)


def _int_box(xyxy, width: int, height: int):
    """Engine coordinates: ints, max-exclusive, clamped; None if it vanishes."""
    x0 = max(0, int(math.floor(float(xyxy[0]))))
    y0 = max(0, int(math.floor(float(xyxy[1]))))
    x1 = min(width, int(math.ceil(float(xyxy[2]))))
    y1 = min(height, int(math.ceil(float(xyxy[3]))))
    if x0 >= width or y0 >= height:
        return None
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)
    if x1 > width or y1 > height:
        return None
    return [x0, y0, x1, y1]


def _label_entry(labels: list[str], idx: int) -> dict | None:
    if not 0 <= idx < len(labels):
        return None
    name = labels[idx]
    if name in SKIP_LABELS or not name:
        return None
    if "/" in name:  # synset-style labels: term1/term2/...
        return {"synset": name.split("/")}
    return {"label": name}


@torch.no_grad()
def export_detections(manifest: ExportManifest) -> dict:
    """Run the manifest's model over its images; returns the report dict."""
    manifest.validate()
    labels = load_labels(manifest.labels)
    model, provenance = build_model(manifest, num_classes=len(labels))
    records = []
    errors = []
    n_detections = 0
    for path in manifest.image_paths():
        try:
            tensor = load_image(path)
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            log.warning("skipping %s: %s", path, exc)
            errors.append({"image": str(path), "error": str(exc)})
            continue
        height, width = tensor.shape[1], tensor.shape[2]
        if manifest.kind == "detection":
            detections = _detect(model, tensor, labels, manifest, width, height)
        else:
            detections = _classify(model, tensor, labels, manifest)
        n_detections += len(detections)
        records.append(
            {
                "image_id": path.stem,
                "width": width,
                "height": height,
                "detections": detections,
            }
        )
    out = Path(manifest.output)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")
    report = {
        "detector_id": manifest.detector_id,
        "model": manifest.model,
        "weights": provenance,
        "confidence_floor": manifest.confidence_floor,
        "images": len(records),
        "detections": n_detections,
        "errors": errors,
        "output": str(out),
    }
    with open(out.with_suffix(out.suffix + ".report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    return report


def _detect(model, tensor, labels, manifest, width, height) -> list[dict]:
    (result,) = model([tensor])
    detections = []
    for xyxy, cls, score in zip(
        result["boxes"].tolist(), result["labels"].tolist(), result["scores"].tolist()
    ):
        if score < manifest.confidence_floor:
            continue
        entry = _label_entry(labels, int(cls))
        if entry is None:
            continue
        box = _int_box(xyxy, width, height)
        if box is None:
            continue
        entry.update(
            box=box,
            confidence=min(1.0, max(0.0, float(score))),
            detector_id=manifest.detector_id,
        )
        detections.append(entry)
    return detections


def _classify(model, tensor, labels, manifest) -> list[dict]:
    logits = model(tensor.unsqueeze(0))
    probs = torch.softmax(logits, dim=1)[0].tolist()
    detections = []
    for idx, prob in enumerate(probs):
        if prob < manifest.confidence_floor:
            continue
        entry = _label_entry(labels, idx)
        if entry is None:
            continue
        entry.update(
            confidence=min(1.0, max(0.0, float(prob))),
            detector_id=manifest.detector_id,
        )
        detections.append(entry)
    return detections
