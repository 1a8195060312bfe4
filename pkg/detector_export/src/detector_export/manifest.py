"""Export manifests: which model, which weights, which images, where to."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DETECTOR_IDS = {"tfcoco", "tfcoco20", "tfoid", "places365", "yolo9000", "colour"}
KINDS = {"detection", "classification"}

# Weights sentinel values (anything else is a checkpoint path):
#   DEFAULT   - the torchvision pretrained weights for the architecture
#   untrained - random initialization; plumbing/smoke runs only, and the
#               provenance lands in the report so nobody mistakes the dump
#               for real detections
WEIGHTS_DEFAULT = "DEFAULT"
WEIGHTS_UNTRAINED = "untrained"


@dataclass
class ExportManifest:
    detector_id: str
    model: str
    labels: str  # path to one-name-per-line file, line N = class id N
    output: str
    kind: str = "detection"
    weights: str = WEIGHTS_DEFAULT
    confidence_floor: float = 0.0  # thresholds belong to the engine
    images: list[str] = field(default_factory=list)
    images_dir: str | None = None
    model_kwargs: dict = field(default_factory=dict)

    def validate(self):
        if self.detector_id not in DETECTOR_IDS:
            raise ValueError(f"unknown detector_id {self.detector_id!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {sorted(KINDS)}")
        if self.kind == "classification" and self.detector_id != "places365":
            raise ValueError("classification exports must use detector_id places365")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValueError("confidence_floor must be in [0, 1]")
        if not self.images and not self.images_dir:
            raise ValueError("manifest lists no images")

    def image_paths(self) -> list[Path]:
        paths = [Path(p) for p in self.images]
        if self.images_dir:
            root = Path(self.images_dir)
            paths += sorted(
                p for p in root.iterdir()
                if p.suffix.lower() in (".jpg", ".jpeg", ".png", ".ppm", ".bmp")
            )
        return paths


def load_manifest(path) -> ExportManifest:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        manifest = ExportManifest(**raw)
    except TypeError as exc:
        raise ValueError(f"{path}: {exc}") from None
    manifest.validate()
    return manifest


def load_labels(path) -> list[str]:
    labels = Path(path).read_text(encoding="utf-8").splitlines()
    if not labels:
        raise ValueError(f"{path}: empty labels file")
    return [lab.strip() for lab in labels]
