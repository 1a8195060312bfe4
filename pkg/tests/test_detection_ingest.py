import json

import numpy as np
import pytest

from groundcast.detection_ingest import (
    Detection,
    ImageDetections,
    SchemaError,
    VOC20_LABELS,
    build_concept_groups,
    load_category_file,
    load_detections,
    places_to_boxes,
    subset_categories,
    threshold_confidence,
)
from groundcast.embedding_store import EmbeddingTable
from groundcast.geometry import BoundingBox


def write_dump(tmp_path, records, name="dets.json"):
    p = tmp_path / name
    p.write_text(json.dumps(records))
    return p


def det(label, box, conf=0.5, detector="tfcoco", synset=None):
    return Detection(label, BoundingBox(*box), conf, detector, synset)


@pytest.fixture
def table():
    return EmbeddingTable(
        dimension=3,
        entries={
            "person": np.array([1.0, 0.0, 0.0]),
            "car": np.array([0.0, 1.0, 0.0]),
            "automobile": np.array([0.0, 0.0, 1.0]),
        },
    )


class TestLoadDetections:
    def test_basic(self, tmp_path):
        p = write_dump(
            tmp_path,
            [
                {
                    "image_id": "im1",
                    "width": 100,
                    "height": 80,
                    "detections": [
                        {"label": "person", "box": [0, 0, 10, 10], "confidence": 0.9},
                        {"label": "car", "box": [5, 5, 30, 30], "confidence": 0.4},
                    ],
                }
            ],
        )
        load = load_detections(p, default_detector="tfcoco")
        assert len(load.images) == 1
        assert len(load.images[0].detections) == 2
        assert load.dropped == 0

    def test_degenerate_box_dropped_with_count(self, tmp_path):
        p = write_dump(
            tmp_path,
            [
                {
                    "image_id": "im1",
                    "width": 100,
                    "height": 80,
                    "detections": [
                        {"label": "a", "box": [10, 0, 10, 10], "confidence": 0.9},
                        {"label": "b", "box": [0, 0, 10, 10], "confidence": 0.9},
                    ],
                }
            ],
        )
        load = load_detections(p, default_detector="tfcoco")
        assert load.dropped == 1
        assert len(load.images[0].detections) == 1

    def test_clamping_to_bounds(self, tmp_path):
        p = write_dump(
            tmp_path,
            [
                {
                    "image_id": "im1",
                    "width": 50,
                    "height": 40,
                    "detections": [
                        {"label": "a", "box": [-5, -5, 60, 45], "confidence": 0.9},
                    ],
                }
            ],
        )
        load = load_detections(p, default_detector="tfcoco")
        assert load.images[0].detections[0].box == BoundingBox(0, 0, 50, 40)

    def test_missing_width_is_schema_error(self, tmp_path):
        p = write_dump(
            tmp_path, [{"image_id": "im1", "height": 80, "detections": []}]
        )
        with pytest.raises(SchemaError, match="width"):
            load_detections(p, default_detector="tfcoco")

    def test_unknown_detector_id(self, tmp_path):
        p = write_dump(
            tmp_path,
            [{"image_id": "im1", "width": 10, "height": 10, "detections": [
                {"label": "a", "box": [0, 0, 5, 5], "confidence": 0.5,
                 "detector_id": "resnet"}]}],
        )
        with pytest.raises(SchemaError, match="unknown detector_id"):
            load_detections(p)

    def test_boxless_places_records_become_whole_image(self, tmp_path):
        p = write_dump(
            tmp_path,
            [
                {
                    "image_id": "im1",
                    "width": 64,
                    "height": 48,
                    "detections": [
                        {"label": "beach", "confidence": 0.8},
                        {"label": "harbor", "confidence": 0.05},
                    ],
                }
            ],
        )
        load = load_detections(p, default_detector="places365")
        dets = load.images[0].detections
        assert [d.label for d in dets] == ["beach"]
        assert dets[0].box == BoundingBox(0, 0, 64, 48)

    def test_boxless_non_places_is_schema_error(self, tmp_path):
        p = write_dump(
            tmp_path,
            [{"image_id": "im1", "width": 10, "height": 10, "detections": [
                {"label": "a", "confidence": 0.5}]}],
        )
        with pytest.raises(SchemaError, match="box"):
            load_detections(p, default_detector="tfcoco")

    def test_synset_labels(self, tmp_path):
        p = write_dump(
            tmp_path,
            [{"image_id": "im1", "width": 10, "height": 10, "detections": [
                {"synset": ["car", "automobile"], "box": [0, 0, 5, 5],
                 "confidence": 0.5}]}],
        )
        load = load_detections(p, default_detector="yolo9000")
        d = load.images[0].detections[0]
        assert d.synset == ("car", "automobile")
        assert d.label == "car/automobile"


class TestThreshold:
    def test_inclusive_boundary(self):
        dets = ImageDetections(
            "im", 100, 100,
            [det("a", (0, 0, 5, 5), c) for c in (0.05, 0.1, 0.11, 0.30)],
        )
        kept = threshold_confidence(dets, {"tfcoco": 0.1})
        assert [d.confidence for d in kept.detections] == [0.1, 0.11, 0.30]

    def test_empty(self):
        dets = ImageDetections("im", 100, 100, [])
        assert threshold_confidence(dets, {"tfcoco": 0.1}).detections == []

    def test_commutes_with_subset(self):
        dets = ImageDetections(
            "im", 100, 100,
            [
                det("person", (0, 0, 5, 5), 0.05),
                det("person", (0, 0, 5, 5), 0.5),
                det("kite", (0, 0, 5, 5), 0.9),
            ],
        )
        thr = {"tfcoco": 0.1}
        a = subset_categories(threshold_confidence(dets, thr), VOC20_LABELS)
        b = threshold_confidence(subset_categories(dets, VOC20_LABELS), thr)
        assert a.detections == b.detections
        assert [d.label for d in a.detections] == ["person"]


class TestSubset:
    def test_identity_when_all_allowed(self):
        dets = ImageDetections("im", 10, 10, [det("x", (0, 0, 5, 5))])
        assert subset_categories(dets, {"x"}).detections == dets.detections

    def test_empty_allowed(self):
        dets = ImageDetections("im", 10, 10, [det("x", (0, 0, 5, 5))])
        assert subset_categories(dets, set()).detections == []

    def test_case_insensitive(self):
        dets = ImageDetections("im", 10, 10, [det("Person", (0, 0, 5, 5))])
        assert len(subset_categories(dets, VOC20_LABELS).detections) == 1

    def test_category_file(self, tmp_path):
        p = tmp_path / "cats.txt"
        p.write_text("# voc\nperson\nDog\n\n")
        assert load_category_file(p) == {"person", "dog"}


class TestPlacesToBoxes:
    def test_all_qualify(self):
        out = places_to_boxes([("a", 0.5), ("b", 0.3), ("c", 0.1)], 64, 48)
        assert len(out) == 3
        assert all(d.box == BoundingBox(0, 0, 64, 48) for d in out)

    def test_top_k_cap(self):
        scores = [(f"l{i:02d}", 0.1 + i / 100) for i in range(25)]
        out = places_to_boxes(scores, 10, 10, top_k=20)
        assert len(out) == 20
        assert min(d.confidence for d in out) == pytest.approx(0.15)

    def test_none_qualify(self):
        assert places_to_boxes([("a", 0.09)], 10, 10) == []


class TestConceptGroups:
    def test_grouping_partitions(self, table):
        dets = ImageDetections(
            "im", 100, 100,
            [
                det("person", (0, 0, 5, 5)),
                det("person", (10, 10, 20, 20)),
                det("car", (30, 30, 50, 50)),
            ],
        )
        groups = build_concept_groups(dets, table)
        sizes = sorted(len(g.instances) for g in groups)
        assert sizes == [1, 2]
        assert sum(sizes) == len(dets.detections)

    def test_same_label_across_detectors_merges(self, table):
        dets = ImageDetections(
            "im", 100, 100,
            [
                det("person", (0, 0, 5, 5), detector="tfcoco"),
                det("Person", (10, 10, 20, 20), detector="tfoid"),
            ],
        )
        groups = build_concept_groups(dets, table)
        assert len(groups) == 1 and len(groups[0].instances) == 2

    def test_synset_group_uses_synset_vector(self, table):
        dets = ImageDetections(
            "im", 100, 100,
            [det("car/automobile", (0, 0, 5, 5), detector="yolo9000",
                 synset=("car", "automobile"))],
        )
        (group,) = build_concept_groups(dets, table)
        r = 1 / np.sqrt(2)
        assert np.allclose(group.label_vector.values, [0, r, r], atol=1e-12)

    def test_unscoreable_group_kept_and_flagged(self, table):
        dets = ImageDetections("im", 100, 100, [det("qzxv", (0, 0, 5, 5))])
        (group,) = build_concept_groups(dets, table)
        assert not group.scoreable
        assert len(group.instances) == 1
