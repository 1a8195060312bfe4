import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

EMBEDDINGS = """\
person 1 0 0 0
man 0.9 0.1 0 0
dog 0 1 0 0
puppy 0.1 0.9 0 0
car 0 0 1 0
vehicle 0.05 0 0.95 0
tree 0 0 0 1
blue 0.3 0.3 0.3 0.3
a 0.25 0.25 0.25 0.25
the 0.25 0.25 0.25 0.25
"""

TFCOCO = [
    {
        "image_id": "im1",
        "width": 100,
        "height": 80,
        "detections": [
            {"label": "person", "box": [10, 10, 40, 70], "confidence": 0.9},
            {"label": "person", "box": [50, 10, 80, 70], "confidence": 0.8},
            {"label": "dog", "box": [60, 40, 90, 75], "confidence": 0.7},
            {"label": "cat", "box": [0, 0, 10, 10], "confidence": 0.05},
        ],
    },
    {
        "image_id": "im2",
        "width": 120,
        "height": 90,
        "detections": [
            {"label": "car", "box": [10, 20, 60, 60], "confidence": 0.95},
        ],
    },
]

TFOID = [
    {
        "image_id": "im2",
        "width": 120,
        "height": 90,
        "detections": [
            {"label": "Car", "box": [12, 22, 58, 58], "confidence": 0.6},
            {"label": "Tree", "box": [70, 10, 110, 80], "confidence": 0.5},
        ],
    },
]

QUERIES_TSV = """\
im1\t100\t80\ta man\tpeople\t10,10,40,70
im1\t100\t80\tpuppy\tanimals\t60,40,90,75
im2\t120\t90\tthe vehicle\tvehicles\t10,20,60,60
im3\t64\t64\tdog\tanimals\t5,5,40,40
"""


@pytest.fixture(scope="session")
def world(tmp_path_factory):
    """A tiny but complete input set: embeddings, two detector dumps, queries."""
    root = tmp_path_factory.mktemp("world")
    paths = {
        "embeddings": root / "embeddings.txt",
        "tfcoco": root / "tfcoco.json",
        "tfoid": root / "tfoid.json",
        "queries": root / "queries.tsv",
        "root": root,
    }
    paths["embeddings"].write_text(EMBEDDINGS)
    paths["tfcoco"].write_text(json.dumps(TFCOCO))
    paths["tfoid"].write_text(json.dumps(TFOID))
    paths["queries"].write_text(QUERIES_TSV)
    return paths


@pytest.fixture()
def baseline_queries() -> Path:
    return FIXTURES / "whole_image_200.tsv"
